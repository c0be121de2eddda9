#include "rml/util.hpp"

#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace rml {

namespace {
thread_local bool inside_pool_job = false;

int configured_threads() {
  if (const char* env = std::getenv("RML_THREADS")) {
    int n = std::atoi(env);
    if (n >= 1) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : int(hw);
}
}  // namespace

// Shared-ownership job object: workers that wake late simply find the
// chunk counter exhausted; the function object cannot dangle because every
// participant holds a reference.
struct PoolJob {
  std::function<void(int)> fn;
  int total = 0;
  std::atomic<int> next{0};
  std::atomic<int> completed{0};
  std::mutex err_mu;
  std::exception_ptr error;
};

struct ThreadPool::Impl {
  std::mutex mu;
  std::condition_variable cv_work;
  std::condition_variable cv_done;
  std::shared_ptr<PoolJob> job;
  uint64_t generation = 0;
  bool shutdown = false;
  std::vector<std::thread> workers;

  // Claims and runs chunks until the counter is exhausted. Every claimed
  // chunk is counted as completed even on exception (the first exception is
  // recorded and rethrown by the caller once all chunks have finished), so
  // the caller never unwinds while another thread still runs its lambda.
  static void drain(PoolJob& j) {
    inside_pool_job = true;
    for (;;) {
      const int c = j.next.fetch_add(1);
      if (c >= j.total) break;
      try {
        j.fn(c);
      } catch (...) {
        std::lock_guard lk(j.err_mu);
        if (!j.error) j.error = std::current_exception();
      }
      j.completed.fetch_add(1);
    }
    inside_pool_job = false;
  }

  void worker_loop() {
    uint64_t seen = 0;
    for (;;) {
      std::shared_ptr<PoolJob> j;
      {
        std::unique_lock lk(mu);
        cv_work.wait(lk, [&] { return shutdown || generation != seen; });
        if (shutdown) return;
        seen = generation;
        j = job;
      }
      if (!j) continue;
      drain(*j);
      {
        // pairing with the waiter's predicate check under the same mutex
        std::lock_guard lk(mu);
      }
      cv_done.notify_all();
    }
  }
};

ThreadPool::ThreadPool(int nthreads) : impl_(new Impl), nthreads_(nthreads) {
  for (int i = 1; i < nthreads; ++i)
    impl_->workers.emplace_back([this] { impl_->worker_loop(); });
}

ThreadPool::~ThreadPool() {
  {
    std::lock_guard lk(impl_->mu);
    impl_->shutdown = true;
  }
  impl_->cv_work.notify_all();
  for (auto& w : impl_->workers) w.join();
  delete impl_;
}

ThreadPool& ThreadPool::instance() {
  static ThreadPool pool(configured_threads());
  return pool;
}

void ThreadPool::run_chunks(int chunks, const std::function<void(int)>& fn) {
  if (chunks <= 0) return;
  if (chunks == 1 || nthreads_ == 1 || inside_pool_job) {
    for (int c = 0; c < chunks; ++c) fn(c);
    return;
  }
  auto j = std::make_shared<PoolJob>();
  j->fn = fn;
  j->total = chunks;
  {
    std::lock_guard lk(impl_->mu);
    impl_->job = j;
    ++impl_->generation;
  }
  impl_->cv_work.notify_all();
  Impl::drain(*j);  // the calling thread joins in
  {
    std::unique_lock lk(impl_->mu);
    impl_->cv_done.wait(lk, [&] { return j->completed.load() == j->total; });
    impl_->job.reset();
  }
  if (j->error) std::rethrow_exception(j->error);
}

void parallel_for(size_t n, const std::function<void(size_t, size_t)>& body) {
  if (n == 0) return;
  ThreadPool& pool = ThreadPool::instance();
  int chunks = int(std::min<size_t>(size_t(pool.size()), n));
  if (chunks <= 1) {
    body(0, n);
    return;
  }
  pool.run_chunks(chunks, [&](int c) {
    size_t begin = n * size_t(c) / size_t(chunks);
    size_t end = n * size_t(c + 1) / size_t(chunks);
    if (begin < end) body(begin, end);
  });
}

void parallel_for(size_t n, size_t min_parallel,
                  const std::function<void(size_t, size_t)>& body) {
  if (n == 0) return;
  if (n < min_parallel) {
    body(0, n);
    return;
  }
  parallel_for(n, body);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void atomic_write_file(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
  }
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for write: " + tmp.string());
    out.write(contents.data(), std::streamsize(contents.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw std::runtime_error("write failed: " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw std::runtime_error("rename failed for: " + path);
  }
}

void atomic_write_file(const std::string& path,
                       const std::function<void(std::string&)>& fill) {
  std::string buf;
  fill(buf);
  atomic_write_file(path, buf);
}

bool env_flag_set(const char* name, const char* value) {
  const char* env = std::getenv(name);
  return env != nullptr && std::strcmp(env, value) == 0;
}

}  // namespace rml
