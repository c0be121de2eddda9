#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace rml {

// Persistent worker pool used by the compute kernels and the dataset
// generator. Work is split into contiguous chunks with a fixed mapping from
// chunk index to range, so results never depend on thread scheduling.
class ThreadPool {
 public:
  static ThreadPool& instance();

  int size() const { return nthreads_; }

  // Runs fn(chunk) for chunk in [0, chunks), blocking until all complete.
  // Safe to call from inside a running chunk; nested calls execute inline.
  void run_chunks(int chunks, const std::function<void(int)>& fn);

  ~ThreadPool();

 private:
  explicit ThreadPool(int nthreads);
  struct Impl;
  Impl* impl_;
  int nthreads_;
};

// Splits [0, n) into at most ThreadPool::size() contiguous chunks and runs
// body(begin, end) for each, in parallel. Deterministic partition.
void parallel_for(size_t n, const std::function<void(size_t, size_t)>& body);

// Serial threshold variant: runs inline when n < min_parallel.
void parallel_for(size_t n, size_t min_parallel,
                  const std::function<void(size_t, size_t)>& body);

std::string read_text_file(const std::string& path);

// Writes via a temporary file in the same directory followed by an atomic
// rename, so failed stages never leave partial outputs behind.
void atomic_write_file(const std::string& path, const std::string& contents);
void atomic_write_file(const std::string& path,
                       const std::function<void(std::string&)>& fill);

bool env_flag_set(const char* name, const char* value);

}  // namespace rml
