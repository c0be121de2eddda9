#include "rml/tsne.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "rml/kernels.hpp"
#include "rml/rng.hpp"
#include "rml/util.hpp"

namespace rml::embed {

using kernels::ops;

namespace {
constexpr double kProbFloor = 1e-12;
}

void TsneConfig::validate(size_t n) const {
  if (iterations < 1) throw std::invalid_argument("tsne: iterations >= 1");
  if (n > max_points)
    throw std::invalid_argument("tsne: N exceeds the configured cap of " +
                                std::to_string(max_points));
  if (!(perplexity > 1.0) || perplexity >= double(n - 1) / 3.0)
    throw std::invalid_argument(
        "tsne: perplexity must satisfy 1 < perplexity < (N-1)/3");
  if (kl_record_interval < 1)
    throw std::invalid_argument("tsne: kl_record_interval >= 1");
}

std::vector<double> pairwise_sq_dists(const std::vector<double>& x, size_t n,
                                      size_t d) {
  if (n < 2) throw std::invalid_argument("pairwise_sq_dists: need N >= 2");
  if (x.size() != n * d) throw std::invalid_argument("pairwise_sq_dists: size");
  std::vector<double> out(n * n, 0.0);
  parallel_for(n, 4, [&](size_t lo, size_t hi) {
    for (size_t i = lo; i < hi; ++i)
      for (size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        out[i * n + j] = ops().dsqdist(x.data() + i * d, x.data() + j * d, d);
      }
  });
  return out;
}

std::vector<double> perplexity_calibration(const std::vector<double>& sq_dists,
                                           size_t n, double perplexity) {
  if (sq_dists.size() != n * n)
    throw std::invalid_argument("perplexity_calibration: matrix size");
  if (!(perplexity > 1.0) || perplexity >= double(n - 1) / 3.0)
    throw std::invalid_argument("perplexity_calibration: infeasible perplexity");

  std::vector<double> p(n * n, 0.0);
  std::atomic<int> failed_row{-1};

  parallel_for(n, 2, [&](size_t lo, size_t hi) {
    std::vector<double> row(n);
    for (size_t i = lo; i < hi; ++i) {
      const double* drow = sq_dists.data() + i * n;
      // subtract the smallest off-diagonal distance for exp() stability
      double dmin = 0.0;
      bool first = true;
      for (size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        if (first || drow[j] < dmin) {
          dmin = drow[j];
          first = false;
        }
      }

      double beta = 1.0;
      double beta_lo = 0.0, beta_hi = 0.0;
      bool has_lo = false, has_hi = false;
      bool ok = false;
      for (int iter = 0; iter < 64; ++iter) {
        double sum = 0.0;
        double weighted = 0.0;  // sum p_j * d_j (unnormalized)
        for (size_t j = 0; j < n; ++j) {
          if (j == i) {
            row[j] = 0.0;
            continue;
          }
          const double v = std::exp(-beta * (drow[j] - dmin));
          row[j] = v;
          sum += v;
          weighted += v * (drow[j] - dmin);
        }
        // Shannon entropy in bits of the normalized row
        const double h_nats = std::log(sum) + beta * weighted / sum;
        const double perp = std::exp(h_nats);  // 2^(H/ln 2) == e^H_nats
        if (std::abs(perp - perplexity) < 1e-4) {
          const double inv = 1.0 / sum;
          for (size_t j = 0; j < n; ++j) p[i * n + j] = row[j] * inv;
          ok = true;
          break;
        }
        if (perp > perplexity) {
          // entropy too high -> sharpen: increase beta
          beta_lo = beta;
          has_lo = true;
          beta = has_hi ? 0.5 * (beta_lo + beta_hi) : beta * 2.0;
        } else {
          beta_hi = beta;
          has_hi = true;
          beta = has_lo ? 0.5 * (beta_lo + beta_hi) : beta * 0.5;
        }
      }
      if (!ok) failed_row.store(int(i));
    }
  });

  if (failed_row.load() >= 0)
    throw std::runtime_error(
        "perplexity_calibration: row " + std::to_string(failed_row.load()) +
        " did not converge in 64 iterations");
  return p;
}

std::vector<double> symmetrize(const std::vector<double>& conditional,
                               size_t n) {
  if (conditional.size() != n * n)
    throw std::invalid_argument("symmetrize: matrix size");
  std::vector<double> joint(n * n, 0.0);
  const double inv = 1.0 / (2.0 * double(n));
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j) {
      const double v = (conditional[i * n + j] + conditional[j * n + i]) * inv;
      joint[i * n + j] = v;
      joint[j * n + i] = v;
    }
  return joint;
}

namespace {

// Student-t numerators for all rows plus the global normalizer Z.
// Row sums are reduced serially in index order, so Z is deterministic.
double compute_qnum(const std::vector<double>& x, const std::vector<double>& y,
                    std::vector<double>& qnum) {
  const size_t n = x.size();
  std::vector<double> row_sums(n, 0.0);
  parallel_for(n, 8, [&](size_t lo, size_t hi) {
    for (size_t i = lo; i < hi; ++i)
      row_sums[i] =
          ops().tsne_qnum_row(x.data(), y.data(), n, i, qnum.data() + i * n);
  });
  double z = 0.0;
  for (double s : row_sums) z += s;
  return z;
}

}  // namespace

double kl_divergence(const std::vector<double>& joint_p,
                     const std::vector<double>& x,
                     const std::vector<double>& y) {
  const size_t n = x.size();
  if (joint_p.size() != n * n) throw std::invalid_argument("kl: matrix size");
  std::vector<double> qnum(n * n);
  const double z = compute_qnum(x, y, qnum);
  const double inv_z = z > 0.0 ? 1.0 / z : 0.0;
  double kl = 0.0;
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double p = joint_p[i * n + j];
      if (p <= 0.0) continue;
      const double pf = std::max(p, kProbFloor);
      const double qf = std::max(qnum[i * n + j] * inv_z, kProbFloor);
      kl += pf * std::log(pf / qf);
    }
  return kl;
}

void tsne_gradient(const std::vector<double>& joint_p,
                   const std::vector<double>& x, const std::vector<double>& y,
                   double exaggeration, std::vector<double>& gx,
                   std::vector<double>& gy) {
  const size_t n = x.size();
  std::vector<double> qnum(n * n);
  const double z = compute_qnum(x, y, qnum);
  const double inv_z = z > 0.0 ? 1.0 / z : 0.0;
  gx.assign(n, 0.0);
  gy.assign(n, 0.0);
  parallel_for(n, 8, [&](size_t lo, size_t hi) {
    for (size_t i = lo; i < hi; ++i) {
      double fx = 0.0, fy = 0.0;
      ops().tsne_force_row(joint_p.data() + i * n, qnum.data() + i * n,
                           x.data(), y.data(), n, i, inv_z, exaggeration, &fx,
                           &fy);
      gx[i] = 4.0 * fx;
      gy[i] = 4.0 * fy;
    }
  });
}

EmbeddingResult tsne(const features::FeatureMatrix& input,
                     const TsneConfig& config) {
  const size_t n = input.n;
  if (n < 10) throw std::invalid_argument("tsne: need at least 10 points");
  config.validate(n);

  std::vector<double> xd(n * input.d);
  for (size_t i = 0; i < xd.size(); ++i) xd[i] = double(input.v[i]);
  const auto d2 = pairwise_sq_dists(xd, n, input.d);
  const auto cond = perplexity_calibration(d2, n, config.perplexity);
  const auto joint = symmetrize(cond, n);

  EmbeddingResult res;
  res.n = n;
  res.config = config;
  res.meta = input.meta;
  res.class_table = input.class_table;
  res.x.resize(n);
  res.y.resize(n);
  Rng rng(config.seed);
  for (size_t i = 0; i < n; ++i) res.x[i] = 1e-4 * rng.gaussian();
  for (size_t i = 0; i < n; ++i) res.y[i] = 1e-4 * rng.gaussian();

  std::vector<double> vx(n, 0.0), vy(n, 0.0);
  std::vector<double> gx, gy;

  for (int t = 1; t <= config.iterations; ++t) {
    const double exag =
        t <= config.exaggeration_iterations ? config.early_exaggeration_factor
                                            : 1.0;
    const double momentum = t < config.momentum_switch_iteration
                                ? config.momentum_initial
                                : config.momentum_final;

    tsne_gradient(joint, res.x, res.y, exag, gx, gy);
    for (size_t i = 0; i < n; ++i) {
      vx[i] = momentum * vx[i] - config.learning_rate * gx[i];
      vy[i] = momentum * vy[i] - config.learning_rate * gy[i];
      res.x[i] += vx[i];
      res.y[i] += vy[i];
      if (!std::isfinite(res.x[i]) || !std::isfinite(res.y[i]))
        throw std::runtime_error("tsne: non-finite embedding at iteration " +
                                 std::to_string(t));
    }
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < n; ++i) {
      mx += res.x[i];
      my += res.y[i];
    }
    mx /= double(n);
    my /= double(n);
    for (size_t i = 0; i < n; ++i) {
      res.x[i] -= mx;
      res.y[i] -= my;
    }

    if (t % config.kl_record_interval == 0 || t == config.iterations) {
      // history always measures the true objective (exaggeration off)
      res.kl_history.emplace_back(t, kl_divergence(joint, res.x, res.y));
    }
  }
  return res;
}

std::string embedding_csv(const EmbeddingResult& em) {
  std::string out = "# format=rml-embedding/1\n";
  out += "id,x,y,class,snr\n";
  char buf[96];
  for (size_t i = 0; i < em.n; ++i) {
    const auto& m =
        i < em.meta.size() ? em.meta[i] : features::RowMeta{uint32_t(i), 0, 0};
    const std::string cname = m.class_id < em.class_table.size()
                                  ? em.class_table[m.class_id]
                                  : "class" + std::to_string(int(m.class_id));
    std::snprintf(buf, sizeof(buf), "%u,%.17g,%.17g,%s,%d\n", m.id, em.x[i],
                  em.y[i], cname.c_str(), int(m.snr_db));
    out += buf;
  }
  return out;
}

EmbeddingResult embedding_from_csv(const std::string& text) {
  EmbeddingResult em;
  std::istringstream in(text);
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line.rfind("id,x,y,class,snr", 0) != 0)
        throw std::runtime_error("embedding csv: unexpected header: " + line);
      header_seen = true;
      continue;
    }
    std::array<std::string, 5> cell;
    size_t start = 0;
    for (int c = 0; c < 5; ++c) {
      const size_t comma = line.find(',', start);
      if (comma == std::string::npos && c < 4)
        throw std::runtime_error("embedding csv: malformed row: " + line);
      cell[size_t(c)] = line.substr(start, comma == std::string::npos
                                               ? std::string::npos
                                               : comma - start);
      start = comma + 1;
    }
    features::RowMeta m;
    m.id = uint32_t(std::stoul(cell[0]));
    em.x.push_back(std::stod(cell[1]));
    em.y.push_back(std::stod(cell[2]));
    auto it = std::find(em.class_table.begin(), em.class_table.end(), cell[3]);
    if (it == em.class_table.end()) {
      em.class_table.push_back(cell[3]);
      m.class_id = uint8_t(em.class_table.size() - 1);
    } else {
      m.class_id = uint8_t(it - em.class_table.begin());
    }
    m.snr_db = int8_t(std::stoi(cell[4]));
    em.meta.push_back(m);
  }
  em.n = em.x.size();
  return em;
}

std::string kl_history_csv(const EmbeddingResult& em) {
  std::string out = "# format=rml-klhistory/1\n";
  out += "iteration,kl\n";
  char buf[64];
  for (const auto& [it, kl] : em.kl_history) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g\n", it, kl);
    out += buf;
  }
  return out;
}

}  // namespace rml::embed
