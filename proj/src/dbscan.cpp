#include "rml/dbscan.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rml/kernels.hpp"
#include "rml/util.hpp"

namespace rml::cluster {

using kernels::ops;

void DbscanConfig::validate() const {
  if (!eps_auto && !(eps > 0.0))
    throw std::invalid_argument("dbscan: explicit eps must be > 0");
  if (min_pts < 1) throw std::invalid_argument("dbscan: min_pts must be >= 1");
}

ClusterLabels dbscan(const std::vector<double>& points, size_t n, size_t d,
                     const DbscanConfig& cfg) {
  cfg.validate();
  if (points.size() != n * d) throw std::invalid_argument("dbscan: size");
  if (n == 0) return {};

  double eps = cfg.eps;
  if (cfg.eps_auto) {
    if (n <= size_t(cfg.min_pts)) {
      // curve undefined; everything will be noise unless min_pts == 1
      eps = 1.0;
    } else {
      eps = choose_eps(k_distance_curve(points, n, d, cfg.min_pts));
    }
  }
  const double eps2 = eps * eps;

  // neighbor lists (self excluded; core test counts self separately)
  std::vector<std::vector<uint32_t>> neigh(n);
  parallel_for(n, 16, [&](size_t lo, size_t hi) {
    for (size_t i = lo; i < hi; ++i) {
      const double* pi = points.data() + i * d;
      for (size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        if (ops().dsqdist(pi, points.data() + j * d, d) <= eps2)
          neigh[i].push_back(uint32_t(j));
      }
    }
  });

  std::vector<bool> core(n);
  for (size_t i = 0; i < n; ++i)
    core[i] = neigh[i].size() + 1 >= size_t(cfg.min_pts);

  ClusterLabels out;
  out.labels.assign(n, -1);
  out.eps_used = eps;

  // clusters = connected components of core points, seeds scanned ascending
  int next_cluster = 0;
  std::vector<uint32_t> stack;
  for (size_t seed = 0; seed < n; ++seed) {
    if (!core[seed] || out.labels[seed] != -1) continue;
    const int cid = next_cluster++;
    out.labels[seed] = cid;
    stack.assign(1, uint32_t(seed));
    while (!stack.empty()) {
      const uint32_t u = stack.back();
      stack.pop_back();
      for (uint32_t v : neigh[u]) {
        if (!core[v] || out.labels[v] != -1) continue;
        out.labels[v] = cid;
        stack.push_back(v);
      }
    }
  }

  // border assignment: lowest-index core point within eps decides
  for (size_t i = 0; i < n; ++i) {
    if (core[i]) continue;
    for (uint32_t v : neigh[i]) {
      if (core[v]) {
        out.labels[i] = out.labels[v];
        break;  // neighbor lists are built in ascending index order
      }
    }
  }

  out.n_clusters = next_cluster;
  return out;
}

std::vector<double> k_distance_curve(const std::vector<double>& points,
                                     size_t n, size_t d, int k) {
  if (k < 1) throw std::invalid_argument("k_distance_curve: k >= 1");
  if (n <= size_t(k))
    throw std::invalid_argument("k_distance_curve: need N > k");
  if (points.size() != n * d)
    throw std::invalid_argument("k_distance_curve: size");

  std::vector<double> kth(n);
  parallel_for(n, 16, [&](size_t lo, size_t hi) {
    std::vector<double> dists;
    for (size_t i = lo; i < hi; ++i) {
      dists.clear();
      dists.reserve(n - 1);
      const double* pi = points.data() + i * d;
      for (size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        dists.push_back(ops().dsqdist(pi, points.data() + j * d, d));
      }
      std::nth_element(dists.begin(), dists.begin() + (k - 1), dists.end());
      kth[i] = std::sqrt(dists[size_t(k - 1)]);
    }
  });
  std::sort(kth.begin(), kth.end());
  return kth;
}

double choose_eps(const std::vector<double>& curve) {
  const size_t n = curve.size();
  if (n == 0) throw std::invalid_argument("choose_eps: empty curve");
  if (n < 5) return curve.back() > 0.0 ? curve.back() : 1.0;

  // moving-average smoothing, window ~ n/50, odd, at least 5
  size_t w = std::max<size_t>(5, n / 50);
  if (w % 2 == 0) ++w;
  const size_t half = w / 2;
  std::vector<double> smooth(n);
  for (size_t i = 0; i < n; ++i) {
    const size_t lo = i >= half ? i - half : 0;
    const size_t hi = std::min(n - 1, i + half);
    double acc = 0.0;
    for (size_t j = lo; j <= hi; ++j) acc += curve[j];
    smooth[i] = acc / double(hi - lo + 1);
  }

  size_t best = n / 2;
  double best_dd = -1.0;
  for (size_t i = 1; i + 1 < n; ++i) {
    const double dd = smooth[i + 1] - 2.0 * smooth[i] + smooth[i - 1];
    if (dd > best_dd) {
      best_dd = dd;
      best = i;
    }
  }
  double eps = smooth[best];
  if (!(eps > 0.0)) {
    // degenerate curve (many duplicate points): fall back to the largest
    // distance so everything dense stays connected
    eps = std::max(curve.back(), 1e-12);
  }
  return eps;
}

}  // namespace rml::cluster
