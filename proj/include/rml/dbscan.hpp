#pragma once

#include <cstddef>
#include <vector>

namespace rml::cluster {

struct DbscanConfig {
  double eps = 0.0;      // ignored when eps_auto
  bool eps_auto = true;  // k-distance elbow heuristic with k = min_pts
  int min_pts = 5;

  void validate() const;
};

struct ClusterLabels {
  std::vector<int> labels;  // -1 = noise, clusters numbered 0..C-1 densely
  int n_clusters = 0;
  double eps_used = 0.0;
};

// Density clustering over row-major points (n x d). Core point: >= min_pts
// neighbors within eps, inclusive of itself. Clusters are the connected
// components of core points; a non-core point joins the cluster of the
// lowest-index core point within eps (fixed ascending scan), else noise.
ClusterLabels dbscan(const std::vector<double>& points, size_t n, size_t d,
                     const DbscanConfig& cfg);

// Each point's distance to its k-th nearest neighbor, sorted ascending.
std::vector<double> k_distance_curve(const std::vector<double>& points,
                                     size_t n, size_t d, int k);

// Elbow of the smoothed k-distance curve via maximum second difference.
double choose_eps(const std::vector<double>& curve);

}  // namespace rml::cluster
