#pragma once

#include <vector>

#include "rml/features.hpp"

namespace rml::embed {

struct PcaResult {
  size_t n = 0;
  int d = 0;
  std::vector<double> projection;        // n x d, row-major
  std::vector<double> component_variance;  // per kept component
  double explained_variance_fraction = 0.0;
  std::vector<double> mean;  // feature mean removed before projection
};

// Mean-centered projection onto the top-d eigenvectors of the sample
// covariance (cyclic Jacobi eigensolver), components ordered by decreasing
// variance. Eigenvector signs are fixed by making the largest-magnitude
// coordinate positive, so results are reproducible.
PcaResult pca(const features::FeatureMatrix& x, int d);

// Symmetric eigendecomposition helper (exposed for reuse): returns
// eigenvalues descending and row-major eigenvectors (one per row).
void jacobi_eigensymm(std::vector<double> a, size_t n,
                      std::vector<double>& eigenvalues,
                      std::vector<double>& eigenvectors);

}  // namespace rml::embed
