#include "rml/pca.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace rml::embed {

// Cyclic Jacobi rotations. Fine for the feature widths here (d <= a few
// hundred); not meant for large matrices.
void jacobi_eigensymm(std::vector<double> a, size_t n,
                      std::vector<double>& eigenvalues,
                      std::vector<double>& eigenvectors) {
  if (a.size() != n * n) throw std::invalid_argument("jacobi: bad matrix size");
  std::vector<double> v(n * n, 0.0);
  for (size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;

  const int max_sweeps = 64;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (size_t p = 0; p < n; ++p)
      for (size_t q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
    if (off < 1e-24) break;

    for (size_t p = 0; p < n; ++p) {
      for (size_t q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (std::abs(apq) < 1e-300) continue;
        const double app = a[p * n + p];
        const double aqq = a[q * n + q];
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0.0)
                             ? 1.0 / (theta + std::sqrt(1.0 + theta * theta))
                             : 1.0 / (theta - std::sqrt(1.0 + theta * theta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (size_t k = 0; k < n; ++k) {
          const double akp = a[k * n + p];
          const double akq = a[k * n + q];
          a[k * n + p] = c * akp - s * akq;
          a[k * n + q] = s * akp + c * akq;
        }
        for (size_t k = 0; k < n; ++k) {
          const double apk = a[p * n + k];
          const double aqk = a[q * n + k];
          a[p * n + k] = c * apk - s * aqk;
          a[q * n + k] = s * apk + c * aqk;
        }
        for (size_t k = 0; k < n; ++k) {
          const double vkp = v[k * n + p];
          const double vkq = v[k * n + q];
          v[k * n + p] = c * vkp - s * vkq;
          v[k * n + q] = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t(0));
  std::vector<double> diag(n);
  for (size_t i = 0; i < n; ++i) diag[i] = a[i * n + i];
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t x, size_t y) { return diag[x] > diag[y]; });

  eigenvalues.resize(n);
  eigenvectors.assign(n * n, 0.0);
  for (size_t r = 0; r < n; ++r) {
    const size_t src = order[r];
    eigenvalues[r] = diag[src];
    // column src of v is the eigenvector; store as row r, sign-fixed
    size_t arg = 0;
    double best = 0.0;
    for (size_t k = 0; k < n; ++k) {
      const double mag = std::abs(v[k * n + src]);
      if (mag > best) {
        best = mag;
        arg = k;
      }
    }
    const double sign = v[arg * n + src] >= 0.0 ? 1.0 : -1.0;
    for (size_t k = 0; k < n; ++k)
      eigenvectors[r * n + k] = sign * v[k * n + src];
  }
}

PcaResult pca(const features::FeatureMatrix& x, int d) {
  const size_t n = x.n;
  const size_t dim = x.d;
  if (n == 0 || dim == 0) throw std::invalid_argument("pca: empty input");
  if (d < 1 || size_t(d) > std::min(n, dim))
    throw std::invalid_argument("pca: d must be in [1, min(N, D)]");

  PcaResult res;
  res.n = n;
  res.d = d;
  res.mean.assign(dim, 0.0);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < dim; ++j) res.mean[j] += double(x.row(i)[j]);
  for (auto& m : res.mean) m /= double(n);

  std::vector<double> centered(n * dim);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < dim; ++j)
      centered[i * dim + j] = double(x.row(i)[j]) - res.mean[j];

  // sample covariance, divisor N-1 (N when a single row)
  const double divisor = n > 1 ? double(n - 1) : 1.0;
  std::vector<double> cov(dim * dim, 0.0);
  for (size_t i = 0; i < n; ++i) {
    const double* row = centered.data() + i * dim;
    for (size_t a = 0; a < dim; ++a) {
      const double ra = row[a];
      if (ra == 0.0) continue;
      double* crow = cov.data() + a * dim;
      for (size_t b = a; b < dim; ++b) crow[b] += ra * row[b];
    }
  }
  for (size_t a = 0; a < dim; ++a)
    for (size_t b = a; b < dim; ++b) {
      cov[a * dim + b] /= divisor;
      cov[b * dim + a] = cov[a * dim + b];
    }

  std::vector<double> evals, evecs;
  jacobi_eigensymm(cov, dim, evals, evecs);

  res.projection.assign(n * size_t(d), 0.0);
  for (size_t i = 0; i < n; ++i)
    for (int c = 0; c < d; ++c) {
      double acc = 0.0;
      const double* vec = evecs.data() + size_t(c) * dim;
      const double* row = centered.data() + i * dim;
      for (size_t j = 0; j < dim; ++j) acc += vec[j] * row[j];
      res.projection[i * size_t(d) + size_t(c)] = acc;
    }

  res.component_variance.assign(evals.begin(), evals.begin() + d);
  double total = 0.0;
  for (double e : evals) total += std::max(e, 0.0);
  double kept = 0.0;
  for (int c = 0; c < d; ++c) kept += std::max(evals[size_t(c)], 0.0);
  res.explained_variance_fraction = total > 0.0 ? kept / total : 1.0;
  return res;
}

}  // namespace rml::embed
