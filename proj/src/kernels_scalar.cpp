#include <cmath>
#include <cstring>

#include "rml/kernels.hpp"
#include "rml/util.hpp"

// Reference kernels. Plain loops, no manual unrolling; these define the
// semantics the SIMD variants are tested against. gemm row loops are
// partitioned across the thread pool (each thread owns whole output rows,
// so the summation order per element is fixed).

namespace rml::kernels {
namespace {

constexpr size_t kParallelFlops = 1 << 16;

template <typename T>
void gemm_nn_impl(const T* a, const T* b, T* c, int m, int n, int k, T beta) {
  const size_t flops = size_t(m) * size_t(n) * size_t(k);
  parallel_for(size_t(m), flops < kParallelFlops ? size_t(m) + 1 : 0,
               [&](size_t i0, size_t i1) {
    for (size_t i = i0; i < i1; ++i) {
      T* crow = c + i * size_t(n);
      if (beta == T(0)) std::memset(crow, 0, sizeof(T) * size_t(n));
      for (int p = 0; p < k; ++p) {
        const T av = a[i * size_t(k) + size_t(p)];
        const T* brow = b + size_t(p) * size_t(n);
        for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
  });
}

template <typename T>
void gemm_nt_impl(const T* a, const T* b, T* c, int m, int n, int k, T beta) {
  const size_t flops = size_t(m) * size_t(n) * size_t(k);
  parallel_for(size_t(m), flops < kParallelFlops ? size_t(m) + 1 : 0,
               [&](size_t i0, size_t i1) {
    for (size_t i = i0; i < i1; ++i) {
      const T* arow = a + i * size_t(k);
      T* crow = c + i * size_t(n);
      for (int j = 0; j < n; ++j) {
        const T* brow = b + size_t(j) * size_t(k);
        T acc = 0;
        for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
        crow[j] = (beta == T(0)) ? acc : crow[j] + acc;
      }
    }
  });
}

template <typename T>
void gemm_tn_impl(const T* a, const T* b, T* c, int m, int n, int k, T beta) {
  const size_t flops = size_t(m) * size_t(n) * size_t(k);
  parallel_for(size_t(m), flops < kParallelFlops ? size_t(m) + 1 : 0,
               [&](size_t i0, size_t i1) {
    for (size_t i = i0; i < i1; ++i) {
      T* crow = c + i * size_t(n);
      if (beta == T(0)) std::memset(crow, 0, sizeof(T) * size_t(n));
      for (int p = 0; p < k; ++p) {
        const T av = a[size_t(p) * size_t(m) + i];
        const T* brow = b + size_t(p) * size_t(n);
        for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
  });
}

float sdot_impl(const float* x, const float* y, size_t n) {
  float acc = 0.0f;
  for (size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double ddot_impl(const double* x, const double* y, size_t n) {
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double ssqsum_impl(const float* x, size_t n) {
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) acc += double(x[i]) * double(x[i]);
  return acc;
}

double dsqsum_impl(const double* x, size_t n) {
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) acc += x[i] * x[i];
  return acc;
}

template <typename T>
void axpy_impl(T a, const T* x, T* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

template <typename T>
void relu_fwd_impl(const T* x, T* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
}

template <typename T>
void relu_bwd_impl(const T* y, const T* dy, T* dx, size_t n) {
  for (size_t i = 0; i < n; ++i) dx[i] = y[i] > T(0) ? dy[i] : T(0);
}

template <typename T>
void adam_impl(T* p, const T* g, T* m, T* v, size_t n, T lr, T b1, T b2,
               T eps, T bc1, T bc2) {
  for (size_t i = 0; i < n; ++i) {
    m[i] = b1 * m[i] + (T(1) - b1) * g[i];
    v[i] = b2 * v[i] + (T(1) - b2) * g[i] * g[i];
    const T mhat = m[i] * bc1;
    const T vhat = v[i] * bc2;
    p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

template <typename T>
void rmsprop_impl(T* p, const T* g, T* acc, size_t n, T lr, T rho, T eps) {
  for (size_t i = 0; i < n; ++i) {
    acc[i] = rho * acc[i] + (T(1) - rho) * g[i] * g[i];
    p[i] -= lr * g[i] / (std::sqrt(acc[i]) + eps);
  }
}

double dsqdist_impl(const double* a, const double* b, size_t d) {
  double acc = 0.0;
  for (size_t i = 0; i < d; ++i) {
    const double diff = a[i] - b[i];
    acc += diff * diff;
  }
  return acc;
}

double tsne_qnum_row_impl(const double* yx, const double* yy, size_t n,
                          size_t i, double* q) {
  const double xi = yx[i];
  const double yi = yy[i];
  double sum = 0.0;
  for (size_t j = 0; j < n; ++j) {
    const double dx = xi - yx[j];
    const double dy = yi - yy[j];
    const double v = 1.0 / (1.0 + dx * dx + dy * dy);
    q[j] = v;
    sum += v;
  }
  q[i] = 0.0;
  sum -= 1.0;  // remove the j == i term (distance 0 -> numerator 1)
  return sum;
}

void tsne_force_row_impl(const double* p, const double* q, const double* yx,
                         const double* yy, size_t n, size_t i, double inv_z,
                         double exag, double* fx, double* fy) {
  const double xi = yx[i];
  const double yi = yy[i];
  double ax = 0.0, ay = 0.0;
  for (size_t j = 0; j < n; ++j) {
    const double w = (exag * p[j] - q[j] * inv_z) * q[j];
    ax += w * (xi - yx[j]);
    ay += w * (yi - yy[j]);
  }
  *fx += ax;
  *fy += ay;
}

}  // namespace

const Ops kScalarOps = {
    "scalar",
    &gemm_nn_impl<float>,
    &gemm_nt_impl<float>,
    &gemm_tn_impl<float>,
    &sdot_impl,
    &ssqsum_impl,
    &axpy_impl<float>,
    &relu_fwd_impl<float>,
    &relu_bwd_impl<float>,
    &adam_impl<float>,
    &rmsprop_impl<float>,
    &gemm_nn_impl<double>,
    &gemm_nt_impl<double>,
    &gemm_tn_impl<double>,
    &ddot_impl,
    &dsqsum_impl,
    &axpy_impl<double>,
    &relu_fwd_impl<double>,
    &relu_bwd_impl<double>,
    &adam_impl<double>,
    &rmsprop_impl<double>,
    &dsqdist_impl,
    &tsne_qnum_row_impl,
    &tsne_force_row_impl,
};

}  // namespace rml::kernels
