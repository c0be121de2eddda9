// AVX2+FMA kernel variants. Built with -mavx2 -mfma on x86-64 targets and
// compiled out elsewhere; selection against the scalar reference happens at
// runtime in kernels_dispatch.cpp.

#include "rml/kernels.hpp"
#include "rml/util.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <cmath>
#include <cstring>

namespace rml::kernels {
namespace {

constexpr size_t kParallelFlops = 1 << 16;

inline float hsum8(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  __m128 shuf = _mm_movehdup_ps(lo);
  __m128 sums = _mm_add_ps(lo, shuf);
  shuf = _mm_movehl_ps(shuf, sums);
  sums = _mm_add_ss(sums, shuf);
  return _mm_cvtss_f32(sums);
}

inline double hsum4(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d swap = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, swap));
}

// ---------------------------------------------------------------- float ---

void sgemm_nn_avx2(const float* a, const float* b, float* c, int m, int n,
                   int k, float beta) {
  const size_t flops = size_t(m) * size_t(n) * size_t(k);
  parallel_for(size_t(m), flops < kParallelFlops ? size_t(m) + 1 : 0,
               [&](size_t i0, size_t i1) {
    for (size_t i = i0; i < i1; ++i) {
      float* crow = c + i * size_t(n);
      if (beta == 0.0f) std::memset(crow, 0, sizeof(float) * size_t(n));
      for (int p = 0; p < k; ++p) {
        const __m256 av = _mm256_set1_ps(a[i * size_t(k) + size_t(p)]);
        const float* brow = b + size_t(p) * size_t(n);
        int j = 0;
        for (; j + 16 <= n; j += 16) {
          __m256 c0 = _mm256_loadu_ps(crow + j);
          __m256 c1 = _mm256_loadu_ps(crow + j + 8);
          c0 = _mm256_fmadd_ps(av, _mm256_loadu_ps(brow + j), c0);
          c1 = _mm256_fmadd_ps(av, _mm256_loadu_ps(brow + j + 8), c1);
          _mm256_storeu_ps(crow + j, c0);
          _mm256_storeu_ps(crow + j + 8, c1);
        }
        for (; j + 8 <= n; j += 8) {
          __m256 c0 = _mm256_loadu_ps(crow + j);
          c0 = _mm256_fmadd_ps(av, _mm256_loadu_ps(brow + j), c0);
          _mm256_storeu_ps(crow + j, c0);
        }
        const float afs = a[i * size_t(k) + size_t(p)];
        for (; j < n; ++j) crow[j] += afs * brow[j];
      }
    }
  });
}

void sgemm_nt_avx2(const float* a, const float* b, float* c, int m, int n,
                   int k, float beta) {
  const size_t flops = size_t(m) * size_t(n) * size_t(k);
  parallel_for(size_t(m), flops < kParallelFlops ? size_t(m) + 1 : 0,
               [&](size_t i0, size_t i1) {
    for (size_t i = i0; i < i1; ++i) {
      const float* arow = a + i * size_t(k);
      float* crow = c + i * size_t(n);
      for (int j = 0; j < n; ++j) {
        const float* brow = b + size_t(j) * size_t(k);
        __m256 acc0 = _mm256_setzero_ps();
        __m256 acc1 = _mm256_setzero_ps();
        int p = 0;
        for (; p + 16 <= k; p += 16) {
          acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(arow + p),
                                 _mm256_loadu_ps(brow + p), acc0);
          acc1 = _mm256_fmadd_ps(_mm256_loadu_ps(arow + p + 8),
                                 _mm256_loadu_ps(brow + p + 8), acc1);
        }
        for (; p + 8 <= k; p += 8)
          acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(arow + p),
                                 _mm256_loadu_ps(brow + p), acc0);
        float acc = hsum8(_mm256_add_ps(acc0, acc1));
        for (; p < k; ++p) acc += arow[p] * brow[p];
        crow[j] = (beta == 0.0f) ? acc : crow[j] + acc;
      }
    }
  });
}

void sgemm_tn_avx2(const float* a, const float* b, float* c, int m, int n,
                   int k, float beta) {
  const size_t flops = size_t(m) * size_t(n) * size_t(k);
  parallel_for(size_t(m), flops < kParallelFlops ? size_t(m) + 1 : 0,
               [&](size_t i0, size_t i1) {
    for (size_t i = i0; i < i1; ++i) {
      float* crow = c + i * size_t(n);
      if (beta == 0.0f) std::memset(crow, 0, sizeof(float) * size_t(n));
      for (int p = 0; p < k; ++p) {
        const float afs = a[size_t(p) * size_t(m) + i];
        const __m256 av = _mm256_set1_ps(afs);
        const float* brow = b + size_t(p) * size_t(n);
        int j = 0;
        for (; j + 8 <= n; j += 8) {
          __m256 c0 = _mm256_loadu_ps(crow + j);
          c0 = _mm256_fmadd_ps(av, _mm256_loadu_ps(brow + j), c0);
          _mm256_storeu_ps(crow + j, c0);
        }
        for (; j < n; ++j) crow[j] += afs * brow[j];
      }
    }
  });
}

float sdot_avx2(const float* x, const float* y, size_t n) {
  __m256 acc = _mm256_setzero_ps();
  size_t i = 0;
  for (; i + 8 <= n; i += 8)
    acc = _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i), acc);
  float s = hsum8(acc);
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

double ssqsum_avx2(const float* x, size_t n) {
  __m256d acc = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_cvtps_pd(_mm_loadu_ps(x + i));
    acc = _mm256_fmadd_pd(v, v, acc);
  }
  double s = hsum4(acc);
  for (; i < n; ++i) s += double(x[i]) * double(x[i]);
  return s;
}

void saxpy_avx2(float a, const float* x, float* y, size_t n) {
  const __m256 av = _mm256_set1_ps(a);
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 yv = _mm256_loadu_ps(y + i);
    yv = _mm256_fmadd_ps(av, _mm256_loadu_ps(x + i), yv);
    _mm256_storeu_ps(y + i, yv);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void srelu_fwd_avx2(const float* x, float* y, size_t n) {
  const __m256 zero = _mm256_setzero_ps();
  size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(y + i, _mm256_max_ps(_mm256_loadu_ps(x + i), zero));
  for (; i < n; ++i) y[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void srelu_bwd_avx2(const float* y, const float* dy, float* dx, size_t n) {
  const __m256 zero = _mm256_setzero_ps();
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 mask = _mm256_cmp_ps(_mm256_loadu_ps(y + i), zero, _CMP_GT_OQ);
    _mm256_storeu_ps(dx + i, _mm256_and_ps(_mm256_loadu_ps(dy + i), mask));
  }
  for (; i < n; ++i) dx[i] = y[i] > 0.0f ? dy[i] : 0.0f;
}

void sadam_avx2(float* p, const float* g, float* m, float* v, size_t n,
                float lr, float b1, float b2, float eps, float bc1,
                float bc2) {
  const __m256 vb1 = _mm256_set1_ps(b1);
  const __m256 vb2 = _mm256_set1_ps(b2);
  const __m256 v1mb1 = _mm256_set1_ps(1.0f - b1);
  const __m256 v1mb2 = _mm256_set1_ps(1.0f - b2);
  const __m256 vlr = _mm256_set1_ps(lr);
  const __m256 veps = _mm256_set1_ps(eps);
  const __m256 vbc1 = _mm256_set1_ps(bc1);
  const __m256 vbc2 = _mm256_set1_ps(bc2);
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 gv = _mm256_loadu_ps(g + i);
    __m256 mv = _mm256_loadu_ps(m + i);
    __m256 vv = _mm256_loadu_ps(v + i);
    mv = _mm256_fmadd_ps(vb1, mv, _mm256_mul_ps(v1mb1, gv));
    vv = _mm256_fmadd_ps(vb2, vv, _mm256_mul_ps(v1mb2, _mm256_mul_ps(gv, gv)));
    _mm256_storeu_ps(m + i, mv);
    _mm256_storeu_ps(v + i, vv);
    const __m256 mhat = _mm256_mul_ps(mv, vbc1);
    const __m256 vhat = _mm256_mul_ps(vv, vbc2);
    const __m256 denom = _mm256_add_ps(_mm256_sqrt_ps(vhat), veps);
    const __m256 step = _mm256_div_ps(_mm256_mul_ps(vlr, mhat), denom);
    _mm256_storeu_ps(p + i, _mm256_sub_ps(_mm256_loadu_ps(p + i), step));
  }
  for (; i < n; ++i) {
    m[i] = b1 * m[i] + (1.0f - b1) * g[i];
    v[i] = b2 * v[i] + (1.0f - b2) * g[i] * g[i];
    p[i] -= lr * (m[i] * bc1) / (std::sqrt(v[i] * bc2) + eps);
  }
}

void srmsprop_avx2(float* p, const float* g, float* acc, size_t n, float lr,
                   float rho, float eps) {
  const __m256 vrho = _mm256_set1_ps(rho);
  const __m256 v1mrho = _mm256_set1_ps(1.0f - rho);
  const __m256 vlr = _mm256_set1_ps(lr);
  const __m256 veps = _mm256_set1_ps(eps);
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 gv = _mm256_loadu_ps(g + i);
    __m256 av = _mm256_loadu_ps(acc + i);
    av = _mm256_fmadd_ps(vrho, av, _mm256_mul_ps(v1mrho, _mm256_mul_ps(gv, gv)));
    _mm256_storeu_ps(acc + i, av);
    const __m256 denom = _mm256_add_ps(_mm256_sqrt_ps(av), veps);
    const __m256 step = _mm256_div_ps(_mm256_mul_ps(vlr, gv), denom);
    _mm256_storeu_ps(p + i, _mm256_sub_ps(_mm256_loadu_ps(p + i), step));
  }
  for (; i < n; ++i) {
    acc[i] = rho * acc[i] + (1.0f - rho) * g[i] * g[i];
    p[i] -= lr * g[i] / (std::sqrt(acc[i]) + eps);
  }
}

// --------------------------------------------------------------- double ---

void dgemm_nn_avx2(const double* a, const double* b, double* c, int m, int n,
                   int k, double beta) {
  const size_t flops = size_t(m) * size_t(n) * size_t(k);
  parallel_for(size_t(m), flops < kParallelFlops ? size_t(m) + 1 : 0,
               [&](size_t i0, size_t i1) {
    for (size_t i = i0; i < i1; ++i) {
      double* crow = c + i * size_t(n);
      if (beta == 0.0) std::memset(crow, 0, sizeof(double) * size_t(n));
      for (int p = 0; p < k; ++p) {
        const double afs = a[i * size_t(k) + size_t(p)];
        const __m256d av = _mm256_set1_pd(afs);
        const double* brow = b + size_t(p) * size_t(n);
        int j = 0;
        for (; j + 4 <= n; j += 4) {
          __m256d c0 = _mm256_loadu_pd(crow + j);
          c0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + j), c0);
          _mm256_storeu_pd(crow + j, c0);
        }
        for (; j < n; ++j) crow[j] += afs * brow[j];
      }
    }
  });
}

void dgemm_nt_avx2(const double* a, const double* b, double* c, int m, int n,
                   int k, double beta) {
  const size_t flops = size_t(m) * size_t(n) * size_t(k);
  parallel_for(size_t(m), flops < kParallelFlops ? size_t(m) + 1 : 0,
               [&](size_t i0, size_t i1) {
    for (size_t i = i0; i < i1; ++i) {
      const double* arow = a + i * size_t(k);
      double* crow = c + i * size_t(n);
      for (int j = 0; j < n; ++j) {
        const double* brow = b + size_t(j) * size_t(k);
        __m256d acc = _mm256_setzero_pd();
        int p = 0;
        for (; p + 4 <= k; p += 4)
          acc = _mm256_fmadd_pd(_mm256_loadu_pd(arow + p),
                                _mm256_loadu_pd(brow + p), acc);
        double s = hsum4(acc);
        for (; p < k; ++p) s += arow[p] * brow[p];
        crow[j] = (beta == 0.0) ? s : crow[j] + s;
      }
    }
  });
}

void dgemm_tn_avx2(const double* a, const double* b, double* c, int m, int n,
                   int k, double beta) {
  const size_t flops = size_t(m) * size_t(n) * size_t(k);
  parallel_for(size_t(m), flops < kParallelFlops ? size_t(m) + 1 : 0,
               [&](size_t i0, size_t i1) {
    for (size_t i = i0; i < i1; ++i) {
      double* crow = c + i * size_t(n);
      if (beta == 0.0) std::memset(crow, 0, sizeof(double) * size_t(n));
      for (int p = 0; p < k; ++p) {
        const double afs = a[size_t(p) * size_t(m) + i];
        const __m256d av = _mm256_set1_pd(afs);
        const double* brow = b + size_t(p) * size_t(n);
        int j = 0;
        for (; j + 4 <= n; j += 4) {
          __m256d c0 = _mm256_loadu_pd(crow + j);
          c0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + j), c0);
          _mm256_storeu_pd(crow + j, c0);
        }
        for (; j < n; ++j) crow[j] += afs * brow[j];
      }
    }
  });
}

double ddot_avx2(const double* x, const double* y, size_t n) {
  __m256d acc = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
  double s = hsum4(acc);
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

double dsqsum_avx2(const double* x, size_t n) {
  __m256d acc = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(x + i);
    acc = _mm256_fmadd_pd(v, v, acc);
  }
  double s = hsum4(acc);
  for (; i < n; ++i) s += x[i] * x[i];
  return s;
}

void daxpy_avx2(double a, const double* x, double* y, size_t n) {
  const __m256d av = _mm256_set1_pd(a);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d yv = _mm256_loadu_pd(y + i);
    yv = _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), yv);
    _mm256_storeu_pd(y + i, yv);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void drelu_fwd_avx2(const double* x, double* y, size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_max_pd(_mm256_loadu_pd(x + i), zero));
  for (; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void drelu_bwd_avx2(const double* y, const double* dy, double* dx, size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(y + i), zero, _CMP_GT_OQ);
    _mm256_storeu_pd(dx + i, _mm256_and_pd(_mm256_loadu_pd(dy + i), mask));
  }
  for (; i < n; ++i) dx[i] = y[i] > 0.0 ? dy[i] : 0.0;
}

void dadam_avx2(double* p, const double* g, double* m, double* v, size_t n,
                double lr, double b1, double b2, double eps, double bc1,
                double bc2) {
  for (size_t i = 0; i < n; ++i) {
    m[i] = b1 * m[i] + (1.0 - b1) * g[i];
    v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
    p[i] -= lr * (m[i] * bc1) / (std::sqrt(v[i] * bc2) + eps);
  }
}

void drmsprop_avx2(double* p, const double* g, double* acc, size_t n,
                   double lr, double rho, double eps) {
  for (size_t i = 0; i < n; ++i) {
    acc[i] = rho * acc[i] + (1.0 - rho) * g[i] * g[i];
    p[i] -= lr * g[i] / (std::sqrt(acc[i]) + eps);
  }
}

double dsqdist_avx2(const double* a, const double* b, size_t d) {
  __m256d acc = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= d; i += 4) {
    const __m256d diff =
        _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_fmadd_pd(diff, diff, acc);
  }
  double s = hsum4(acc);
  for (; i < d; ++i) {
    const double diff = a[i] - b[i];
    s += diff * diff;
  }
  return s;
}

double tsne_qnum_row_avx2(const double* yx, const double* yy, size_t n,
                          size_t i, double* q) {
  const __m256d xi = _mm256_set1_pd(yx[i]);
  const __m256d yi = _mm256_set1_pd(yy[i]);
  const __m256d one = _mm256_set1_pd(1.0);
  __m256d acc = _mm256_setzero_pd();
  size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d dx = _mm256_sub_pd(xi, _mm256_loadu_pd(yx + j));
    const __m256d dy = _mm256_sub_pd(yi, _mm256_loadu_pd(yy + j));
    __m256d d2 = _mm256_fmadd_pd(dx, dx, _mm256_mul_pd(dy, dy));
    const __m256d v = _mm256_div_pd(one, _mm256_add_pd(one, d2));
    _mm256_storeu_pd(q + j, v);
    acc = _mm256_add_pd(acc, v);
  }
  double sum = hsum4(acc);
  for (; j < n; ++j) {
    const double dx = yx[i] - yx[j];
    const double dy = yy[i] - yy[j];
    const double v = 1.0 / (1.0 + dx * dx + dy * dy);
    q[j] = v;
    sum += v;
  }
  q[i] = 0.0;
  sum -= 1.0;
  return sum;
}

void tsne_force_row_avx2(const double* p, const double* q, const double* yx,
                         const double* yy, size_t n, size_t i, double inv_z,
                         double exag, double* fx, double* fy) {
  const __m256d xi = _mm256_set1_pd(yx[i]);
  const __m256d yi = _mm256_set1_pd(yy[i]);
  const __m256d viz = _mm256_set1_pd(inv_z);
  const __m256d vex = _mm256_set1_pd(exag);
  __m256d ax = _mm256_setzero_pd();
  __m256d ay = _mm256_setzero_pd();
  size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d qv = _mm256_loadu_pd(q + j);
    const __m256d pv = _mm256_loadu_pd(p + j);
    const __m256d w = _mm256_mul_pd(
        _mm256_fmsub_pd(vex, pv, _mm256_mul_pd(qv, viz)), qv);
    ax = _mm256_fmadd_pd(w, _mm256_sub_pd(xi, _mm256_loadu_pd(yx + j)), ax);
    ay = _mm256_fmadd_pd(w, _mm256_sub_pd(yi, _mm256_loadu_pd(yy + j)), ay);
  }
  double sx = hsum4(ax), sy = hsum4(ay);
  for (; j < n; ++j) {
    const double w = (exag * p[j] - q[j] * inv_z) * q[j];
    sx += w * (yx[i] - yx[j]);
    sy += w * (yy[i] - yy[j]);
  }
  *fx += sx;
  *fy += sy;
}

const Ops kAvx2Ops = {
    "avx2",
    &sgemm_nn_avx2,
    &sgemm_nt_avx2,
    &sgemm_tn_avx2,
    &sdot_avx2,
    &ssqsum_avx2,
    &saxpy_avx2,
    &srelu_fwd_avx2,
    &srelu_bwd_avx2,
    &sadam_avx2,
    &srmsprop_avx2,
    &dgemm_nn_avx2,
    &dgemm_nt_avx2,
    &dgemm_tn_avx2,
    &ddot_avx2,
    &dsqsum_avx2,
    &daxpy_avx2,
    &drelu_fwd_avx2,
    &drelu_bwd_avx2,
    &dadam_avx2,
    &drmsprop_avx2,
    &dsqdist_avx2,
    &tsne_qnum_row_avx2,
    &tsne_force_row_avx2,
};

}  // namespace

const Ops* avx2_ops() {
#if defined(__GNUC__) || defined(__clang__)
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
    return &kAvx2Ops;
#endif
  return nullptr;
}

}  // namespace rml::kernels

#else  // no AVX2 at build time

namespace rml::kernels {
const Ops* avx2_ops() { return nullptr; }
}  // namespace rml::kernels

#endif
