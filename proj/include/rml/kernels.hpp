#pragma once

#include <cstddef>
#include <string>
#include <vector>

// Data-parallel inner loops behind the network engine, the embedding, and
// the distance computations. Every kernel exists as a scalar reference
// implementation plus an AVX2+FMA variant; the active backend is selected
// once at startup from CPUID (override with RML_KERNELS=scalar|avx2).
//
// SIMD variants reassociate reductions, so scalar and avx2 results agree to
// rounding, not bit-exactly. Within one backend every kernel is
// order-deterministic: repeated calls give bit-identical results.
//
// gemm conventions, all row-major, beta in {0,1}:
//   gemm_nn: C(MxN) (beta*C)+= A(MxK) * B(KxN)
//   gemm_nt: C(MxN) (beta*C)+= A(MxK) * B(NxK)^T
//   gemm_tn: C(MxN) (beta*C)+= A(KxM)^T * B(KxN)

namespace rml::kernels {

struct Ops {
  const char* name;

  // float
  void (*sgemm_nn)(const float*, const float*, float*, int, int, int, float);
  void (*sgemm_nt)(const float*, const float*, float*, int, int, int, float);
  void (*sgemm_tn)(const float*, const float*, float*, int, int, int, float);
  float (*sdot)(const float*, const float*, size_t);
  double (*ssqsum)(const float*, size_t);  // accumulates in double
  void (*saxpy)(float, const float*, float*, size_t);
  void (*srelu_fwd)(const float*, float*, size_t);
  // dx = dy where y > 0 else 0
  void (*srelu_bwd)(const float*, const float*, float*, size_t);
  // bias-corrected Adam: caller passes 1/(1-b1^t) and 1/(1-b2^t)
  void (*sadam)(float*, const float*, float*, float*, size_t, float lr,
                float b1, float b2, float eps, float bc1, float bc2);
  void (*srmsprop)(float*, const float*, float*, size_t, float lr, float rho,
                   float eps);

  // double
  void (*dgemm_nn)(const double*, const double*, double*, int, int, int, double);
  void (*dgemm_nt)(const double*, const double*, double*, int, int, int, double);
  void (*dgemm_tn)(const double*, const double*, double*, int, int, int, double);
  double (*ddot)(const double*, const double*, size_t);
  double (*dsqsum)(const double*, size_t);
  void (*daxpy)(double, const double*, double*, size_t);
  void (*drelu_fwd)(const double*, double*, size_t);
  void (*drelu_bwd)(const double*, const double*, double*, size_t);
  void (*dadam)(double*, const double*, double*, double*, size_t, double lr,
                double b1, double b2, double eps, double bc1, double bc2);
  void (*drmsprop)(double*, const double*, double*, size_t, double lr,
                   double rho, double eps);

  // squared Euclidean distance between two length-d rows
  double (*dsqdist)(const double*, const double*, size_t);

  // t-SNE Student-t numerators for row i of a 2-D embedding:
  //   q[j] = 1/(1 + |y_i - y_j|^2), q[i] = 0; returns sum_j q[j].
  double (*tsne_qnum_row)(const double* yx, const double* yy, size_t n,
                          size_t i, double* q);
  // Gradient accumulation for row i:
  //   f += sum_j (exag*p[j] - q[j]*inv_z) * q[j] * (y_i - y_j)
  void (*tsne_force_row)(const double* p, const double* q, const double* yx,
                         const double* yy, size_t n, size_t i, double inv_z,
                         double exag, double* fx, double* fy);
};

// The backend picked at startup (CPUID + RML_KERNELS override).
const Ops& ops();

extern const Ops kScalarOps;

// AVX2 table, or nullptr when the binary/CPU lacks AVX2+FMA support.
const Ops* avx2_ops();

// Named lookup for the equivalence tests: "scalar", "avx2".
const Ops* ops_by_name(const std::string& name);

std::vector<const Ops*> available_backends();

}  // namespace rml::kernels
