#pragma once

#include <cstdint>
#include <vector>

#include "rml/tensor.hpp"

namespace rml::nn {

enum class OptKind { adam, rmsprop };

struct OptConfig {
  OptKind kind = OptKind::adam;
  double lr = 1e-3;
  // adam
  double beta1 = 0.9;
  double beta2 = 0.999;
  // rmsprop
  double rho = 0.9;
  double eps = 1e-8;
};

// Per-parameter-tensor state; shapes mirror the parameters they track.
template <typename T>
class Optimizer {
 public:
  Optimizer(OptConfig cfg, const std::vector<Tensor<T>*>& params);

  // Applies one update from the gradients currently stored in the params.
  // Tensors are updated independently, in list order.
  void step(const std::vector<Tensor<T>*>& params);

  const OptConfig& config() const { return cfg_; }
  int64_t t() const { return t_; }

 private:
  OptConfig cfg_;
  std::vector<std::vector<T>> slot1_;  // adam m / rmsprop acc
  std::vector<std::vector<T>> slot2_;  // adam v
  int64_t t_ = 0;
};

}  // namespace rml::nn
