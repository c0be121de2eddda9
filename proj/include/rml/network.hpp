#pragma once

#include <memory>
#include <vector>

#include "rml/layers.hpp"

namespace rml::nn {

// Fixed sequential layer stack. Training-mode forward caches activations
// layer by layer; backward consumes them in reverse and fills parameter
// gradients. Eval-mode forward is const and safe to share across threads.
template <typename T>
class Network {
 public:
  Network(std::vector<LayerSpec> specs, Shape input_shape, uint64_t init_seed);

  // copies rebuild the layer stack and transfer parameter values; training
  // caches and the dropout stream do not travel
  Network(const Network& other);
  Network& operator=(const Network& other);
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  Tensor<T> forward(const Tensor<T>& batch, Mode mode);
  // Forward through the first n_layers only (eval mode, no caching).
  Tensor<T> forward_prefix(const Tensor<T>& batch, size_t n_layers) const;

  // Backpropagates d(loss)/d(output); returns d(loss)/d(input).
  Tensor<T> backward(const Tensor<T>& grad_out);

  std::vector<Tensor<T>*> params();
  size_t param_count() const;
  void zero_grads();

  // Flat snapshot/restore of all parameter values, in layer order.
  std::vector<T> save_params() const;
  void load_params(const std::vector<T>& flat);

  const std::vector<LayerSpec>& specs() const { return specs_; }
  const Shape& input_shape() const { return input_shape_; }
  const Shape& output_shape() const { return output_shape_; }
  size_t layer_count() const { return layers_.size(); }
  // Per-example output shape after layer index (exclusive prefix length).
  const Shape& shape_after(size_t n_layers) const { return shapes_.at(n_layers); }

  void set_rng(Rng* rng) { rng_ = rng; }      // dropout masks in train mode
  void set_frozen_masks(bool frozen);          // finite-difference support
  uint64_t init_seed() const { return init_seed_; }

 private:
  std::vector<LayerSpec> specs_;
  Shape input_shape_;
  Shape output_shape_;
  std::vector<Shape> shapes_;  // shapes_[i] = per-example shape before layer i
  std::vector<std::unique_ptr<Layer<T>>> layers_;
  Rng* rng_ = nullptr;
  uint64_t init_seed_;
  bool forward_done_ = false;
};

using NetworkF = Network<float>;
using NetworkD = Network<double>;

// Rebuilds an identically-structured network in a different precision,
// copying parameter values (used by the gradient-check harness).
Network<double> to_double(const Network<float>& net);

}  // namespace rml::nn
