#pragma once

#include <memory>
#include <optional>
#include <string>

#include "rml/rng.hpp"
#include "rml/tensor.hpp"

namespace rml::nn {

enum class Mode { train, eval };
enum class Pad { valid, same };
enum class Act { linear, relu };

// Declarative layer description; networks are built from a list of these
// and the specs round-trip through checkpoint JSON.
struct LayerSpec {
  enum class Kind { conv2d, dense, relu, dropout, reshape };
  Kind kind;

  // conv2d
  int filters = 0;
  int kh = 0, kw = 0;
  Pad pad = Pad::valid;
  // dense
  int units = 0;
  Act act = Act::linear;
  // dropout
  double rate = 0.0;
  // reshape (per-example target shape)
  Shape target_shape;

  static LayerSpec Conv2D(int filters, int kh, int kw, Pad pad);
  static LayerSpec Dense(int units, Act act = Act::linear);
  static LayerSpec ReLU();
  static LayerSpec Dropout(double rate);
  static LayerSpec Reshape(Shape target);

  void validate() const;
  std::string describe() const;
};

// A layer instantiated for a concrete input shape. Forward in train mode
// caches whatever backward needs; eval mode caches nothing and is const.
template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;

  const LayerSpec& spec() const { return spec_; }
  const Shape& in_shape() const { return in_shape_; }    // per example
  const Shape& out_shape() const { return out_shape_; }  // per example

  virtual Tensor<T> forward(const Tensor<T>& x, Mode mode, Rng* rng) = 0;
  // Consumes d(loss)/d(output), accumulates parameter grads, returns
  // d(loss)/d(input). Requires a prior train-mode forward.
  virtual Tensor<T> backward(const Tensor<T>& grad_out) = 0;

  virtual std::vector<Tensor<T>*> params() { return {}; }

  // Fixed-mask mode for finite-difference checks: while frozen, dropout
  // reuses the mask drawn on the first train-mode forward.
  virtual void set_frozen_mask(bool) {}

 protected:
  Layer(LayerSpec spec, Shape in, Shape out)
      : spec_(std::move(spec)), in_shape_(std::move(in)), out_shape_(std::move(out)) {}
  LayerSpec spec_;
  Shape in_shape_;
  Shape out_shape_;
};

// Shape algebra: output shape from spec + input shape, without building
// the layer. Throws on incompatible shapes.
Shape infer_out_shape(const LayerSpec& spec, const Shape& in);

template <typename T>
std::unique_ptr<Layer<T>> make_layer(const LayerSpec& spec, const Shape& in,
                                     Rng& init_rng);

}  // namespace rml::nn
