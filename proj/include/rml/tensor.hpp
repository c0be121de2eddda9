#pragma once

#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace rml::nn {

using Shape = std::vector<int>;

inline size_t shape_numel(const Shape& s) {
  size_t n = 1;
  for (int d : s) {
    if (d < 0) throw std::invalid_argument("negative dimension");
    n *= size_t(d);
  }
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::string out = "(";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out + ")";
}

// Dense n-d array with an optional gradient buffer of the same shape.
template <typename T>
struct Tensor {
  Shape shape;
  std::vector<T> v;
  std::vector<T> g;

  Tensor() = default;
  explicit Tensor(Shape s) : shape(std::move(s)), v(shape_numel(shape), T(0)) {}
  Tensor(Shape s, std::vector<T> vals) : shape(std::move(s)), v(std::move(vals)) {
    if (v.size() != shape_numel(shape))
      throw std::invalid_argument("value count does not match shape");
  }

  size_t size() const { return v.size(); }
  T* data() { return v.data(); }
  const T* data() const { return v.data(); }

  void ensure_grad() {
    if (g.size() != v.size()) g.assign(v.size(), T(0));
  }
  void zero_grad() {
    if (!g.empty()) std::fill(g.begin(), g.end(), T(0));
  }
  T* grad() {
    ensure_grad();
    return g.data();
  }

  // batch helpers: dim 0 is the batch dimension
  int batch() const { return shape.empty() ? 0 : shape[0]; }
  size_t row_size() const { return batch() == 0 ? 0 : size() / size_t(batch()); }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out;
    out.shape = shape;
    out.v.resize(v.size());
    for (size_t i = 0; i < v.size(); ++i) out.v[i] = U(v[i]);
    return out;
  }
};

inline bool same_trailing_shape(const Shape& batch_shape, const Shape& item) {
  if (batch_shape.size() != item.size() + 1) return false;
  for (size_t i = 0; i < item.size(); ++i)
    if (batch_shape[i + 1] != item[i]) return false;
  return true;
}

}  // namespace rml::nn
