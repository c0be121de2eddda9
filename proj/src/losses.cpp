#include "rml/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace rml::nn {

template <typename T>
std::pair<double, Tensor<T>> mse_loss(const Tensor<T>& pred,
                                      const Tensor<T>& target) {
  if (pred.shape != target.shape)
    throw std::invalid_argument("mse_loss: shape mismatch " +
                                shape_str(pred.shape) + " vs " +
                                shape_str(target.shape));
  const size_t n = pred.size();
  Tensor<T> grad;
  grad.shape = pred.shape;
  grad.v.resize(n);
  double acc = 0.0;
  const double inv = n > 0 ? 1.0 / double(n) : 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double d = double(pred.v[i]) - double(target.v[i]);
    acc += d * d;
    grad.v[i] = T(2.0 * d * inv);
  }
  return {acc * inv, std::move(grad)};
}

template <typename T>
std::pair<double, Tensor<T>> softmax_xent(const Tensor<T>& logits,
                                          const std::vector<int>& labels) {
  if (logits.shape.size() != 2)
    throw std::invalid_argument("softmax_xent: logits must be (N, K)");
  const int n = logits.shape[0];
  const int k = logits.shape[1];
  if (int(labels.size()) != n)
    throw std::invalid_argument("softmax_xent: label count mismatch");
  Tensor<T> grad;
  grad.shape = logits.shape;
  grad.v.resize(logits.size());
  double loss = 0.0;
  const double invn = n > 0 ? 1.0 / double(n) : 0.0;
  for (int i = 0; i < n; ++i) {
    if (labels[size_t(i)] < 0 || labels[size_t(i)] >= k)
      throw std::out_of_range("softmax_xent: label out of range");
    const T* row = logits.data() + size_t(i) * k;
    double mx = double(row[0]);
    for (int j = 1; j < k; ++j) mx = std::max(mx, double(row[j]));
    double z = 0.0;
    for (int j = 0; j < k; ++j) z += std::exp(double(row[j]) - mx);
    const double logz = std::log(z) + mx;
    loss += logz - double(row[labels[size_t(i)]]);
    T* grow = grad.data() + size_t(i) * k;
    for (int j = 0; j < k; ++j) {
      const double p = std::exp(double(row[j]) - logz);
      const double onehot = (j == labels[size_t(i)]) ? 1.0 : 0.0;
      grow[j] = T((p - onehot) * invn);
    }
  }
  return {loss * invn, std::move(grad)};
}

template <typename T>
std::vector<int> argmax_rows(const Tensor<T>& logits) {
  if (logits.shape.size() != 2)
    throw std::invalid_argument("argmax_rows: expected (N, K)");
  const int n = logits.shape[0];
  const int k = logits.shape[1];
  std::vector<int> out(static_cast<size_t>(n), 0);
  for (int i = 0; i < n; ++i) {
    const T* row = logits.data() + size_t(i) * k;
    int best = 0;
    for (int j = 1; j < k; ++j)
      if (row[j] > row[best]) best = j;
    out[size_t(i)] = best;
  }
  return out;
}

template std::pair<double, Tensor<float>> mse_loss(const Tensor<float>&,
                                                   const Tensor<float>&);
template std::pair<double, Tensor<double>> mse_loss(const Tensor<double>&,
                                                    const Tensor<double>&);
template std::pair<double, Tensor<float>> softmax_xent(
    const Tensor<float>&, const std::vector<int>&);
template std::pair<double, Tensor<double>> softmax_xent(
    const Tensor<double>&, const std::vector<int>&);
template std::vector<int> argmax_rows(const Tensor<float>&);
template std::vector<int> argmax_rows(const Tensor<double>&);

}  // namespace rml::nn
