#pragma once

#include <vector>

#include "rml/tensor.hpp"

namespace rml::nn {

// Mean squared error over all elements; grad = 2*(pred - target)/count.
template <typename T>
std::pair<double, Tensor<T>> mse_loss(const Tensor<T>& pred,
                                      const Tensor<T>& target);

// Mean softmax cross-entropy over the batch, max-subtraction stabilized;
// grad = (softmax - one_hot)/batch. logits are (N, K), labels in [0, K).
template <typename T>
std::pair<double, Tensor<T>> softmax_xent(const Tensor<T>& logits,
                                          const std::vector<int>& labels);

// Row-wise argmax of (N, K) logits.
template <typename T>
std::vector<int> argmax_rows(const Tensor<T>& logits);

}  // namespace rml::nn
