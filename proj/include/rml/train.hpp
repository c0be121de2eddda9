#pragma once

#include <functional>
#include <optional>

#include "rml/network.hpp"
#include "rml/optim.hpp"

namespace rml::nn {

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 64;
  int max_epochs = 50;
  int early_stop_patience = 10;
  double validation_fraction = 0.1;
  uint64_t seed = 1;
  double input_noise_sigma = 0.0;  // Gaussian noise on inputs; targets clean
  OptKind optimizer = OptKind::adam;

  void validate() const;
};

struct TrainHistory {
  struct Row {
    int epoch;          // 0 = pre-training evaluation
    double train_loss;  // epoch 0: eval-mode loss on the training split
    double val_loss;    // NaN when there is no validation split
  };
  std::vector<Row> rows;
  int best_epoch = -1;
  double best_val_loss = 0.0;
  bool diverged = false;
  int diverged_epoch = -1;

  bool empty() const { return rows.empty(); }
};

// Adds seeded zero-mean Gaussian noise (std sigma) to a copy of the batch.
template <typename T>
Tensor<T> add_input_noise(const Tensor<T>& batch, double sigma, uint64_t seed);

// Minibatch training with seeded shuffling and early stopping on the
// validation loss; the best-validation parameters are restored on return.
// Divergence (non-finite loss) stops training and is flagged in the history.
template <typename T>
TrainHistory train_mse(Network<T>& net, const Tensor<T>& inputs,
                       const Tensor<T>& targets, const TrainConfig& cfg);

template <typename T>
TrainHistory train_xent(Network<T>& net, const Tensor<T>& inputs,
                        const std::vector<int>& labels, const TrainConfig& cfg);

// Central-difference gradient verification on every parameter of the
// network: returns the maximum relative error between analytic gradients
// and (L(p+h) - L(p-h)) / 2h. Dropout masks are frozen for the duration so
// the loss is a deterministic function of the parameters. Use with
// T = double; float lacks the headroom for h = 1e-5.
template <typename T>
double grad_check(Network<T>& net,
                  const std::function<std::pair<double, Tensor<T>>(
                      const Tensor<T>& output)>& loss_fn,
                  const Tensor<T>& batch, double h);

}  // namespace rml::nn
