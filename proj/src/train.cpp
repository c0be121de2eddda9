#include "rml/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "rml/losses.hpp"

namespace rml::nn {

namespace {

constexpr uint64_t kSplitTag = 0x5b1117;
constexpr uint64_t kShuffleTag = 0x5b0ff1e;
constexpr uint64_t kNoiseTag = 0x4015e;
constexpr uint64_t kDropTag = 0xd20b;

template <typename T>
Tensor<T> gather_rows(const Tensor<T>& src, const std::vector<size_t>& idx) {
  Shape s = src.shape;
  s[0] = int(idx.size());
  Tensor<T> out(s);
  const size_t row = src.row_size();
  for (size_t i = 0; i < idx.size(); ++i)
    std::copy_n(src.data() + idx[i] * row, row, out.data() + i * row);
  return out;
}

template <typename T>
void seeded_shuffle(std::vector<T>& v, Rng rng) {
  for (size_t i = v.size(); i > 1; --i)
    std::swap(v[i - 1], v[size_t(rng.below(i))]);
}

// Shared minibatch loop; loss_at computes loss and output-gradient for the
// rows named by idx.
template <typename T>
TrainHistory train_impl(
    Network<T>& net, const Tensor<T>& inputs, const TrainConfig& cfg,
    const std::function<std::pair<double, Tensor<T>>(
        const Tensor<T>& out, const std::vector<size_t>& idx)>& loss_at) {
  cfg.validate();
  const size_t n = size_t(inputs.batch());
  if (n == 0) throw std::invalid_argument("train: empty dataset");

  TrainHistory hist;
  if (cfg.max_epochs == 0) return hist;

  Rng base(cfg.seed);

  // validation split
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  seeded_shuffle(order, base.fork(kSplitTag));
  const size_t n_val = size_t(double(n) * cfg.validation_fraction);
  std::vector<size_t> val_idx(order.begin(), order.begin() + long(n_val));
  std::vector<size_t> train_idx(order.begin() + long(n_val), order.end());
  if (train_idx.empty())
    throw std::invalid_argument("train: validation fraction leaves no data");
  const bool has_val = !val_idx.empty();

  Rng dropout_rng = base.fork(kDropTag);
  net.set_rng(&dropout_rng);

  OptConfig oc;
  oc.kind = cfg.optimizer;
  oc.lr = cfg.learning_rate;
  auto params = net.params();
  Optimizer<T> opt(oc, params);

  auto eval_split = [&](const std::vector<size_t>& idx) {
    double acc = 0.0;
    size_t done = 0;
    while (done < idx.size()) {
      const size_t take = std::min(size_t(cfg.batch_size), idx.size() - done);
      std::vector<size_t> slice(idx.begin() + long(done),
                                idx.begin() + long(done + take));
      Tensor<T> out = net.forward(gather_rows(inputs, slice), Mode::eval);
      acc += loss_at(out, slice).first * double(take);
      done += take;
    }
    return acc / double(idx.size());
  };

  const double nan = std::numeric_limits<double>::quiet_NaN();
  double val0 = has_val ? eval_split(val_idx) : nan;
  hist.rows.push_back({0, eval_split(train_idx), val0});

  std::vector<T> best_params = net.save_params();
  hist.best_epoch = 0;
  hist.best_val_loss = has_val ? val0 : nan;
  int stall = 0;
  uint64_t step = 0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    seeded_shuffle(train_idx, base.fork(mix64(kShuffleTag, uint64_t(epoch))));

    double epoch_loss = 0.0;
    size_t seen = 0;
    bool bad = false;
    for (size_t off = 0; off < train_idx.size() && !bad;
         off += size_t(cfg.batch_size)) {
      const size_t take =
          std::min(size_t(cfg.batch_size), train_idx.size() - off);
      std::vector<size_t> slice(train_idx.begin() + long(off),
                                train_idx.begin() + long(off + take));
      Tensor<T> batch = gather_rows(inputs, slice);
      if (cfg.input_noise_sigma > 0.0)
        batch = add_input_noise(batch, cfg.input_noise_sigma,
                                mix64(cfg.seed, mix64(kNoiseTag, step)));
      Tensor<T> out = net.forward(batch, Mode::train);
      auto [loss, grad] = loss_at(out, slice);
      if (!std::isfinite(loss)) {
        hist.diverged = true;
        hist.diverged_epoch = epoch;
        bad = true;
        break;
      }
      net.zero_grads();
      net.backward(grad);
      opt.step(params);
      epoch_loss += loss * double(take);
      seen += take;
      ++step;
    }
    if (hist.diverged) break;

    const double train_loss = epoch_loss / double(seen);
    const double val_loss = has_val ? eval_split(val_idx) : nan;
    hist.rows.push_back({epoch, train_loss, val_loss});

    if (has_val) {
      if (val_loss < hist.best_val_loss) {
        hist.best_val_loss = val_loss;
        hist.best_epoch = epoch;
        best_params = net.save_params();
        stall = 0;
      } else if (++stall >= cfg.early_stop_patience) {
        break;
      }
    } else {
      hist.best_epoch = epoch;
      best_params = net.save_params();
    }
  }

  net.load_params(best_params);
  net.set_rng(nullptr);
  return hist;
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
    throw std::invalid_argument("validation_fraction must be in [0, 1)");
  if (max_epochs < 0) throw std::invalid_argument("max_epochs must be >= 0");
  if (early_stop_patience < 1)
    throw std::invalid_argument("early_stop_patience must be >= 1");
  if (input_noise_sigma < 0.0)
    throw std::invalid_argument("input_noise_sigma must be >= 0");
  if (!(learning_rate > 0.0))
    throw std::invalid_argument("learning_rate must be > 0");
}

template <typename T>
Tensor<T> add_input_noise(const Tensor<T>& batch, double sigma,
                          uint64_t seed) {
  if (sigma < 0.0) throw std::invalid_argument("noise sigma must be >= 0");
  if (sigma == 0.0) return batch;
  Tensor<T> out = batch;
  Rng rng(seed);
  for (auto& v : out.v) v += T(sigma * rng.gaussian());
  return out;
}

template <typename T>
TrainHistory train_mse(Network<T>& net, const Tensor<T>& inputs,
                       const Tensor<T>& targets, const TrainConfig& cfg) {
  if (targets.batch() != inputs.batch())
    throw std::invalid_argument("train_mse: input/target batch mismatch");
  return train_impl<T>(net, inputs, cfg,
                       [&](const Tensor<T>& out, const std::vector<size_t>& idx) {
                         return mse_loss(out, gather_rows(targets, idx));
                       });
}

template <typename T>
TrainHistory train_xent(Network<T>& net, const Tensor<T>& inputs,
                        const std::vector<int>& labels,
                        const TrainConfig& cfg) {
  if (int(labels.size()) != inputs.batch())
    throw std::invalid_argument("train_xent: input/label count mismatch");
  return train_impl<T>(net, inputs, cfg,
                       [&](const Tensor<T>& out, const std::vector<size_t>& idx) {
                         std::vector<int> sub(idx.size());
                         for (size_t i = 0; i < idx.size(); ++i)
                           sub[i] = labels[idx[i]];
                         return softmax_xent(out, sub);
                       });
}

template <typename T>
double grad_check(Network<T>& net,
                  const std::function<std::pair<double, Tensor<T>>(
                      const Tensor<T>& output)>& loss_fn,
                  const Tensor<T>& batch, double h) {
  Rng mask_rng(net.init_seed() ^ 0xfeedULL);
  net.set_rng(&mask_rng);
  net.set_frozen_masks(true);

  // analytic pass (also draws and freezes any dropout masks)
  Tensor<T> out = net.forward(batch, Mode::train);
  auto [loss0, grad0] = loss_fn(out);
  (void)loss0;
  net.zero_grads();
  net.backward(grad0);

  std::vector<std::vector<T>> analytic;
  for (Tensor<T>* p : net.params()) analytic.push_back(p->g);

  auto loss_value = [&]() {
    return loss_fn(net.forward(batch, Mode::train)).first;
  };

  double worst = 0.0;
  auto params = net.params();
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Tensor<T>* p = params[pi];
    for (size_t j = 0; j < p->size(); ++j) {
      const T saved = p->v[j];
      p->v[j] = saved + T(h);
      const double lp = loss_value();
      p->v[j] = saved - T(h);
      const double lm = loss_value();
      p->v[j] = saved;
      const double numeric = (lp - lm) / (2.0 * h);
      const double a = double(analytic[pi][j]);
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }

  net.set_frozen_masks(false);
  net.set_rng(nullptr);
  return worst;
}

template Tensor<float> add_input_noise(const Tensor<float>&, double, uint64_t);
template Tensor<double> add_input_noise(const Tensor<double>&, double, uint64_t);
template TrainHistory train_mse(Network<float>&, const Tensor<float>&,
                                const Tensor<float>&, const TrainConfig&);
template TrainHistory train_mse(Network<double>&, const Tensor<double>&,
                                const Tensor<double>&, const TrainConfig&);
template TrainHistory train_xent(Network<float>&, const Tensor<float>&,
                                 const std::vector<int>&, const TrainConfig&);
template TrainHistory train_xent(Network<double>&, const Tensor<double>&,
                                 const std::vector<int>&, const TrainConfig&);
template double grad_check(Network<float>&,
                           const std::function<std::pair<double, Tensor<float>>(
                               const Tensor<float>&)>&,
                           const Tensor<float>&, double);
template double grad_check(Network<double>&,
                           const std::function<std::pair<double, Tensor<double>>(
                               const Tensor<double>&)>&,
                           const Tensor<double>&, double);

}  // namespace rml::nn
