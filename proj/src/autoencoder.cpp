#include "rml/autoencoder.hpp"

#include <cmath>
#include <stdexcept>

namespace rml::ae {

using nn::Act;
using nn::LayerSpec;
using nn::Pad;

AutoencoderSpec AutoencoderSpec::with_filters(int f1, int f2, int code_dim,
                                              double dropout_rate,
                                              double input_noise_sigma) {
  // encoder: conv(f1,1x7,same) -> relu -> dropout -> conv(f2,2x5,valid)
  //          -> relu -> dense(code)
  // decoder: dense(124*f2,relu) -> reshape -> conv(f1,1x5,same) -> relu
  //          -> dense(256) -> reshape(1,2,128)
  AutoencoderSpec s;
  s.code_dim = code_dim;
  s.dropout_rate = dropout_rate;
  s.input_noise_sigma = input_noise_sigma;
  s.encoder = {
      LayerSpec::Conv2D(f1, 1, 7, Pad::same),
      LayerSpec::ReLU(),
      LayerSpec::Dropout(dropout_rate),
      LayerSpec::Conv2D(f2, 2, 5, Pad::valid),
      LayerSpec::ReLU(),
      LayerSpec::Dense(code_dim, Act::linear),
  };
  s.decoder = {
      LayerSpec::Dense(124 * f2, Act::relu),
      LayerSpec::Reshape({f2, 1, 124}),
      LayerSpec::Conv2D(f1, 1, 5, Pad::same),
      LayerSpec::ReLU(),
      LayerSpec::Dense(256, Act::linear),
      LayerSpec::Reshape({1, 2, 128}),
  };
  return s;
}

AutoencoderSpec AutoencoderSpec::preset(const std::string& name) {
  if (name == "convae1") return with_filters(32, 16);
  if (name == "convae2") return with_filters(64, 32);
  throw std::invalid_argument("unknown autoencoder preset: " + name);
}

void AutoencoderSpec::validate() const {
  if (code_dim < 1) throw std::invalid_argument("autoencoder: code_dim >= 1");
  if (encoder.empty() || decoder.empty())
    throw std::invalid_argument("autoencoder: empty encoder or decoder");
  const auto& tail = encoder.back();
  if (tail.kind != LayerSpec::Kind::dense || tail.units != code_dim ||
      tail.act != Act::linear)
    throw std::invalid_argument(
        "autoencoder: encoder must end in Dense(code_dim, linear)");
  // shape algebra: decoder must return exactly to the input shape
  nn::Shape cur = kFrameShape;
  for (const auto& spec : encoder) cur = nn::infer_out_shape(spec, cur);
  if (nn::shape_numel(cur) != size_t(code_dim))
    throw std::invalid_argument("autoencoder: encoder output is not the code");
  for (const auto& spec : decoder) cur = nn::infer_out_shape(spec, cur);
  if (cur != kFrameShape)
    throw std::invalid_argument("autoencoder: decoder output shape " +
                                nn::shape_str(cur) + " != input shape " +
                                nn::shape_str(kFrameShape));
}

ConvAe build_convae(const AutoencoderSpec& spec, uint64_t seed) {
  spec.validate();
  std::vector<LayerSpec> all = spec.encoder;
  all.insert(all.end(), spec.decoder.begin(), spec.decoder.end());
  ConvAe ae{nn::Network<float>(all, kFrameShape, seed), spec.encoder.size(),
            spec.code_dim};
  return ae;
}

nn::TrainHistory train_convae(ConvAe& ae, const signal::Dataset& ds,
                              const nn::TrainConfig& cfg) {
  if (ds.size() == 0) throw std::invalid_argument("train_convae: empty dataset");
  const auto inputs = dataset_inputs(ds);
  // reconstruction objective: clean targets even when inputs are noisy
  return nn::train_mse(ae.net, inputs, inputs, cfg);
}

namespace {
constexpr size_t kEvalBatch = 256;
}

features::FeatureMatrix encode(const ConvAe& ae,
                               const nn::Tensor<float>& frames) {
  const size_t n = size_t(frames.batch());
  features::FeatureMatrix fm;
  fm.n = n;
  fm.d = size_t(ae.code_dim);
  fm.v.resize(n * fm.d);
  fm.meta.resize(n);
  for (size_t i = 0; i < n; ++i) fm.meta[i].id = uint32_t(i);
  const size_t row = frames.row_size();
  for (size_t off = 0; off < n; off += kEvalBatch) {
    const size_t take = std::min(kEvalBatch, n - off);
    nn::Tensor<float> chunk({int(take), 1, 2, 128});
    std::copy_n(frames.data() + off * row, take * row, chunk.data());
    const auto codes = ae.net.forward_prefix(chunk, ae.encoder_layers);
    std::copy_n(codes.data(), take * fm.d, fm.v.data() + off * fm.d);
  }
  return fm;
}

features::FeatureMatrix encode(const ConvAe& ae, const signal::Dataset& ds) {
  auto fm = encode(ae, dataset_inputs(ds));
  fm.meta = dataset_meta(ds);
  fm.class_table = ds.class_table;
  return fm;
}

Reconstruction reconstruct(const ConvAe& ae, const nn::Tensor<float>& frames) {
  const size_t n = size_t(frames.batch());
  Reconstruction rec;
  rec.frames = nn::Tensor<float>({int(n), 1, 2, 128});
  rec.example_mse.resize(n, 0.0);
  const size_t row = frames.row_size();
  double total = 0.0;
  for (size_t off = 0; off < n; off += kEvalBatch) {
    const size_t take = std::min(kEvalBatch, n - off);
    nn::Tensor<float> chunk({int(take), 1, 2, 128});
    std::copy_n(frames.data() + off * row, take * row, chunk.data());
    const auto out = ae.net.forward_prefix(chunk, ae.net.layer_count());
    std::copy_n(out.data(), take * row, rec.frames.data() + off * row);
    for (size_t i = 0; i < take; ++i) {
      double acc = 0.0;
      const float* a = out.data() + i * row;
      const float* b = chunk.data() + i * row;
      for (size_t k = 0; k < row; ++k) {
        const double diff = double(a[k]) - double(b[k]);
        acc += diff * diff;
      }
      rec.example_mse[off + i] = acc / double(row);
      total += acc / double(row);
    }
  }
  rec.mean_mse = n > 0 ? total / double(n) : 0.0;
  return rec;
}

void save_convae(const std::string& path, const ConvAe& ae,
                 const nn::TrainHistory& hist, const nn::TrainConfig& cfg) {
  nn::CheckpointMeta meta;
  meta.role = "convae";
  meta.code_prefix_layers = int(ae.encoder_layers);
  meta.class_table = signal::all_class_names();
  meta.seed = cfg.seed;
  meta.epochs_run = hist.rows.empty() ? 0 : hist.rows.back().epoch;
  meta.best_epoch = hist.best_epoch;
  meta.best_val_loss = hist.best_val_loss;
  meta.optimizer = cfg.optimizer == nn::OptKind::adam ? "adam" : "rmsprop";
  nn::save_checkpoint(path, ae.net, meta);
}

ConvAe convae_from_checkpoint(const nn::LoadedCheckpoint& ck) {
  if (ck.meta.role != "convae")
    throw std::runtime_error("checkpoint role is '" + ck.meta.role +
                             "', expected 'convae'");
  if (ck.meta.code_prefix_layers < 1)
    throw std::runtime_error("convae checkpoint: missing code prefix");
  ConvAe ae{ck.net, size_t(ck.meta.code_prefix_layers), 0};
  const auto& code_shape = ae.net.shape_after(ae.encoder_layers);
  ae.code_dim = int(nn::shape_numel(code_shape));
  return ae;
}

}  // namespace rml::ae
