#pragma once

#include <string>

#include "rml/checkpoint.hpp"
#include "rml/data_bridge.hpp"
#include "rml/train.hpp"

namespace rml::ae {

// Convolutional autoencoder over 2x128 IQ frames with a code_dim-wide
// bottleneck. The two presets differ only in filter counts; the reference
// figures never pin the exact sizes.
struct AutoencoderSpec {
  std::vector<nn::LayerSpec> encoder;  // ends in Dense(code_dim, linear)
  std::vector<nn::LayerSpec> decoder;  // ends reshaped back to 1x2x128
  int code_dim = 30;
  double dropout_rate = 0.4;
  double input_noise_sigma = 0.05;

  // presets: "convae1" (32/16 filters), "convae2" (64/32 filters)
  static AutoencoderSpec preset(const std::string& name);
  static AutoencoderSpec with_filters(int conv1_filters, int conv2_filters,
                                      int code_dim = 30,
                                      double dropout_rate = 0.4,
                                      double input_noise_sigma = 0.05);
  void validate() const;
};

struct ConvAe {
  nn::Network<float> net;
  size_t encoder_layers = 0;  // prefix length whose output is the code
  int code_dim = 0;
};

ConvAe build_convae(const AutoencoderSpec& spec, uint64_t seed);

// Unsupervised training: noisy inputs against clean targets (labels are
// ignored). cfg.input_noise_sigma controls the corruption level.
nn::TrainHistory train_convae(ConvAe& ae, const signal::Dataset& ds,
                              const nn::TrainConfig& cfg);

// Eval-mode pass through the encoder half only; row metadata is carried
// when a dataset is supplied.
features::FeatureMatrix encode(const ConvAe& ae, const nn::Tensor<float>& frames);
features::FeatureMatrix encode(const ConvAe& ae, const signal::Dataset& ds);

struct Reconstruction {
  nn::Tensor<float> frames;          // (N, 1, 2, 128)
  std::vector<double> example_mse;   // per example
  double mean_mse = 0.0;
};

Reconstruction reconstruct(const ConvAe& ae, const nn::Tensor<float>& frames);

// Checkpoint round-trip with role tag "convae".
void save_convae(const std::string& path, const ConvAe& ae,
                 const nn::TrainHistory& hist, const nn::TrainConfig& cfg);
ConvAe convae_from_checkpoint(const nn::LoadedCheckpoint& ck);

}  // namespace rml::ae
