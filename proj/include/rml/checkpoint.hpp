#pragma once

#include <string>

#include "rml/network.hpp"

namespace rml::nn {

// RMLW container: magic "RMLW", u16 version, u32 JSON header length, JSON
// header (role, layer specs, input shape, classes, seed, training metadata),
// then raw little-endian f32 parameter buffers in layer order.
inline constexpr uint16_t kRmlwVersion = 1;

struct CheckpointMeta {
  std::string role;                // "convae" | "bootstrap"
  int code_prefix_layers = -1;     // encoder prefix length (convae)
  int feature_prefix_layers = -1;  // penultimate prefix length (bootstrap)
  std::vector<std::string> class_table;
  std::vector<int> trained_class_ids;  // bootstrap: classes seen in training
  uint64_t seed = 0;
  // training metadata for traceability
  int epochs_run = 0;
  int best_epoch = -1;
  double best_val_loss = 0.0;
  std::string optimizer;
};

std::string serialize_checkpoint(const Network<float>& net,
                                 const CheckpointMeta& meta);

struct LoadedCheckpoint {
  Network<float> net;
  CheckpointMeta meta;
};

LoadedCheckpoint deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const std::string& path, const Network<float>& net,
                     const CheckpointMeta& meta);
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace rml::nn
