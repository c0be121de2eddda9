#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rml::features {

struct RowMeta {
  uint32_t id = 0;
  uint8_t class_id = 0;
  int8_t snr_db = 0;
};

// N x D representation matrix with per-row provenance. The currency between
// the representation learners and the embedding/clustering stages.
struct FeatureMatrix {
  size_t n = 0;
  size_t d = 0;
  std::vector<float> v;  // row-major
  std::vector<RowMeta> meta;
  std::vector<std::string> class_table;

  float* row(size_t i) { return v.data() + i * d; }
  const float* row(size_t i) const { return v.data() + i * d; }
  void validate() const;
};

// RMLF container, little-endian:
//   magic "RMLF", u16 version, u32 N, u32 D,
//   u16 class count + length-prefixed names,
//   N x { u32 id, u8 class, i8 snr },
//   N*D f32 values.
inline constexpr uint16_t kRmlfVersion = 1;

std::string serialize_features(const FeatureMatrix& fm);
FeatureMatrix deserialize_features(const std::string& bytes);
void save_features(const std::string& path, const FeatureMatrix& fm);
FeatureMatrix load_features(const std::string& path);

// CSV export: header "id,class,snr,f0,...,f{D-1}".
std::string features_csv(const FeatureMatrix& fm);

}  // namespace rml::features
