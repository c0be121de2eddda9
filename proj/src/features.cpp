#include "rml/features.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "rml/binio.hpp"
#include "rml/util.hpp"

namespace rml::features {

void FeatureMatrix::validate() const {
  if (v.size() != n * d)
    throw std::invalid_argument("features: value count != n*d");
  if (meta.size() != n)
    throw std::invalid_argument("features: row_meta length != n");
  for (float x : v)
    if (!std::isfinite(x))
      throw std::invalid_argument("features: non-finite value");
}

std::string serialize_features(const FeatureMatrix& fm) {
  fm.validate();
  std::string b;
  b.reserve(32 + fm.n * (6 + fm.d * 4));
  b.append("RMLF");
  binio::put_u16(b, kRmlfVersion);
  binio::put_u32(b, uint32_t(fm.n));
  binio::put_u32(b, uint32_t(fm.d));
  binio::put_u16(b, uint16_t(fm.class_table.size()));
  for (const auto& name : fm.class_table) binio::put_string(b, name);
  for (const auto& m : fm.meta) {
    binio::put_u32(b, m.id);
    binio::put_u8(b, m.class_id);
    binio::put_i8(b, m.snr_db);
  }
  binio::put_f32_array(b, fm.v.data(), fm.v.size());
  return b;
}

FeatureMatrix deserialize_features(const std::string& bytes) {
  binio::Reader r(bytes);
  r.magic("RMLF");
  const uint16_t version = r.u16();
  if (version != kRmlfVersion)
    throw std::runtime_error("RMLF: unsupported version " +
                             std::to_string(version));
  FeatureMatrix fm;
  fm.n = r.u32();
  fm.d = r.u32();
  const uint16_t n_classes = r.u16();
  for (uint16_t i = 0; i < n_classes; ++i) fm.class_table.push_back(r.str());
  fm.meta.resize(fm.n);
  for (auto& m : fm.meta) {
    m.id = r.u32();
    m.class_id = r.u8();
    m.snr_db = r.i8();
  }
  fm.v.resize(fm.n * fm.d);
  r.f32_array(fm.v.data(), fm.v.size());
  return fm;
}

void save_features(const std::string& path, const FeatureMatrix& fm) {
  atomic_write_file(path, serialize_features(fm));
}

FeatureMatrix load_features(const std::string& path) {
  return deserialize_features(read_text_file(path));
}

std::string features_csv(const FeatureMatrix& fm) {
  std::string out = "# format=rml-features/1\n";
  out += "id,class,snr";
  for (size_t j = 0; j < fm.d; ++j) out += ",f" + std::to_string(j);
  out += "\n";
  char buf[32];
  for (size_t i = 0; i < fm.n; ++i) {
    const auto& m = fm.meta[i];
    const std::string cname = m.class_id < fm.class_table.size()
                                  ? fm.class_table[m.class_id]
                                  : std::to_string(int(m.class_id));
    out += std::to_string(m.id) + "," + cname + "," + std::to_string(int(m.snr_db));
    for (size_t j = 0; j < fm.d; ++j) {
      std::snprintf(buf, sizeof(buf), ",%.9g", double(fm.row(i)[j]));
      out += buf;
    }
    out += "\n";
  }
  return out;
}

}  // namespace rml::features
