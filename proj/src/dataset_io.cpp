#include "rml/dataset_io.hpp"

#include <map>

#include <json.hpp>

#include "rml/binio.hpp"
#include "rml/util.hpp"

namespace rml::signal {

std::string serialize_dataset(const Dataset& ds) {
  std::string b;
  b.reserve(64 + ds.examples.size() * (2 + 256 * 4));
  b.append("RMLD");
  binio::put_u16(b, kRmldVersion);
  binio::put_u16(b, uint16_t(ds.class_table.size()));
  for (const auto& name : ds.class_table) binio::put_string(b, name);
  binio::put_u16(b, uint16_t(ds.snr_grid.size()));
  for (int s : ds.snr_grid) binio::put_i8(b, int8_t(s));
  binio::put_u32(b, uint32_t(ds.examples.size()));
  binio::put_u64(b, ds.generator_seed);
  for (const auto& ex : ds.examples) {
    binio::put_u8(b, ex.class_id);
    binio::put_i8(b, ex.snr_db);
    binio::put_f32_array(b, ex.frame.v.data(), 256);
  }
  return b;
}

Dataset deserialize_dataset(const std::string& bytes) {
  binio::Reader r(bytes);
  r.magic("RMLD");
  const uint16_t version = r.u16();
  if (version != kRmldVersion)
    throw std::runtime_error("RMLD: unsupported version " +
                             std::to_string(version));
  Dataset ds;
  ds.class_table.clear();
  const uint16_t n_classes = r.u16();
  for (uint16_t i = 0; i < n_classes; ++i) ds.class_table.push_back(r.str());
  const uint16_t n_snr = r.u16();
  ds.snr_grid.clear();
  for (uint16_t i = 0; i < n_snr; ++i) ds.snr_grid.push_back(int(r.i8()));
  const uint32_t count = r.u32();
  ds.generator_seed = r.u64();
  ds.examples.resize(count);
  for (uint32_t i = 0; i < count; ++i) {
    auto& ex = ds.examples[i];
    ex.class_id = r.u8();
    ex.snr_db = r.i8();
    if (ex.class_id >= ds.class_table.size())
      throw std::runtime_error("RMLD: class id outside class table");
    r.f32_array(ex.frame.v.data(), 256);
  }
  return ds;
}

std::string dataset_sidecar_json(const Dataset& ds) {
  nlohmann::ordered_json j;
  j["format"] = "RMLD";
  j["format_version"] = kRmldVersion;
  j["classes"] = ds.class_table;
  j["snr_grid"] = ds.snr_grid;
  j["example_count"] = ds.examples.size();
  j["master_seed"] = ds.generator_seed;
  std::map<std::string, size_t> per_class;
  std::map<int, size_t> per_snr;
  for (const auto& ex : ds.examples) {
    per_class[ds.class_table[ex.class_id]]++;
    per_snr[int(ex.snr_db)]++;
  }
  j["counts_per_class"] = per_class;
  nlohmann::ordered_json snr_counts = nlohmann::ordered_json::object();
  for (const auto& [snr, n] : per_snr) snr_counts[std::to_string(snr)] = n;
  j["counts_per_snr"] = snr_counts;
  return j.dump(2) + "\n";
}

void save_dataset(const std::string& path, const Dataset& ds,
                  bool write_sidecar) {
  atomic_write_file(path, serialize_dataset(ds));
  if (write_sidecar) atomic_write_file(path + ".json", dataset_sidecar_json(ds));
}

Dataset load_dataset(const std::string& path) {
  return deserialize_dataset(read_text_file(path));
}

}  // namespace rml::signal
