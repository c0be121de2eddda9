#pragma once

#include <string>

#include "rml/signal.hpp"

namespace rml::signal {

// RMLD container, little-endian:
//   magic "RMLD", u16 version,
//   u16 class count, then length-prefixed UTF-8 names (id = order),
//   u16 snr count, then i8 dB values,
//   u32 example count, u64 master seed,
//   records: u8 class id, i8 snr dB, 128 f32 I values, 128 f32 Q values.
// A JSON sidecar at <path>.json mirrors the header for inspection.
inline constexpr uint16_t kRmldVersion = 1;

std::string serialize_dataset(const Dataset& ds);
Dataset deserialize_dataset(const std::string& bytes);

void save_dataset(const std::string& path, const Dataset& ds,
                  bool write_sidecar = true);
Dataset load_dataset(const std::string& path);

std::string dataset_sidecar_json(const Dataset& ds);

}  // namespace rml::signal
