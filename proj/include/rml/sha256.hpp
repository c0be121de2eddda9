#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace rml {

// Incremental SHA-256, used for artifact hashing in run manifests and for
// the byte-identity checks in tests.
class Sha256 {
 public:
  Sha256();
  void update(const void* data, size_t len);
  // Finalizes and returns the lowercase hex digest. May be called once.
  std::string hex_digest();

  static std::string of_bytes(const void* data, size_t len);
  static std::string of_string(const std::string& s);
  static std::string of_file(const std::string& path);

 private:
  void process_block(const uint8_t* block);
  uint32_t h_[8];
  uint8_t buf_[64];
  size_t buf_len_ = 0;
  uint64_t total_len_ = 0;
};

}  // namespace rml
