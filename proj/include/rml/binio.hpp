#pragma once

#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

// Little-endian binary encode/decode helpers shared by the RMLD/RMLW/RMLF
// file formats. Writers append to a std::string; readers walk a byte span.

namespace rml::binio {

inline void put_u8(std::string& b, uint8_t v) { b.push_back(char(v)); }
inline void put_i8(std::string& b, int8_t v) { b.push_back(char(v)); }

inline void put_u16(std::string& b, uint16_t v) {
  b.push_back(char(v & 0xff));
  b.push_back(char(v >> 8));
}

inline void put_u32(std::string& b, uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(char((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::string& b, uint64_t v) {
  for (int i = 0; i < 8; ++i) b.push_back(char((v >> (8 * i)) & 0xff));
}

inline void put_f32(std::string& b, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(b, bits);
}

inline void put_f32_array(std::string& b, const float* v, size_t n) {
  // host is little-endian on every supported target; memcpy the block
  static_assert(sizeof(float) == 4);
  b.append(reinterpret_cast<const char*>(v), n * 4);
}

inline void put_string(std::string& b, const std::string& s) {
  if (s.size() > 0xffff) throw std::runtime_error("string too long for format");
  put_u16(b, uint16_t(s.size()));
  b.append(s);
}

class Reader {
 public:
  Reader(const void* data, size_t len)
      : p_(static_cast<const uint8_t*>(data)), end_(p_ + len) {}
  explicit Reader(const std::string& s) : Reader(s.data(), s.size()) {}

  size_t remaining() const { return size_t(end_ - p_); }

  uint8_t u8() { return *take(1); }
  int8_t i8() { return int8_t(*take(1)); }

  uint16_t u16() {
    const uint8_t* p = take(2);
    return uint16_t(p[0]) | uint16_t(p[1]) << 8;
  }

  uint32_t u32() {
    const uint8_t* p = take(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= uint32_t(p[i]) << (8 * i);
    return v;
  }

  uint64_t u64() {
    const uint8_t* p = take(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= uint64_t(p[i]) << (8 * i);
    return v;
  }

  float f32() {
    uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }

  void f32_array(float* out, size_t n) {
    const uint8_t* p = take(n * 4);
    std::memcpy(out, p, n * 4);
  }

  std::string str() {
    const size_t n = u16();
    const uint8_t* p = take(n);
    return std::string(reinterpret_cast<const char*>(p), n);
  }

  void magic(const char tag[4]) {
    const uint8_t* p = take(4);
    if (std::memcmp(p, tag, 4) != 0)
      throw std::runtime_error(std::string("bad magic, expected ") +
                               std::string(tag, 4));
  }

 private:
  const uint8_t* take(size_t n) {
    if (remaining() < n) throw std::runtime_error("truncated binary input");
    const uint8_t* p = p_;
    p_ += n;
    return p;
  }
  const uint8_t* p_;
  const uint8_t* end_;
};

}  // namespace rml::binio
