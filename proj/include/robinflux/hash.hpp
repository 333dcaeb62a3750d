#pragma once

#include <cstdint>
#include <cstring>
#include <string>

namespace robinflux {

// FNV-1a 64-bit; used for content hashes in manifests and cache keys.
struct Fnv1a {
  uint64_t state = 0xcbf29ce484222325ull;

  void feed(const void* data, size_t len) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) {
      state ^= p[i];
      state *= 0x100000001b3ull;
    }
  }
  void feed_u64(uint64_t v) { feed(&v, sizeof v); }
  void feed_i64(int64_t v) { feed(&v, sizeof v); }
  void feed_double(double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    feed_u64(bits);
  }
  void feed_str(const std::string& s) { feed(s.data(), s.size()); }
  uint64_t value() const { return state; }
};

inline std::string hex_u64(uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[size_t(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

}  // namespace robinflux
