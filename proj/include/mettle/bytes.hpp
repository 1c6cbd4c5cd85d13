#pragma once

#include <cstdint>
#include <cstring>
#include <span>

namespace mettle {

/// dst ^= src over n bytes. Word-at-a-time; memcpy keeps it alias-safe and
/// lets the compiler vectorize.
inline void xor_bytes(std::uint8_t* dst, const std::uint8_t* src, std::size_t n) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    std::uint64_t a, b;
    std::memcpy(&a, dst + i, 8);
    std::memcpy(&b, src + i, 8);
    a ^= b;
    std::memcpy(dst + i, &a, 8);
  }
  for (; i < n; ++i) {
    dst[i] ^= src[i];
  }
}

inline bool all_zero(const std::uint8_t* p, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    if (p[i] != 0) return false;
  }
  return true;
}

using ByteSpan = std::span<const std::uint8_t>;

} // namespace mettle
