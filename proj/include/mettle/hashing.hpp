#pragma once

#include <bit>
#include <cstdint>

namespace mettle {

/// 64-bit finalizer with strong avalanche (the SplitMix64 mixing function).
/// All keyed randomness in the codec is built from this single primitive so
/// that encoder, decoder, and any reference implementation agree bit for bit.
inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

/// Folds (seed, a, b, c) into one well-mixed 64-bit key.
inline constexpr std::uint64_t derive_key(std::uint64_t seed, std::uint64_t a,
                                          std::uint64_t b, std::uint64_t c) {
  std::uint64_t k = mix64(seed + kGolden);
  k = mix64(k ^ a);
  k = mix64(k ^ b);
  k = mix64(k ^ c);
  return k;
}

/// Domain tags keep independent random streams from colliding even when the
/// remaining key material happens to match.
enum StreamDomain : std::uint64_t {
  kDomainMetEdge = 1,
  kDomainChannel = 2,
  kDomainLtSymbol = 3,
  kDomainPayloadFill = 4,
};

/// Deterministic counter-based word stream: word_j = mix64(key + (j+1)*golden),
/// consumed sequentially. Cheap to construct, so one is made per (ball, edge,
/// attempt) triple.
class KeyedStream {
public:
  explicit KeyedStream(std::uint64_t key) : state_(key) {}
  KeyedStream(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
              std::uint64_t c)
      : state_(derive_key(seed, a, b, c)) {}

  std::uint64_t next_u64() {
    state_ += kGolden;
    return mix64(state_);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [0, bound) via the 128-bit multiply-shift reduction.
  std::uint64_t next_below(std::uint64_t bound) {
    const unsigned __int128 m =
        static_cast<unsigned __int128>(next_u64()) * bound;
    return static_cast<std::uint64_t>(m >> 64);
  }

private:
  std::uint64_t state_;
};

/// Precomputed layout of m-bit Bernoulli fields within 64-bit stream words.
/// Fields are taken LSB-first, floor(64/m) whole fields per word; leftover
/// high bits are discarded.
struct FieldSpec {
  int m = 1;
  int per_word = 64;
  std::uint64_t base_mask = ~0ULL; // 1 at the lowest bit of every field

  static constexpr FieldSpec make(int m) {
    FieldSpec spec;
    spec.m = m;
    spec.per_word = 64 / m;
    spec.base_mask = 0;
    for (int pos = 0; pos + m <= 64; pos += m) {
      spec.base_mask |= 1ULL << pos;
    }
    return spec;
  }
};

namespace detail {

/// Number of all-zero m-bit fields among the first `count` fields of `word`.
inline int count_zero_fields(std::uint64_t word, const FieldSpec& spec,
                             int count) {
  std::uint64_t t = ~word;
  for (int j = 1; j < spec.m; ++j) {
    t &= ~word >> j;
  }
  std::uint64_t hits = t & spec.base_mask;
  const int used_bits = count * spec.m;
  if (used_bits < 64) {
    hits &= (1ULL << used_bits) - 1;
  }
  return std::popcount(hits);
}

} // namespace detail

/// Exact Binomial(n, 2^-m) sample: n Bernoulli trials, each the test that an
/// m-bit field of the word stream is all zero.
inline std::uint32_t binomial_pow2(KeyedStream& stream, std::uint32_t n,
                                   const FieldSpec& spec) {
  std::uint32_t remaining = n;
  std::uint32_t successes = 0;
  while (remaining > 0) {
    const std::uint64_t w = stream.next_u64();
    const int take = remaining < static_cast<std::uint32_t>(spec.per_word)
                         ? static_cast<int>(remaining)
                         : spec.per_word;
    successes += static_cast<std::uint32_t>(detail::count_zero_fields(w, spec, take));
    remaining -= static_cast<std::uint32_t>(take);
  }
  return successes;
}

inline std::uint32_t binomial_pow2(KeyedStream& stream, std::uint32_t n, int m) {
  return binomial_pow2(stream, n, FieldSpec::make(m));
}

} // namespace mettle
