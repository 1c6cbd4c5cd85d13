#pragma once

#include <cstdint>
#include <stdexcept>

#include "mettle/rational.hpp"

namespace mettle {

inline constexpr std::uint32_t kMaxEdges = 8;

/// Parameters of one code instance. `c` is the overhead ratio kept as an
/// exact rational; every bin-index computation below floors an exact
/// (1+c)-scaled product, never a floating-point one.
struct CodeParams {
  Rational c;                    // overhead ratio, > 0
  std::uint32_t w = 600;         // coupling window, in ball positions
  std::uint32_t l = 4;           // edges per ball
  std::uint64_t seed = 0;
  std::uint32_t symbol_size = 1500; // payload bytes per symbol

  /// 1 + c as a rational.
  Rational rate() const { return Rational(c.num() + c.den(), c.den()); }

  /// floor((1+c) * t)
  std::uint64_t scaled_floor(std::uint64_t t) const {
    return floor_mul(rate(), t);
  }

  /// Number of Bernoulli trials behind each MET edge draw: floor((1+c) * w).
  std::uint32_t met_trials() const {
    const std::uint64_t n = scaled_floor(w);
    return static_cast<std::uint32_t>(n);
  }

  void validate() const {
    if (c.is_zero()) {
      throw std::invalid_argument("code params: c must be > 0");
    }
    if (w == 0) {
      throw std::invalid_argument("code params: w must be positive");
    }
    if (l < 2 || l > kMaxEdges) {
      throw std::invalid_argument("code params: l must be in [2, 8]");
    }
    if (symbol_size == 0) {
      throw std::invalid_argument("code params: symbol_size must be positive");
    }
    // Keeps every (1+c)-scaled product exact in 64 bits out to positions
    // far beyond desk scale.
    if (c.num() + c.den() > (1ULL << 20)) {
      throw std::invalid_argument("code params: c numerator/denominator too large");
    }
    // The MET landing range [R - met_trials, R] plus the leading-edge bin
    // must hold l distinct indices.
    if (met_trials() < l) {
      throw std::invalid_argument(
          "code params: coupling window too small for l distinct edges");
    }
  }
};

} // namespace mettle
