#pragma once

#include <array>
#include <cstdint>

#include "mettle/hashing.hpp"
#include "mettle/params.hpp"

namespace mettle {

/// The l distinct bin indices one ball is thrown into. bins[0] is the
/// deterministic leading edge; the rest are the MET edges in edge-index
/// order.
struct EdgeSet {
  std::uint64_t ball = 0;
  std::uint32_t count = 0;
  std::array<std::uint64_t, kMaxEdges> bins{};

  const std::uint64_t* begin() const { return bins.data(); }
  const std::uint64_t* end() const { return bins.data() + count; }
};

/// Leading-edge bin of ball x: floor((1+c) x). Injective for c > 0 because
/// consecutive landing positions are more than one bin apart.
inline std::uint64_t tle_bin(const CodeParams& params, std::uint64_t x) {
  return params.scaled_floor(x);
}

/// Distance of MET edge i (2 <= i <= l) from the right boundary of ball x's
/// coupling window: a Binomial(floor((1+c)w), 2^-(i-1)) draw from the keyed
/// stream for (seed, x, i, attempt).
inline std::uint32_t sample_eta(const CodeParams& params, std::uint64_t x,
                                std::uint32_t i, std::uint32_t attempt = 0) {
  KeyedStream stream(params.seed, kDomainMetEdge, x,
                     (static_cast<std::uint64_t>(i) << 32) | attempt);
  return binomial_pow2(stream, params.met_trials(), static_cast<int>(i) - 1);
}

/// Derives edge sets for one code instance. Stateless apart from cached
/// masks, so encoder and decoder each own one and agree on every ball.
class EdgeSetGenerator {
public:
  explicit EdgeSetGenerator(const CodeParams& params)
      : params_(params), trials_(params.met_trials()) {
    params_.validate();
    for (std::uint32_t i = 2; i <= params_.l; ++i) {
      specs_[i] = FieldSpec::make(static_cast<int>(i) - 1);
    }
  }

  const CodeParams& params() const { return params_; }

  EdgeSet derive(std::uint64_t x) const {
    EdgeSet set;
    set.ball = x;
    set.count = params_.l;
    set.bins[0] = params_.scaled_floor(x);
    const std::uint64_t right = params_.scaled_floor(x + params_.w);
    for (std::uint32_t i = 2; i <= params_.l; ++i) {
      set.bins[i - 1] = draw_met_bin(set, x, i, right);
    }
    return set;
  }

private:
  static constexpr std::uint32_t kMaxAttempts = 64;

  bool used(const EdgeSet& set, std::uint32_t upto, std::uint64_t bin) const {
    for (std::uint32_t j = 0; j < upto; ++j) {
      if (set.bins[j] == bin) return true;
    }
    return false;
  }

  std::uint64_t draw_met_bin(const EdgeSet& set, std::uint64_t x,
                             std::uint32_t i, std::uint64_t right) const {
    for (std::uint32_t attempt = 0; attempt < kMaxAttempts; ++attempt) {
      KeyedStream stream(params_.seed, kDomainMetEdge, x,
                         (static_cast<std::uint64_t>(i) << 32) | attempt);
      const std::uint32_t eta = binomial_pow2(stream, trials_, specs_[i]);
      const std::uint64_t candidate = right - eta;
      if (!used(set, i - 1, candidate)) {
        return candidate;
      }
    }
    // Resampling cap reached: probe downward from the colliding index,
    // wrapping within the MET landing range [right - trials, right].
    KeyedStream stream(params_.seed, kDomainMetEdge, x,
                       (static_cast<std::uint64_t>(i) << 32) | (kMaxAttempts - 1));
    const std::uint32_t eta = binomial_pow2(stream, trials_, specs_[i]);
    const std::uint64_t low = right - trials_;
    std::uint64_t candidate = right - eta;
    do {
      candidate = (candidate == low) ? right : candidate - 1;
    } while (used(set, i - 1, candidate));
    return candidate;
  }

  CodeParams params_;
  std::uint32_t trials_;
  std::array<FieldSpec, kMaxEdges + 1> specs_{};
};

/// Convenience wrapper matching the one-shot signature; prefer holding an
/// EdgeSetGenerator in hot paths.
inline EdgeSet derive_edge_set(const CodeParams& params, std::uint64_t x) {
  return EdgeSetGenerator(params).derive(x);
}

} // namespace mettle
