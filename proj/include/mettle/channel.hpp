#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mettle/hashing.hpp"

namespace mettle {

/// Memoryless erasure channel: each symbol is dropped with probability
/// epsilon, independently.
struct BecParams {
  double epsilon = 0.0;

  void validate() const {
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
      throw std::invalid_argument("bec: epsilon must be in [0,1]");
    }
  }
};

/// Two-state Markov-modulated erasure channel. In the good (resp. bad)
/// state a symbol is erased with probability eps_g (resp. eps_b); the chain
/// then moves to the other state with probability p_g2b (resp. p_b2g).
struct GeParams {
  double p_g2b = 0.0;
  double p_b2g = 0.0;
  double eps_g = 0.0;
  double eps_b = 0.0;

  void validate() const {
    for (double v : {p_g2b, p_b2g, eps_g, eps_b}) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw std::invalid_argument("ge: parameters must be in [0,1]");
      }
    }
    if (p_g2b + p_b2g <= 0.0) {
      throw std::invalid_argument("ge: degenerate chain (both transitions zero)");
    }
  }
};

/// Stationary erasure probability of a GE channel:
/// (eps_b * p_g2b + eps_g * p_b2g) / (p_g2b + p_b2g).
inline double ge_avg_rate(const GeParams& p) {
  p.validate();
  return (p.eps_b * p.p_g2b + p.eps_g * p.p_b2g) / (p.p_g2b + p.p_b2g);
}

class BecChannel {
public:
  BecChannel(const BecParams& params, std::uint64_t seed)
      : params_(params), rng_(seed, kDomainChannel, 0, 0) {
    params_.validate();
  }

  /// True when the next symbol is erased.
  bool erase_next() { return rng_.next_unit() < params_.epsilon; }

private:
  BecParams params_;
  KeyedStream rng_;
};

class GeChannel {
public:
  enum class State : std::uint8_t { kGood, kBad };

  /// Starts in the good state; with stationary_start the initial state is
  /// instead drawn from the chain's stationary distribution.
  GeChannel(const GeParams& params, std::uint64_t seed,
            bool stationary_start = false)
      : params_(params), rng_(seed, kDomainChannel, 1, 0) {
    params_.validate();
    if (stationary_start) {
      const double pi_bad = params_.p_g2b / (params_.p_g2b + params_.p_b2g);
      state_ = rng_.next_unit() < pi_bad ? State::kBad : State::kGood;
    }
  }

  /// Erase by the current state's probability, then transition. Both draws
  /// are always consumed so replay stays aligned.
  bool erase_next() {
    const bool good = state_ == State::kGood;
    const bool erase = rng_.next_unit() < (good ? params_.eps_g : params_.eps_b);
    const bool flip = rng_.next_unit() < (good ? params_.p_g2b : params_.p_b2g);
    if (flip) state_ = good ? State::kBad : State::kGood;
    return erase;
  }

  State state() const { return state_; }

private:
  GeParams params_;
  KeyedStream rng_;
  State state_ = State::kGood;
};

/// A parsed channel description: "bec:<eps>", "ge:<p_g2b>,<p_b2g>,<eps_g>,<eps_b>",
/// or one of the named aliases ge1..ge5.
struct ChannelSpec {
  enum class Kind : std::uint8_t { kBec, kGe };
  Kind kind = Kind::kBec;
  BecParams bec;
  GeParams ge;
  std::string name; // canonical text form

  double average_erasure_rate() const {
    return kind == Kind::kBec ? bec.epsilon : ge_avg_rate(ge);
  }
};

namespace detail {

inline double parse_prob(std::string_view s) {
  try {
    size_t pos = 0;
    const double v = std::stod(std::string(s), &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("channel: bad probability '" + std::string(s) + "'");
  }
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    const size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

} // namespace detail

/// The five named GE configurations used throughout the evaluation
/// (trace-fitted application models plus one long-fade stress channel).
inline const std::vector<std::pair<std::string, GeParams>>& named_ge_channels() {
  static const std::vector<std::pair<std::string, GeParams>> table = {
      {"ge1", GeParams{5e-4, 0.2, 0.01, 1.0}},  // VoIP
      {"ge2", GeParams{0.04, 0.05, 0.01, 0.02}}, // WiMAX video
      {"ge3", GeParams{0.05, 0.75, 0.01, 0.1}},  // videoconf, light loss
      {"ge4", GeParams{0.05, 0.75, 0.05, 0.5}},  // videoconf, heavy loss
      {"ge5", GeParams{0.001, 0.01, 0.01, 0.1}}, // long fade
  };
  return table;
}

inline ChannelSpec parse_channel_spec(std::string_view text) {
  ChannelSpec spec;
  spec.name = std::string(text);
  for (const auto& [name, params] : named_ge_channels()) {
    if (text == name) {
      spec.kind = ChannelSpec::Kind::kGe;
      spec.ge = params;
      return spec;
    }
  }
  if (text.substr(0, 4) == "bec:") {
    spec.kind = ChannelSpec::Kind::kBec;
    spec.bec.epsilon = detail::parse_prob(text.substr(4));
    spec.bec.validate();
    return spec;
  }
  if (text.substr(0, 3) == "ge:") {
    const auto parts = detail::split(text.substr(3), ',');
    if (parts.size() != 4) {
      throw std::invalid_argument("channel: ge spec needs 4 comma-separated values");
    }
    spec.kind = ChannelSpec::Kind::kGe;
    spec.ge = GeParams{detail::parse_prob(parts[0]), detail::parse_prob(parts[1]),
                       detail::parse_prob(parts[2]), detail::parse_prob(parts[3])};
    spec.ge.validate();
    return spec;
  }
  throw std::invalid_argument("channel: unrecognized spec '" + std::string(text) + "'");
}

/// Per-trial channel instance; one erase decision per symbol in stream order.
class Channel {
public:
  Channel(const ChannelSpec& spec, std::uint64_t seed,
          bool stationary_start = false)
      : impl_(make(spec, seed, stationary_start)) {}

  bool erase_next() {
    return std::visit([](auto& ch) { return ch.erase_next(); }, impl_);
  }

private:
  static std::variant<BecChannel, GeChannel> make(const ChannelSpec& spec,
                                                  std::uint64_t seed,
                                                  bool stationary_start) {
    if (spec.kind == ChannelSpec::Kind::kBec) {
      return BecChannel(spec.bec, seed);
    }
    return GeChannel(spec.ge, seed, stationary_start);
  }

  std::variant<BecChannel, GeChannel> impl_;
};

} // namespace mettle
