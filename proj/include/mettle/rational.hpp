#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mettle {

/// Exact nonnegative rational p/q. The overhead ratio c is carried as one of
/// these so that every bin-index computation is integer-exact and identical
/// on the encoder and decoder regardless of platform.
class Rational {
public:
  Rational() = default;

  Rational(std::uint64_t num, std::uint64_t den) : num_(num), den_(den) {
    if (den_ == 0) {
      throw std::invalid_argument("rational: zero denominator");
    }
    const std::uint64_t g = std::gcd(num_, den_);
    if (g > 1) {
      num_ /= g;
      den_ /= g;
    }
  }

  std::uint64_t num() const { return num_; }
  std::uint64_t den() const { return den_; }

  bool is_zero() const { return num_ == 0; }

  double to_double() const {
    return static_cast<double>(num_) / static_cast<double>(den_);
  }

  bool operator==(const Rational& o) const {
    return num_ == o.num_ && den_ == o.den_;
  }
  bool operator!=(const Rational& o) const { return !(*this == o); }
  bool operator<(const Rational& o) const {
    return static_cast<unsigned __int128>(num_) * o.den_ <
           static_cast<unsigned __int128>(o.num_) * den_;
  }

  std::string str() const {
    return std::to_string(num_) + "/" + std::to_string(den_);
  }

  /// Accepts "p/q", an integer, or a plain decimal such as "0.055"
  /// (scientific notation is deliberately not parsed: the result must be
  /// exact).
  static Rational parse(std::string_view text);

private:
  std::uint64_t num_ = 0;
  std::uint64_t den_ = 1;
};

namespace detail {

inline std::uint64_t parse_u64(std::string_view s) {
  if (s.empty()) {
    throw std::invalid_argument("rational: empty number");
  }
  std::uint64_t v = 0;
  for (char ch : s) {
    if (ch < '0' || ch > '9') {
      throw std::invalid_argument("rational: bad digit in '" + std::string(s) + "'");
    }
    const std::uint64_t d = static_cast<std::uint64_t>(ch - '0');
    if (v > (UINT64_MAX - d) / 10) {
      throw std::invalid_argument("rational: overflow in '" + std::string(s) + "'");
    }
    v = v * 10 + d;
  }
  return v;
}

} // namespace detail

inline Rational Rational::parse(std::string_view text) {
  const auto slash = text.find('/');
  if (slash != std::string_view::npos) {
    return Rational(detail::parse_u64(text.substr(0, slash)),
                    detail::parse_u64(text.substr(slash + 1)));
  }
  const auto dot = text.find('.');
  if (dot == std::string_view::npos) {
    return Rational(detail::parse_u64(text), 1);
  }
  const std::string_view whole = text.substr(0, dot);
  const std::string_view frac = text.substr(dot + 1);
  if (frac.size() > 18) {
    throw std::invalid_argument("rational: too many decimal places");
  }
  std::uint64_t den = 1;
  for (size_t i = 0; i < frac.size(); ++i) den *= 10;
  const std::uint64_t w = whole.empty() ? 0 : detail::parse_u64(whole);
  const std::uint64_t f = frac.empty() ? 0 : detail::parse_u64(frac);
  if (w > (UINT64_MAX - f) / den) {
    throw std::invalid_argument("rational: overflow in '" + std::string(text) + "'");
  }
  return Rational(w * den + f, den);
}

/// floor(r * t) computed exactly in 128-bit intermediate precision.
inline std::uint64_t floor_mul(const Rational& r, std::uint64_t t) {
  const unsigned __int128 prod =
      static_cast<unsigned __int128>(r.num()) * t;
  const unsigned __int128 q = prod / r.den();
  if (q > static_cast<unsigned __int128>(UINT64_MAX)) {
    throw std::overflow_error("floor_mul: result does not fit in 64 bits");
  }
  return static_cast<std::uint64_t>(q);
}

} // namespace mettle
