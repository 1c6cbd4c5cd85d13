#include <gtest/gtest.h>

#include "mettle/rational.hpp"

using mettle::Rational;
using mettle::floor_mul;

TEST(Rational, ParseForms) {
  EXPECT_EQ(Rational::parse("1/5"), Rational(1, 5));
  EXPECT_EQ(Rational::parse("11/200"), Rational(11, 200));
  EXPECT_EQ(Rational::parse("0.055"), Rational(11, 200));
  EXPECT_EQ(Rational::parse("0.25"), Rational(1, 4));
  EXPECT_EQ(Rational::parse("2"), Rational(2, 1));
  EXPECT_EQ(Rational::parse("1.5"), Rational(3, 2));
  EXPECT_EQ(Rational::parse("0.09"), Rational(9, 100));
}

TEST(Rational, Normalization) {
  Rational r(6, 4);
  EXPECT_EQ(r.num(), 3u);
  EXPECT_EQ(r.den(), 2u);
  EXPECT_EQ(Rational(0, 7).den(), 1u);
}

TEST(Rational, ParseErrors) {
  EXPECT_THROW(Rational::parse("1/0"), std::invalid_argument);
  EXPECT_THROW(Rational::parse("abc"), std::invalid_argument);
  EXPECT_THROW(Rational::parse("1e-3"), std::invalid_argument);
  EXPECT_THROW(Rational::parse(""), std::invalid_argument);
  EXPECT_THROW(Rational::parse("1/ 5"), std::invalid_argument);
}

TEST(Rational, FloorMulExact) {
  const Rational six_fifths(6, 5); // 1 + 1/5
  EXPECT_EQ(floor_mul(six_fifths, 0), 0u);
  EXPECT_EQ(floor_mul(six_fifths, 10), 12u);
  EXPECT_EQ(floor_mul(Rational(3, 2), 7), 10u);
  // Large positions stay exact.
  EXPECT_EQ(floor_mul(Rational(211, 200), 1000000007ULL),
            (static_cast<unsigned __int128>(211) * 1000000007ULL) / 200);
}

TEST(Rational, Ordering) {
  EXPECT_LT(Rational(1, 5), Rational(1, 4));
  EXPECT_LT(Rational(11, 200), Rational(3, 50));
}
