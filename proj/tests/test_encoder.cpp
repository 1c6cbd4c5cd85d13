#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "mettle/encoder.hpp"
#include "support/reference_oracles.hpp"

using namespace mettle;

namespace {

CodeParams small_params() {
  CodeParams p;
  p.c = Rational(1, 2);
  p.w = 3;
  p.l = 3;
  p.seed = 7;
  p.symbol_size = 2;
  return p;
}

std::vector<CodedSymbol> full_wire(const CodeParams& p, std::uint64_t k) {
  Encoder enc(p);
  std::vector<CodedSymbol> wire;
  std::vector<std::uint8_t> payload(p.symbol_size);
  const auto sink = [&](std::uint64_t bin, ByteSpan bytes) {
    wire.push_back(CodedSymbol{bin, {bytes.begin(), bytes.end()}});
  };
  for (std::uint64_t x = 0; x < k; ++x) {
    detail::fill_payload(p.seed, x, payload.data(), p.symbol_size);
    enc.push(ByteSpan(payload), sink);
  }
  enc.flush(sink);
  return wire;
}

std::string hex(const std::vector<std::uint8_t>& bytes) {
  std::ostringstream os;
  for (std::uint8_t b : bytes) {
    static const char* digits = "0123456789abcdef";
    os << digits[b >> 4] << digits[b & 0xf];
  }
  return os.str();
}

} // namespace

TEST(Encoder, ReleaseScheduleCumulative) {
  for (const char* cs : {"1/5", "1/2", "11/200"}) {
    CodeParams p;
    p.c = Rational::parse(cs);
    p.w = 50;
    p.l = 4;
    p.seed = 3;
    p.symbol_size = 1;
    Encoder enc(p);
    std::uint64_t released = 0;
    std::vector<std::uint8_t> payload(1, 0xab);
    for (std::uint64_t t = 0; t < 2000; ++t) {
      enc.push(ByteSpan(payload), [&](std::uint64_t, ByteSpan) { ++released; });
      ASSERT_EQ(released, p.scaled_floor(t + 1)) << "c=" << cs << " t=" << t;
    }
  }
}

TEST(Encoder, SingleBallFirstReleasedBinIsItsPayload) {
  CodeParams p;
  p.c = Rational(1, 5);
  p.w = 600;
  p.l = 4;
  p.seed = 17;
  p.symbol_size = 4;
  Encoder enc(p);
  const std::vector<std::uint8_t> payload{1, 2, 3, 4};
  std::vector<CodedSymbol> out;
  enc.push(ByteSpan(payload), [&](std::uint64_t b, ByteSpan bytes) {
    out.push_back(CodedSymbol{b, {bytes.begin(), bytes.end()}});
  });
  ASSERT_EQ(out.size(), 1u); // floor(1.2 * 1) = 1 bin released
  EXPECT_EQ(out[0].bin_index, 0u);
  EXPECT_EQ(out[0].payload, payload); // only contributor after dedup
}

TEST(Encoder, GoldenWireSmallInstance) {
  // Frozen from tests/reference/golden_gen.py: k=10, c=1/2, w=3, l=3, seed=7,
  // symbol_size=2. Indices gap-free 0..18; untouched bins 2 and 14 are zero.
  const char* expected[] = {"5638", "c8eb", "0000", "0393", "485c", "9ed3",
                            "252f", "10d4", "f3a0", "8de5", "77b3", "6e91",
                            "ed56", "6c77", "0000", "6784", "83c7", "8834",
                            "8834"};
  const auto wire = full_wire(small_params(), 10);
  ASSERT_EQ(wire.size(), 19u);
  for (std::size_t i = 0; i < wire.size(); ++i) {
    EXPECT_EQ(wire[i].bin_index, i);
    EXPECT_EQ(hex(wire[i].payload), expected[i]) << "bin " << i;
  }
}

TEST(Encoder, MatchesBruteForceReference) {
  KeyedStream rng(11, 0, 0, 0);
  for (int cfg = 0; cfg < 12; ++cfg) {
    CodeParams p;
    p.c = Rational(1 + rng.next_below(8), 1 + rng.next_below(16));
    p.w = 2 + static_cast<std::uint32_t>(rng.next_below(40));
    p.l = 2 + static_cast<std::uint32_t>(rng.next_below(4));
    p.seed = rng.next_u64();
    p.symbol_size = 1 + static_cast<std::uint32_t>(rng.next_below(16));
    if (p.met_trials() < p.l) continue;
    const std::uint64_t k = 50 + rng.next_below(400);
    const auto wire = full_wire(p, k);
    const auto brute = testref::brute_encode(p, k);
    ASSERT_EQ(wire.size(), brute.size()) << "cfg=" << cfg;
    for (std::size_t i = 0; i < wire.size(); ++i) {
      ASSERT_EQ(wire[i].bin_index, i);
      ASSERT_EQ(wire[i].payload, brute[i]) << "cfg=" << cfg << " bin=" << i;
    }
  }
}

TEST(Encoder, EmittedCountWithinTerminationBounds) {
  CodeParams p;
  p.c = Rational(1, 5);
  p.w = 600;
  p.l = 4;
  p.seed = 23;
  p.symbol_size = 1;
  const std::uint64_t k = 100000;
  Encoder enc(p);
  std::vector<std::uint8_t> payload(1);
  std::uint64_t emitted = 0;
  const auto sink = [&](std::uint64_t, ByteSpan) { ++emitted; };
  for (std::uint64_t x = 0; x < k; ++x) enc.push(ByteSpan(payload), sink);
  enc.flush(sink);
  EXPECT_GE(emitted, p.scaled_floor(k));
  EXPECT_LE(emitted, p.scaled_floor(k + p.w) + 1);
}

TEST(Encoder, ReleaseSoundness) {
  // No released bin is ever touched again: emission order must be exactly
  // 0,1,2,... and every edge of ball t must lie at or above the watermark.
  CodeParams p;
  p.c = Rational(2, 7);
  p.w = 25;
  p.l = 4;
  p.seed = 5;
  p.symbol_size = 1;
  EdgeSetGenerator gen(p);
  Encoder enc(p);
  std::vector<std::uint8_t> payload(1);
  std::uint64_t next_expected = 0;
  for (std::uint64_t x = 0; x < 5000; ++x) {
    const EdgeSet edges = gen.derive(x);
    for (std::uint64_t b : edges) {
      ASSERT_GE(b, enc.released_watermark());
    }
    enc.push(ByteSpan(payload), [&](std::uint64_t b, ByteSpan) {
      ASSERT_EQ(b, next_expected);
      ++next_expected;
    });
  }
}

TEST(Encoder, Rejections) {
  CodeParams p = small_params();
  Encoder enc(p);
  SourceSymbol s;
  s.position = 3; // out of order
  s.payload = {0, 0};
  EXPECT_THROW(enc.push_collect(s), std::invalid_argument);
  std::vector<std::uint8_t> wrong_size(5);
  EXPECT_THROW(
      enc.push(ByteSpan(wrong_size), [](std::uint64_t, ByteSpan) {}),
      std::invalid_argument);
  enc.flush([](std::uint64_t, ByteSpan) {});
  EXPECT_THROW(enc.flush([](std::uint64_t, ByteSpan) {}), std::logic_error);
  std::vector<std::uint8_t> ok(2);
  EXPECT_THROW(enc.push(ByteSpan(ok), [](std::uint64_t, ByteSpan) {}),
               std::logic_error);
}

TEST(Encoder, FlushOnEmptyStreamEmitsNothing) {
  Encoder enc(small_params());
  std::uint64_t emitted = 0;
  enc.flush([&](std::uint64_t, ByteSpan) { ++emitted; });
  EXPECT_EQ(emitted, 0u);
}

TEST(Encoder, SingleBallFlushCoversTouchedRange) {
  // One ball, then flush: bin 0 is released by the push; the flush emits the
  // gap-free range up to the highest touched bin, zero payloads included.
  CodeParams p;
  p.c = Rational(1, 5);
  p.w = 600;
  p.l = 4;
  p.seed = 31;
  p.symbol_size = 3;
  EdgeSetGenerator gen(p);
  const EdgeSet edges = gen.derive(0);
  const std::uint64_t max_touched =
      *std::max_element(edges.begin(), edges.end());
  Encoder enc(p);
  const std::vector<std::uint8_t> payload{9, 8, 7};
  std::vector<CodedSymbol> out;
  const auto sink = [&](std::uint64_t b, ByteSpan bytes) {
    out.push_back(CodedSymbol{b, {bytes.begin(), bytes.end()}});
  };
  enc.push(ByteSpan(payload), sink);
  ASSERT_EQ(out.size(), 1u);
  enc.flush(sink);
  ASSERT_EQ(out.size(), max_touched + 1);
  for (std::uint64_t b = 0; b <= max_touched; ++b) {
    EXPECT_EQ(out[b].bin_index, b);
    const bool touched = std::find(edges.begin(), edges.end(), b) != edges.end();
    if (touched) {
      EXPECT_EQ(out[b].payload, payload) << "bin " << b;
    } else {
      EXPECT_TRUE(all_zero(out[b].payload.data(), 3)) << "bin " << b;
    }
  }
}
