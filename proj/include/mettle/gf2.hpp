#pragma once

#include <bit>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mettle/bytes.hpp"

namespace mettle::gf2 {

inline constexpr std::uint64_t kDefaultBallBound = 256;

/// One equation per received bin: the set of contributing balls (as a bit
/// row) and the bin payload.
struct LinearSystem {
  std::uint64_t num_balls = 0;
  std::size_t payload_size = 0;
  std::size_t words = 0;
  struct Row {
    std::uint64_t bin_index = 0;
    std::vector<std::uint64_t> coeff;
    std::vector<std::uint8_t> payload;
  };
  std::vector<Row> rows;
};

/// Outcome of elimination: for each ball, whether its value is uniquely
/// determined, and if so the payload.
struct Solution {
  std::vector<bool> decoded;
  std::vector<std::vector<std::uint8_t>> payloads;

  std::uint64_t decoded_count() const {
    std::uint64_t n = 0;
    for (bool b : decoded) n += b ? 1 : 0;
    return n;
  }
};

/// Builds the exact system for `num_balls` balls whose edges are given as
/// one index list per ball, restricted to the received bins. Guarded to
/// small instances; this is a test oracle, not a production path.
inline LinearSystem build_system(
    const std::vector<std::vector<std::uint64_t>>& edges_per_ball,
    const std::vector<std::pair<std::uint64_t, std::vector<std::uint8_t>>>&
        received_bins,
    std::size_t payload_size, std::uint64_t ball_bound = kDefaultBallBound) {
  const std::uint64_t k = edges_per_ball.size();
  if (k > ball_bound) {
    throw std::invalid_argument("gf2: instance above small-instance bound");
  }
  LinearSystem sys;
  sys.num_balls = k;
  sys.payload_size = payload_size;
  sys.words = (k + 63) / 64;
  sys.rows.reserve(received_bins.size());
  for (const auto& [bin, payload] : received_bins) {
    if (payload.size() != payload_size) {
      throw std::invalid_argument("gf2: payload size mismatch");
    }
    LinearSystem::Row row;
    row.bin_index = bin;
    row.coeff.assign(sys.words, 0);
    row.payload = payload;
    for (std::uint64_t x = 0; x < k; ++x) {
      for (std::uint64_t b : edges_per_ball[x]) {
        if (b == bin) {
          row.coeff[x / 64] ^= 1ULL << (x % 64);
        }
      }
    }
    sys.rows.push_back(std::move(row));
  }
  return sys;
}

namespace detail {

inline bool coeff_bit(const std::vector<std::uint64_t>& coeff, std::uint64_t x) {
  return (coeff[x / 64] >> (x % 64)) & 1ULL;
}

inline int popcount_row(const std::vector<std::uint64_t>& coeff) {
  int n = 0;
  for (std::uint64_t w : coeff) n += std::popcount(w);
  return n;
}

} // namespace detail

/// Gauss-Jordan elimination over GF(2) with the payload carried along. A
/// ball is decoded iff, in reduced row echelon form, its pivot row touches
/// no other ball: its value is then the same in every solution.
inline Solution solve(const LinearSystem& sys) {
  std::vector<LinearSystem::Row> rows = sys.rows;
  const std::uint64_t k = sys.num_balls;
  std::vector<std::int64_t> pivot_row_of(k, -1);
  std::size_t next_row = 0;
  for (std::uint64_t col = 0; col < k && next_row < rows.size(); ++col) {
    std::size_t pivot = next_row;
    while (pivot < rows.size() && !detail::coeff_bit(rows[pivot].coeff, col)) {
      ++pivot;
    }
    if (pivot == rows.size()) continue;
    std::swap(rows[next_row], rows[pivot]);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (r != next_row && detail::coeff_bit(rows[r].coeff, col)) {
        for (std::size_t w = 0; w < sys.words; ++w) {
          rows[r].coeff[w] ^= rows[next_row].coeff[w];
        }
        xor_bytes(rows[r].payload.data(), rows[next_row].payload.data(),
                  sys.payload_size);
      }
    }
    pivot_row_of[col] = static_cast<std::int64_t>(next_row);
    ++next_row;
  }

  Solution sol;
  sol.decoded.assign(k, false);
  sol.payloads.assign(k, {});
  for (std::uint64_t x = 0; x < k; ++x) {
    const std::int64_t r = pivot_row_of[x];
    if (r < 0) continue;
    if (detail::popcount_row(rows[static_cast<std::size_t>(r)].coeff) == 1) {
      sol.decoded[x] = true;
      sol.payloads[x] = rows[static_cast<std::size_t>(r)].payload;
    }
  }
  return sol;
}

} // namespace mettle::gf2
