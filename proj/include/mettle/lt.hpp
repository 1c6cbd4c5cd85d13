#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mettle/bytes.hpp"
#include "mettle/hashing.hpp"

namespace mettle::lt {

/// LT block-code parameters. The robust-soliton constants are configurable;
/// reported numbers always state which values were used.
struct LtParams {
  std::uint64_t k = 400;
  double soliton_c = 0.08;
  double soliton_delta = 0.01;
  std::uint64_t seed = 0;
  std::uint32_t symbol_size = 1500;

  void validate() const {
    if (k < 1) throw std::invalid_argument("lt: k must be >= 1");
    if (!(soliton_c > 0.0)) throw std::invalid_argument("lt: soliton_c must be > 0");
    if (!(soliton_delta > 0.0 && soliton_delta < 1.0)) {
      throw std::invalid_argument("lt: soliton_delta must be in (0,1)");
    }
    if (symbol_size == 0) throw std::invalid_argument("lt: symbol_size must be positive");
  }
};

/// Spike degree of the robust component: k/R truncated, clamped to [1, k],
/// with R = soliton_c * ln(k/delta) * sqrt(k).
inline std::uint64_t robust_spike_degree(const LtParams& p) {
  const double r = p.soliton_c * std::log(static_cast<double>(p.k) / p.soliton_delta) *
                   std::sqrt(static_cast<double>(p.k));
  const double ratio = static_cast<double>(p.k) / r;
  if (ratio <= 1.0) return 1;
  const std::uint64_t d = static_cast<std::uint64_t>(ratio);
  return d > p.k ? p.k : d;
}

/// Robust-soliton pmf over degrees 1..k (index 0 holds degree 1).
inline std::vector<double> robust_soliton_pmf(const LtParams& p) {
  p.validate();
  const std::uint64_t k = p.k;
  if (k == 1) return {1.0};
  const double kd = static_cast<double>(k);
  const double r = p.soliton_c * std::log(kd / p.soliton_delta) * std::sqrt(kd);
  const std::uint64_t spike = robust_spike_degree(p);

  std::vector<double> pmf(k, 0.0);
  pmf[0] = 1.0 / kd; // ideal soliton rho(1)
  for (std::uint64_t d = 2; d <= k; ++d) {
    pmf[d - 1] = 1.0 / (static_cast<double>(d) * static_cast<double>(d - 1));
  }
  for (std::uint64_t d = 1; d < spike; ++d) {
    pmf[d - 1] += r / (static_cast<double>(d) * kd);
  }
  pmf[spike - 1] += r * std::log(r / p.soliton_delta) / kd;

  double beta = 0.0;
  for (double v : pmf) beta += v;
  for (double& v : pmf) v /= beta;
  return pmf;
}

/// One coded symbol's neighbor structure, re-derivable from (seed, index)
/// alone (coded symbols do not carry neighbor lists on the wire).
struct NeighborSet {
  std::uint64_t index = 0;
  std::vector<std::uint64_t> neighbors;
};

/// Stateless degree + neighbor derivation: one keyed stream per symbol,
/// consumed as (degree draw, then uniform neighbor draws, duplicates
/// rejected and redrawn).
class LtEncoder {
public:
  explicit LtEncoder(const LtParams& params)
      : params_(params), cdf_(robust_soliton_pmf(params)) {
    params_.validate();
    double acc = 0.0;
    for (double& v : cdf_) {
      acc += v;
      v = acc;
    }
    cdf_.back() = 1.0; // guard against rounding shortfall
  }

  const LtParams& params() const { return params_; }

  NeighborSet derive_neighbors(std::uint64_t index) const {
    KeyedStream stream(params_.seed, kDomainLtSymbol, index, 0);
    const double u = stream.next_unit();
    std::uint64_t degree = 1;
    while (degree < params_.k && u >= cdf_[degree - 1]) {
      ++degree;
    }
    NeighborSet set;
    set.index = index;
    set.neighbors.reserve(degree);
    while (set.neighbors.size() < degree) {
      const std::uint64_t cand = stream.next_below(params_.k);
      bool dup = false;
      for (std::uint64_t n : set.neighbors) {
        if (n == cand) {
          dup = true;
          break;
        }
      }
      if (!dup) set.neighbors.push_back(cand);
    }
    return set;
  }

  /// XOR of the chosen source symbols. `block` holds k payloads.
  std::vector<std::uint8_t> encode_symbol(
      const std::vector<std::vector<std::uint8_t>>& block,
      std::uint64_t index) const {
    if (block.size() != params_.k) {
      throw std::invalid_argument("lt: block size mismatch");
    }
    const NeighborSet set = derive_neighbors(index);
    std::vector<std::uint8_t> payload(params_.symbol_size, 0);
    for (std::uint64_t n : set.neighbors) {
      if (block[n].size() != params_.symbol_size) {
        throw std::invalid_argument("lt: payload size mismatch");
      }
      xor_bytes(payload.data(), block[n].data(), params_.symbol_size);
    }
    return payload;
  }

private:
  LtParams params_;
  std::vector<double> cdf_;
};

struct LtDecodeResult {
  bool success = false;
  std::uint64_t decoded_count = 0;
  std::vector<bool> decoded;
  std::vector<std::vector<std::uint8_t>> payloads;
};

/// Standard peeling over the received symbols (neighbor sets re-derived from
/// symbol indices). Runs to fixpoint; success means every source symbol was
/// recovered.
inline LtDecodeResult lt_decode(
    const LtParams& params,
    const std::vector<std::pair<std::uint64_t, std::vector<std::uint8_t>>>&
        received) {
  params.validate();
  const LtEncoder derive(params);
  const std::uint64_t k = params.k;

  struct Row {
    std::vector<std::uint64_t> pending; // undecoded neighbors
    std::vector<std::uint8_t> residual;
  };
  std::vector<Row> rows;
  rows.reserve(received.size());
  std::vector<std::vector<std::uint32_t>> incident(k);

  LtDecodeResult result;
  result.decoded.assign(k, false);
  result.payloads.assign(k, {});

  for (const auto& [index, payload] : received) {
    if (payload.size() != params.symbol_size) {
      throw std::invalid_argument("lt: payload size mismatch");
    }
    Row row;
    row.pending = derive.derive_neighbors(index).neighbors;
    row.residual = payload;
    const std::uint32_t row_id = static_cast<std::uint32_t>(rows.size());
    for (std::uint64_t n : row.pending) {
      incident[n].push_back(row_id);
    }
    rows.push_back(std::move(row));
  }

  std::vector<std::uint32_t> queue;
  for (std::uint32_t r = 0; r < rows.size(); ++r) {
    if (rows[r].pending.size() == 1) queue.push_back(r);
  }
  while (!queue.empty()) {
    const std::uint32_t r = queue.back();
    queue.pop_back();
    if (rows[r].pending.size() != 1) continue;
    const std::uint64_t x = rows[r].pending.front();
    if (result.decoded[x]) continue;
    result.decoded[x] = true;
    result.payloads[x] = rows[r].residual;
    ++result.decoded_count;
    for (std::uint32_t other : incident[x]) {
      Row& row = rows[other];
      auto it = std::find(row.pending.begin(), row.pending.end(), x);
      if (it == row.pending.end()) continue;
      row.pending.erase(it);
      xor_bytes(row.residual.data(), result.payloads[x].data(),
                params.symbol_size);
      if (row.pending.size() == 1) queue.push_back(other);
    }
  }
  result.success = result.decoded_count == k;
  return result;
}

/// Block-code decoding latency of source position i in a block of size k,
/// in source-symbol units.
inline std::uint64_t lt_block_latency(std::uint64_t k, std::uint64_t i) {
  if (i >= k) throw std::invalid_argument("lt: position out of range");
  return k - i;
}

} // namespace mettle::lt
