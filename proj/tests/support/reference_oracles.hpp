#pragma once

// Test-only reference implementations, deliberately naive and independent of
// the production code paths they check. The Python script under
// tests/reference/ mirrors these for offline golden-vector generation.

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "mettle/decoder.hpp"
#include "mettle/edge_set.hpp"
#include "mettle/encoder.hpp"
#include "mettle/experiment.hpp"
#include "mettle/gf2.hpp"

namespace mettle::testref {

/// Per-field Bernoulli counting, one field at a time (no popcount batching).
inline std::uint32_t naive_binomial_pow2(KeyedStream stream, std::uint32_t n,
                                         int m) {
  const int per_word = 64 / m;
  std::uint32_t successes = 0;
  std::uint32_t consumed = 0;
  while (consumed < n) {
    const std::uint64_t w = stream.next_u64();
    for (int q = 0; q < per_word && consumed < n; ++q, ++consumed) {
      const std::uint64_t field = (w >> (q * m)) & ((1ULL << m) - 1);
      if (field == 0) ++successes;
    }
  }
  return successes;
}

inline std::uint32_t naive_sample_eta(const CodeParams& params, std::uint64_t x,
                                      std::uint32_t i, std::uint32_t attempt) {
  KeyedStream stream(params.seed, kDomainMetEdge, x,
                     (static_cast<std::uint64_t>(i) << 32) | attempt);
  return naive_binomial_pow2(stream, params.met_trials(),
                             static_cast<int>(i) - 1);
}

/// Full independent edge-set derivation (same dedup policy, naive sampling).
inline std::vector<std::uint64_t> naive_edge_set(const CodeParams& params,
                                                 std::uint64_t x) {
  std::vector<std::uint64_t> bins{params.scaled_floor(x)};
  const std::uint64_t right = params.scaled_floor(x + params.w);
  const std::uint32_t n_b = params.met_trials();
  for (std::uint32_t i = 2; i <= params.l; ++i) {
    bool placed = false;
    std::uint32_t eta = 0;
    for (std::uint32_t attempt = 0; attempt < 64 && !placed; ++attempt) {
      eta = naive_sample_eta(params, x, i, attempt);
      const std::uint64_t cand = right - eta;
      if (std::find(bins.begin(), bins.end(), cand) == bins.end()) {
        bins.push_back(cand);
        placed = true;
      }
    }
    if (!placed) {
      std::uint64_t cand = right - eta;
      const std::uint64_t low = right - n_b;
      do {
        cand = (cand == low) ? right : cand - 1;
      } while (std::find(bins.begin(), bins.end(), cand) != bins.end());
      bins.push_back(cand);
    }
  }
  return bins;
}

/// Brute-force encoder: materializes the whole bipartite graph and XORs
/// directly into a flat bin array. Returns the complete wire, index order.
inline std::vector<std::vector<std::uint8_t>> brute_encode(
    const CodeParams& params, std::uint64_t k) {
  EdgeSetGenerator gen(params);
  std::uint64_t max_touched = 0;
  std::vector<EdgeSet> edges(k);
  for (std::uint64_t x = 0; x < k; ++x) {
    edges[x] = gen.derive(x);
    for (std::uint64_t b : edges[x]) max_touched = std::max(max_touched, b);
  }
  std::vector<std::vector<std::uint8_t>> wire(
      max_touched + 1, std::vector<std::uint8_t>(params.symbol_size, 0));
  std::vector<std::uint8_t> payload(params.symbol_size);
  for (std::uint64_t x = 0; x < k; ++x) {
    detail::fill_payload(params.seed, x, payload.data(), params.symbol_size);
    for (std::uint64_t b : edges[x]) {
      xor_bytes(wire[b].data(), payload.data(), params.symbol_size);
    }
  }
  return wire;
}

struct NaiveDecoded {
  double latency = 0.0;
  std::vector<std::uint8_t> payload;
};

/// Naive streaming peel: after every received bin, rescan all received bins
/// for residual degree one, quadratically, until fixpoint. Latencies anchor
/// at the pushed bin, like the production decoder claims to.
inline std::map<std::uint64_t, NaiveDecoded> naive_stream_peel(
    const CodeParams& params, std::uint64_t k,
    const std::vector<std::vector<std::uint8_t>>& wire,
    const std::set<std::uint64_t>& erased) {
  EdgeSetGenerator gen(params);
  std::vector<std::vector<std::uint64_t>> edges(k);
  for (std::uint64_t x = 0; x < k; ++x) {
    const EdgeSet es = gen.derive(x);
    edges[x].assign(es.begin(), es.end());
  }
  std::map<std::uint64_t, std::vector<std::uint8_t>> residual;
  std::map<std::uint64_t, NaiveDecoded> decoded;
  const auto is_incident = [&](std::uint64_t x, std::uint64_t b) {
    return std::find(edges[x].begin(), edges[x].end(), b) != edges[x].end();
  };
  for (std::uint64_t z = 0; z < wire.size(); ++z) {
    if (erased.count(z)) continue;
    residual[z] = wire[z];
    bool progress = true;
    while (progress) {
      progress = false;
      for (const auto& [b, payload] : residual) {
        std::vector<std::uint64_t> pending;
        for (std::uint64_t x = 0; x < k; ++x) {
          if (!decoded.count(x) && is_incident(x, b)) pending.push_back(x);
        }
        if (pending.size() != 1) continue;
        const std::uint64_t x = pending.front();
        std::vector<std::uint8_t> value = payload;
        for (const auto& [y, dec] : decoded) {
          if (is_incident(y, b)) {
            xor_bytes(value.data(), dec.payload.data(), params.symbol_size);
          }
        }
        decoded[x] = NaiveDecoded{decode_latency(params, z, x), std::move(value)};
        progress = true;
        break;
      }
    }
  }
  return decoded;
}

/// Builds the GF(2) oracle system for a mettle instance from the received
/// subset of the wire.
inline gf2::LinearSystem gf2_system(
    const CodeParams& params, std::uint64_t k,
    const std::vector<std::vector<std::uint8_t>>& wire,
    const std::set<std::uint64_t>& erased) {
  EdgeSetGenerator gen(params);
  std::vector<std::vector<std::uint64_t>> edges(k);
  for (std::uint64_t x = 0; x < k; ++x) {
    const EdgeSet es = gen.derive(x);
    edges[x].assign(es.begin(), es.end());
  }
  std::vector<std::pair<std::uint64_t, std::vector<std::uint8_t>>> received;
  for (std::uint64_t z = 0; z < wire.size(); ++z) {
    if (!erased.count(z)) received.emplace_back(z, wire[z]);
  }
  return gf2::build_system(edges, received, params.symbol_size);
}

} // namespace mettle::testref
