#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "mettle/channel.hpp"
#include "mettle/decoder.hpp"
#include "mettle/encoder.hpp"
#include "mettle/lt.hpp"
#include "mettle/params.hpp"

namespace mettle {

enum class CodeKind : std::uint8_t { kMettle, kLt };

/// Shared configuration for the evaluation commands. `seed + trial index`
/// seeds each trial; trials are independent and run in parallel.
struct ExperimentConfig {
  CodeKind code = CodeKind::kMettle;
  CodeParams code_params;     // used when code == kMettle
  lt::LtParams lt_params;     // used when code == kLt
  ChannelSpec channel;
  std::uint64_t k = 100000;   // stream length (mettle) / block size (lt)
  std::uint64_t trials = 50;
  std::uint64_t seed = 1;
  std::uint32_t threads = 0;  // 0 = hardware concurrency
  bool stationary_start = false;

  std::uint32_t effective_threads() const {
    if (threads > 0) return threads;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
  }

  void validate() const {
    if (trials < 1) throw std::invalid_argument("config: trials must be >= 1");
    if (k < 1) throw std::invalid_argument("config: k must be >= 1");
    if (code == CodeKind::kMettle) {
      code_params.validate();
    } else {
      lt::LtParams lp = lt_params;
      lp.k = k;
      lp.validate();
    }
  }
};

namespace detail {

inline void parallel_for(std::uint64_t n, std::uint32_t threads,
                         const std::function<void(std::uint64_t)>& body) {
  if (threads <= 1 || n <= 1) {
    for (std::uint64_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::uint64_t> next{0};
  std::vector<std::thread> pool;
  const std::uint32_t nthreads =
      static_cast<std::uint32_t>(std::min<std::uint64_t>(threads, n));
  pool.reserve(nthreads);
  for (std::uint32_t t = 0; t < nthreads; ++t) {
    pool.emplace_back([&] {
      for (std::uint64_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
        body(i);
      }
    });
  }
  for (auto& th : pool) th.join();
}

/// Deterministic payload fill: 8-byte keyed pattern repeated across the
/// symbol, cheap to regenerate for verification.
inline void fill_payload(std::uint64_t seed, std::uint64_t position,
                         std::uint8_t* dst, std::uint32_t size) {
  const std::uint64_t pattern = derive_key(seed, kDomainPayloadFill, position, 0);
  for (std::uint32_t i = 0; i < size; ++i) {
    dst[i] = static_cast<std::uint8_t>(pattern >> (8 * (i % 8)));
  }
}

inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

} // namespace detail

/// One channel decision per coded symbol, in stream order: received symbols
/// go to `on_received(symbol)`, erased ones to `on_erased(bin_index)`.
template <typename OnReceived, typename OnErased>
void apply_channel(Channel& channel, const std::vector<CodedSymbol>& stream,
                   OnReceived&& on_received, OnErased&& on_erased) {
  for (const CodedSymbol& sym : stream) {
    if (channel.erase_next()) {
      on_erased(sym.bin_index);
    } else {
      on_received(sym);
    }
  }
}

/// Encode -> channel -> decode, one full stream. Returns the decoder's
/// report; latencies are collected only when requested.
inline TrialReport run_mettle_trial(const CodeParams& params,
                                    const ChannelSpec& channel,
                                    std::uint64_t k, bool collect_latencies,
                                    bool stationary_start = false) {
  Encoder enc(params);
  Decoder dec(params, k);
  Channel chan(channel, params.seed, stationary_start);
  std::vector<std::uint8_t> payload(params.symbol_size);
  const auto deliver = [&](std::uint64_t bin, ByteSpan p) {
    if (chan.erase_next()) {
      dec.mark_erased(bin);
    } else {
      dec.push(bin, p, [](std::uint64_t, double, ByteSpan) {});
    }
  };
  for (std::uint64_t x = 0; x < k; ++x) {
    detail::fill_payload(params.seed, x, payload.data(), params.symbol_size);
    enc.push(ByteSpan(payload), deliver);
  }
  enc.flush(deliver);
  return dec.finalize_report(collect_latencies);
}

/// One LT block trial: k source symbols, floor((1+c)k) coded symbols pushed
/// through the channel, then one-shot peeling. "Failure" is not recovering
/// the whole block.
inline bool run_lt_trial_failed(const lt::LtParams& params, const Rational& c,
                                const ChannelSpec& channel,
                                bool stationary_start = false) {
  const Rational rate(c.num() + c.den(), c.den());
  const std::uint64_t nsym = floor_mul(rate, params.k);
  lt::LtEncoder enc(params);
  Channel chan(channel, params.seed, stationary_start);
  std::vector<std::vector<std::uint8_t>> block(params.k);
  for (std::uint64_t x = 0; x < params.k; ++x) {
    block[x].resize(params.symbol_size);
    detail::fill_payload(params.seed, x, block[x].data(), params.symbol_size);
  }
  std::vector<std::pair<std::uint64_t, std::vector<std::uint8_t>>> received;
  received.reserve(nsym);
  for (std::uint64_t i = 0; i < nsym; ++i) {
    if (chan.erase_next()) continue;
    received.emplace_back(i, enc.encode_symbol(block, i));
  }
  return !lt::lt_decode(params, received).success;
}

// ---------------------------------------------------------------------------
// Latency experiment
// ---------------------------------------------------------------------------

struct LatencyResult {
  std::vector<TrialReport> trials; // per-trial summaries (latency lists dropped)
  std::uint64_t successful_trials = 0;
  std::uint64_t stalled_trials = 0; // wavefront stalls (decoding failures)
  double failure_rate = 0.0;
  double avg_latency = 0.0; // pooled over decoded balls of successful trials
  double p95_latency = 0.0;
  double error_floor_rate = 0.0;
  double peel_ops_per_symbol = 0.0;
};

inline LatencyResult run_latency_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.code != CodeKind::kMettle) {
    throw std::invalid_argument("latency experiment: code must be mettle");
  }
  LatencyResult res;
  res.trials.resize(cfg.trials);
  std::vector<std::vector<double>> latencies(cfg.trials);
  detail::parallel_for(cfg.trials, cfg.effective_threads(), [&](std::uint64_t t) {
    CodeParams params = cfg.code_params;
    params.seed = cfg.seed + t;
    TrialReport rep = run_mettle_trial(params, cfg.channel, cfg.k, true,
                                       cfg.stationary_start);
    latencies[t] = std::move(rep.latencies);
    rep.latencies.clear();
    res.trials[t] = std::move(rep);
  });

  std::vector<double> pooled;
  double sum = 0.0;
  std::uint64_t error_floor = 0, balls = 0, ops = 0, decoded_total = 0;
  for (std::uint64_t t = 0; t < cfg.trials; ++t) {
    const TrialReport& rep = res.trials[t];
    balls += rep.total_balls;
    error_floor += rep.error_floor_balls;
    ops += rep.peel_ops;
    if (rep.decoding_failure) {
      ++res.stalled_trials;
      continue; // wavefront-stalled trials are excluded from the latency tables
    }
    ++res.successful_trials;
    decoded_total += rep.decoded;
    for (double v : latencies[t]) sum += v;
    pooled.insert(pooled.end(), latencies[t].begin(), latencies[t].end());
  }
  res.failure_rate = static_cast<double>(res.stalled_trials) /
                     static_cast<double>(cfg.trials);
  res.error_floor_rate =
      static_cast<double>(error_floor) / static_cast<double>(balls);
  res.peel_ops_per_symbol = static_cast<double>(ops) / static_cast<double>(balls);
  if (decoded_total > 0) {
    res.avg_latency = sum / static_cast<double>(decoded_total);
    const std::size_t idx = Decoder::percentile_rank(pooled.size(), 0.95);
    std::nth_element(pooled.begin(), pooled.begin() + idx, pooled.end());
    res.p95_latency = pooled[idx];
  }
  return res;
}

// ---------------------------------------------------------------------------
// Efficiency (overhead) search
// ---------------------------------------------------------------------------

struct EfficiencyPoint {
  Rational c{1, 100};
  std::uint64_t trials_run = 0;
  std::uint64_t failures = 0;
  bool passed = false;

  double failure_rate() const {
    return trials_run == 0 ? 0.0
                           : static_cast<double>(failures) /
                                 static_cast<double>(trials_run);
  }
};

struct EfficiencyResult {
  bool found = false;
  Rational c_min{1, 100};
  std::vector<EfficiencyPoint> probed; // in probe order
  double target = 1e-3;
  std::string note;
};

/// 95% upper confidence bound on a binomial rate (Wilson interval).
inline double wilson_upper(std::uint64_t failures, std::uint64_t n) {
  if (n == 0) return 1.0;
  const double z = 1.959963984540054;
  const double nf = static_cast<double>(n);
  const double p = static_cast<double>(failures) / nf;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nf;
  const double center = p + z2 / (2.0 * nf);
  const double rad = z * std::sqrt(p * (1.0 - p) / nf + z2 / (4.0 * nf * nf));
  return (center + rad) / denom;
}

/// Estimates the failure rate at one overhead point, stopping early once
/// enough failures have accrued that the target is unreachable within the
/// budget.
inline EfficiencyPoint measure_failure_rate(
    const ExperimentConfig& cfg, const Rational& c, double target,
    const std::function<bool(const Rational&, std::uint64_t)>& trial_failed) {
  EfficiencyPoint point;
  point.c = c;
  const std::uint64_t stop_failures = std::max<std::uint64_t>(
      10, static_cast<std::uint64_t>(target * static_cast<double>(cfg.trials)) + 1);
  const std::uint32_t threads = cfg.effective_threads();
  const std::uint64_t batch = std::max<std::uint64_t>(threads * 8ULL, 16);
  std::atomic<std::uint64_t> failures{0};
  std::uint64_t run = 0;
  while (run < cfg.trials) {
    const std::uint64_t n = std::min(batch, cfg.trials - run);
    detail::parallel_for(n, threads, [&](std::uint64_t i) {
      if (trial_failed(c, cfg.seed + run + i)) {
        failures.fetch_add(1);
      }
    });
    run += n;
    if (failures.load() >= stop_failures) break;
  }
  point.trials_run = run;
  point.failures = failures.load();
  point.passed = point.failures <=
                 static_cast<std::uint64_t>(target * static_cast<double>(run));
  return point;
}

/// Smallest grid overhead c (step 1/200 by default) whose estimated failure
/// rate meets the target, found by bisection over the grid; failure
/// probability is monotone nonincreasing in c up to estimation noise.
inline EfficiencyResult run_efficiency_search(const ExperimentConfig& cfg,
                                              double target = 1e-3,
                                              std::uint64_t grid_den = 200,
                                              std::uint64_t grid_lo = 1,
                                              std::uint64_t grid_hi = 0) {
  {
    // The search supplies c itself; validate everything else.
    ExperimentConfig probe_cfg = cfg;
    probe_cfg.code_params.c = Rational(grid_lo, grid_den);
    probe_cfg.validate();
  }
  if (grid_hi == 0) {
    grid_hi = cfg.code == CodeKind::kMettle ? grid_den / 2        // c <= 50%
                                            : (3 * grid_den) / 2; // c <= 150%
  }
  const auto trial_failed = [&](const Rational& c,
                                std::uint64_t trial_seed) -> bool {
    if (cfg.code == CodeKind::kMettle) {
      CodeParams params = cfg.code_params;
      params.c = c;
      params.seed = trial_seed;
      return run_mettle_trial(params, cfg.channel, cfg.k, false,
                              cfg.stationary_start)
          .decoding_failure;
    }
    lt::LtParams params = cfg.lt_params;
    params.k = cfg.k;
    params.seed = trial_seed;
    return run_lt_trial_failed(params, c, cfg.channel, cfg.stationary_start);
  };

  EfficiencyResult res;
  res.target = target;
  const auto probe = [&](std::uint64_t j) -> bool {
    EfficiencyPoint p =
        measure_failure_rate(cfg, Rational(j, grid_den), target, trial_failed);
    res.probed.push_back(p);
    return p.passed;
  };

  if (!probe(grid_hi)) {
    res.found = false;
    res.note = "target unreachable on grid: failure rate " +
               detail::fmt_double(res.probed.back().failure_rate()) + " at c=" +
               Rational(grid_hi, grid_den).str();
    return res;
  }
  std::uint64_t lo = grid_lo, hi = grid_hi;
  while (lo < hi) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (probe(mid)) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  res.found = true;
  res.c_min = Rational(lo, grid_den);
  for (const EfficiencyPoint& p : res.probed) {
    if (p.c == res.c_min) {
      res.note = "failure rate " + detail::fmt_double(p.failure_rate()) + " (" +
                 std::to_string(p.failures) + "/" + std::to_string(p.trials_run) +
                 "), 95% upper bound " +
                 detail::fmt_double(wilson_upper(p.failures, p.trials_run));
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Error floor
// ---------------------------------------------------------------------------

struct ErrorFloorResult {
  std::uint64_t balls = 0;
  std::uint64_t isolated = 0; // balls with every incident bin erased
  double rate = 0.0;
  double predicted = 0.0; // epsilon^l
};

/// Fraction of balls whose whole edge set is erased. No decoding is needed:
/// such balls are undecodable regardless of the rest of the stream, and no
/// other ball can be classified error-floor.
inline ErrorFloorResult run_errorfloor_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.code != CodeKind::kMettle ||
      cfg.channel.kind != ChannelSpec::Kind::kBec) {
    throw std::invalid_argument("errorfloor experiment: needs mettle over a BEC");
  }
  ErrorFloorResult res;
  std::vector<std::uint64_t> counts(cfg.trials, 0);
  detail::parallel_for(cfg.trials, cfg.effective_threads(), [&](std::uint64_t t) {
    CodeParams params = cfg.code_params;
    params.seed = cfg.seed + t;
    EdgeSetGenerator gen(params);
    BecChannel chan(cfg.channel.bec, params.seed);
    std::vector<bool> erased;
    erased.reserve(params.scaled_floor(cfg.k + params.w) + 2);
    std::uint64_t hit = 0;
    for (std::uint64_t x = 0; x < cfg.k; ++x) {
      const EdgeSet edges = gen.derive(x);
      bool all = true;
      for (std::uint64_t b : edges) {
        while (erased.size() <= b) erased.push_back(chan.erase_next());
        if (!erased[b]) {
          all = false;
        }
      }
      if (all) ++hit;
    }
    counts[t] = hit;
  });
  for (std::uint64_t c : counts) res.isolated += c;
  res.balls = cfg.trials * cfg.k;
  res.rate = static_cast<double>(res.isolated) / static_cast<double>(res.balls);
  res.predicted = std::pow(cfg.channel.bec.epsilon,
                           static_cast<double>(cfg.code_params.l));
  return res;
}

// ---------------------------------------------------------------------------
// Decode-cost microbenchmark
// ---------------------------------------------------------------------------

struct BenchResult {
  std::uint64_t k = 0;
  std::uint64_t decoded = 0;
  double decode_us_per_symbol = 0.0; // wall clock, informational
  double peel_ops_per_symbol = 0.0;
  bool stalled = false;
};

/// Times the decoder alone: the coded stream is produced in chunks outside
/// the timed sections. Wall clock is informational; the portable contract is
/// the peel-op count.
inline BenchResult run_bench(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.code != CodeKind::kMettle) {
    throw std::invalid_argument("bench: code must be mettle");
  }
  const CodeParams& params = cfg.code_params;
  BenchResult res;
  res.k = cfg.k;
  std::uint64_t total_ops = 0, total_decoded = 0, total_balls = 0;
  std::chrono::nanoseconds decode_time{0};
  for (std::uint64_t t = 0; t < cfg.trials; ++t) {
    CodeParams p = params;
    p.seed = cfg.seed + t;
    Encoder enc(p);
    Decoder dec(p, cfg.k);
    Channel chan(cfg.channel, p.seed, cfg.stationary_start);
    std::vector<std::uint8_t> payload(p.symbol_size);
    std::vector<CodedSymbol> chunk;
    std::vector<bool> chunk_erased;
    const auto deliver = [&](std::uint64_t bin, ByteSpan bytes) {
      chunk.push_back(CodedSymbol{bin, {bytes.begin(), bytes.end()}});
      chunk_erased.push_back(chan.erase_next());
    };
    const auto drain = [&] {
      const auto start = std::chrono::steady_clock::now();
      for (std::size_t i = 0; i < chunk.size(); ++i) {
        if (chunk_erased[i]) {
          dec.mark_erased(chunk[i].bin_index);
        } else {
          dec.push(chunk[i].bin_index, ByteSpan(chunk[i].payload),
                   [](std::uint64_t, double, ByteSpan) {});
        }
      }
      decode_time += std::chrono::steady_clock::now() - start;
      chunk.clear();
      chunk_erased.clear();
    };
    for (std::uint64_t x = 0; x < cfg.k; ++x) {
      detail::fill_payload(p.seed, x, payload.data(), p.symbol_size);
      enc.push(ByteSpan(payload), deliver);
      if (chunk.size() >= 4096) drain();
    }
    enc.flush(deliver);
    drain();
    const TrialReport rep = dec.finalize_report(false);
    total_ops += rep.peel_ops;
    total_decoded += rep.decoded;
    total_balls += rep.total_balls;
    res.stalled = res.stalled || rep.decoding_failure;
  }
  res.decoded = total_decoded;
  res.peel_ops_per_symbol =
      static_cast<double>(total_ops) / static_cast<double>(total_balls);
  res.decode_us_per_symbol = 1e-3 *
                             static_cast<double>(decode_time.count()) /
                             static_cast<double>(total_balls);
  return res;
}

// ---------------------------------------------------------------------------
// GE channel validation
// ---------------------------------------------------------------------------

struct GeValidateResult {
  std::string channel;
  double empirical = 0.0;
  double formula = 0.0;
  double rel_error = 0.0;
  std::uint64_t steps = 0;
};

inline GeValidateResult run_ge_validate(const ChannelSpec& spec,
                                        std::uint64_t steps, std::uint64_t seed,
                                        bool stationary_start = true) {
  if (spec.kind != ChannelSpec::Kind::kGe) {
    throw std::invalid_argument("ge-validate: needs a GE channel spec");
  }
  GeChannel chan(spec.ge, seed, stationary_start);
  std::uint64_t erased = 0;
  for (std::uint64_t i = 0; i < steps; ++i) {
    erased += chan.erase_next() ? 1 : 0;
  }
  GeValidateResult res;
  res.channel = spec.name;
  res.steps = steps;
  res.empirical = static_cast<double>(erased) / static_cast<double>(steps);
  res.formula = ge_avg_rate(spec.ge);
  res.rel_error = std::abs(res.empirical - res.formula) / res.formula;
  return res;
}

// ---------------------------------------------------------------------------
// CSV emission (stable column sets, documented in the README)
// ---------------------------------------------------------------------------

inline void write_latency_csv(std::ostream& os, const ExperimentConfig& cfg,
                              const LatencyResult& res) {
  os << "row,trial,channel,c,total_balls,decoded,error_floor_balls,"
        "stalled_balls,stall_occurred,decoding_failure,avg_latency,"
        "p95_latency,bins_sent,bins_received,peel_ops\n";
  for (std::size_t t = 0; t < res.trials.size(); ++t) {
    const TrialReport& r = res.trials[t];
    os << "trial," << t << ',' << cfg.channel.name << ','
       << cfg.code_params.c.str() << ',' << r.total_balls << ',' << r.decoded
       << ',' << r.error_floor_balls << ',' << r.stalled_balls << ','
       << (r.stall_occurred ? 1 : 0) << ',' << (r.decoding_failure ? 1 : 0)
       << ',' << detail::fmt_double(r.avg_latency) << ','
       << detail::fmt_double(r.p95_latency) << ',' << r.bins_sent << ','
       << r.bins_received << ',' << r.peel_ops << '\n';
  }
  os << "summary,," << cfg.channel.name << ',' << cfg.code_params.c.str() << ','
     << cfg.k * cfg.trials << ",,,,," << res.stalled_trials << ','
     << detail::fmt_double(res.avg_latency) << ','
     << detail::fmt_double(res.p95_latency) << ",,,\n";
}

inline void write_efficiency_csv(std::ostream& os, const ExperimentConfig& cfg,
                                 const EfficiencyResult& res) {
  os << "row,channel,c,c_decimal,trials,failures,failure_rate,passed\n";
  for (const EfficiencyPoint& p : res.probed) {
    os << "probe," << cfg.channel.name << ',' << p.c.str() << ','
       << detail::fmt_double(p.c.to_double()) << ',' << p.trials_run << ','
       << p.failures << ',' << detail::fmt_double(p.failure_rate()) << ','
       << (p.passed ? 1 : 0) << '\n';
  }
  os << "result," << cfg.channel.name << ','
     << (res.found ? res.c_min.str() : "unreachable") << ','
     << (res.found ? detail::fmt_double(res.c_min.to_double()) : "") << ",,,,"
     << (res.found ? 1 : 0) << '\n';
}

} // namespace mettle
