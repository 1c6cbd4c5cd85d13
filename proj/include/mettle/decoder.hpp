#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <vector>

#include "mettle/bytes.hpp"
#include "mettle/edge_set.hpp"
#include "mettle/params.hpp"

namespace mettle {

enum class BallStatus : std::uint8_t {
  kUndecoded = 0,
  kDecoded = 1,
  kErrorFloor = 2, // every incident bin erased; unrecoverable at any overhead
  kStalled = 3,    // undecoded despite surviving bins: peeling deadlock
};

enum class BinState : std::uint8_t {
  kPending = 0,  // index not yet reached by the stream
  kReceived = 1, // holds a residual payload, residual degree >= 1
  kErased = 2,
  kResolved = 3, // received and fully peeled
};

/// Outcome of one decoded stream.
///
/// Two stall notions are reported. `stall_occurred` flags any undecoded
/// ball with a surviving bin (a peeling deadlock of any size). Undecoded
/// balls also come in isolated handfuls (small stopping sets: an
/// erasure-combinatorics floor that, like the all-bins-erased floor, does
/// not shrink with overhead), so a trial counts as a `decoding_failure`
/// only when the peeling wavefront actually collapsed: some stretch of the
/// stream, one coupling window long, ends up mostly unrecovered.
struct TrialReport {
  std::uint64_t total_balls = 0;
  std::uint64_t decoded = 0;
  std::uint64_t error_floor_balls = 0;
  std::uint64_t stalled_balls = 0;
  bool stall_occurred = false;   // stalled_balls > 0
  bool decoding_failure = false; // wavefront stall (see above)
  std::uint64_t stall_position = 0; // first window start triggering failure
  std::vector<double> latencies; // decoded balls only, position order
  double avg_latency = 0.0;
  double p95_latency = 0.0;
  std::uint64_t bins_sent = 0;
  std::uint64_t bins_received = 0;
  std::uint64_t peel_ops = 0;
};

/// Decoding latency of ball x recovered on reception of bin z, in source
/// symbol units: z/(1+c) - x, exact-rational inside and clamped at zero
/// (the leading-edge bin can land fractionally early).
inline double decode_latency(const CodeParams& params, std::uint64_t z,
                             std::uint64_t x) {
  const Rational r = params.rate();
  const std::uint64_t lhs = z * r.den();
  const std::uint64_t rhs = x * r.num();
  if (lhs <= rhs) return 0.0;
  return static_cast<double>(lhs - rhs) / static_cast<double>(r.num());
}

namespace detail {

/// Fixed-size payload slots carved from slabs, recycled through a freelist.
class PayloadPool {
public:
  explicit PayloadPool(std::uint32_t chunk) : chunk_(chunk) {}

  std::uint32_t alloc() {
    if (!free_.empty()) {
      const std::uint32_t slot = free_.back();
      free_.pop_back();
      return slot;
    }
    const std::uint32_t slot = next_;
    if (slot / kSlabChunks == slabs_.size()) {
      slabs_.push_back(std::make_unique<std::uint8_t[]>(
          static_cast<std::size_t>(kSlabChunks) * chunk_));
    }
    ++next_;
    return slot;
  }

  std::uint8_t* at(std::uint32_t slot) {
    return slabs_[slot / kSlabChunks].get() +
           static_cast<std::size_t>(slot % kSlabChunks) * chunk_;
  }
  const std::uint8_t* at(std::uint32_t slot) const {
    return slabs_[slot / kSlabChunks].get() +
           static_cast<std::size_t>(slot % kSlabChunks) * chunk_;
  }

  void release(std::uint32_t slot) { free_.push_back(slot); }

private:
  static constexpr std::uint32_t kSlabChunks = 256;
  std::uint32_t chunk_;
  std::vector<std::unique_ptr<std::uint8_t[]>> slabs_;
  std::vector<std::uint32_t> free_;
  std::uint32_t next_ = 0;
};

} // namespace detail

/// Sliding-window peeling decoder. Bins are consumed in strictly ascending
/// index order; a missing index must be announced with mark_erased before
/// the next push. Residual degrees are kept for received bins only: a
/// received bin whose residual degree drops to one yields its last undecoded
/// ball, which is then XORed out of its other received bins, cascading until
/// fixpoint.
///
/// The decoder must know the number of source symbols up front: with plain
/// termination the tail bins would otherwise be indistinguishable from the
/// leading edges of balls that were never sent.
class Decoder {
public:
  Decoder(const CodeParams& params, std::uint64_t total_balls)
      : gen_(params),
        total_balls_(total_balls),
        symbol_size_(params.symbol_size),
        pool_(params.symbol_size) {
    const std::uint32_t l = params.l;
    if (total_balls_ > (1ULL << 31) / l) {
      throw std::invalid_argument("decoder: stream too long for edge index width");
    }
    ball_status_.reserve(total_balls_);
    ball_latency_.reserve(total_balls_);
    ball_slot_.reserve(total_balls_);
    ball_future_.reserve(total_balls_);
    ball_edges_.reserve(total_balls_ * l);
    const std::uint64_t est_bins = params.scaled_floor(total_balls_ + params.w) + 2;
    bin_state_.reserve(est_bins);
    bin_degree_.reserve(est_bins);
    bin_slot_.reserve(est_bins);
    bin_head_.reserve(est_bins);
  }

  const CodeParams& params() const { return gen_.params(); }
  std::uint64_t horizon() const { return horizon_; }
  std::uint64_t total_balls() const { return total_balls_; }
  std::uint64_t decoded_count() const { return decoded_; }
  std::uint64_t peel_ops() const { return peel_ops_; }
  std::uint64_t bins_received() const { return received_; }

  BallStatus status(std::uint64_t position) const {
    if (position >= ball_status_.size()) return BallStatus::kUndecoded;
    return ball_status_[position];
  }

  /// Residual degree of a received, unresolved bin; -1 otherwise.
  std::int64_t residual_degree(std::uint64_t bin) const {
    if (bin >= bin_state_.size() || bin_state_[bin] != BinState::kReceived) {
      return -1;
    }
    return bin_degree_[bin];
  }

  /// Residual payload view of a received, unresolved bin (empty otherwise).
  ByteSpan residual_payload(std::uint64_t bin) const {
    if (bin >= bin_state_.size() || bin_state_[bin] != BinState::kReceived) {
      return {};
    }
    return ByteSpan(pool_.at(bin_slot_[bin]), symbol_size_);
  }

  BinState bin_state(std::uint64_t bin) const {
    if (bin >= bin_state_.size()) return BinState::kPending;
    return bin_state_[bin];
  }

  /// Received bins containing ball x (any peel state).
  std::vector<std::uint64_t> received_bins_of(std::uint64_t x) const {
    std::vector<std::uint64_t> out;
    if (x >= registered_) return out;
    for (std::uint32_t j = 0; j < params().l; ++j) {
      const std::uint64_t b = ball_edges_[x * params().l + j];
      if (b < bin_state_.size() && (bin_state_[b] == BinState::kReceived ||
                                    bin_state_[b] == BinState::kResolved)) {
        out.push_back(b);
      }
    }
    return out;
  }

  /// Consume the next received bin. sink(position, latency, ByteSpan) fires
  /// once per ball recovered by this push; the payload view is only valid
  /// for the duration of the callback.
  template <typename Sink>
  void push(std::uint64_t bin_index, ByteSpan payload, Sink&& sink) {
    check_sequence(bin_index);
    if (payload.size() != symbol_size_) {
      throw std::invalid_argument("decoder: payload size mismatch");
    }
    register_balls(bin_index);
    ensure_bin(bin_index);

    const std::uint32_t slot = pool_.alloc();
    std::memcpy(pool_.at(slot), payload.data(), symbol_size_);
    bin_slot_[bin_index] = slot;

    std::int32_t degree = 0;
    for (std::int32_t e = bin_head_[bin_index]; e >= 0; e = edge_next_[e]) {
      const std::uint64_t x = static_cast<std::uint64_t>(e) / params().l;
      if (ball_status_[x] == BallStatus::kDecoded) {
        xor_bytes(pool_.at(slot), ball_payload(x), symbol_size_);
        ++peel_ops_;
      } else {
        ++degree;
      }
      on_edge_reached(x);
    }
    bin_degree_[bin_index] = degree;
    ++received_;
    horizon_ = bin_index + 1;
    if (degree == 0) {
      resolve_bin(bin_index);
    } else {
      bin_state_[bin_index] = BinState::kReceived;
      if (degree == 1) peel_queue_.push_back(bin_index);
      run_peeling(bin_index, sink);
    }
    flush_free_list();
  }

  struct DecodedBall {
    std::uint64_t position = 0;
    std::vector<std::uint8_t> payload;
    double latency = 0.0;
  };

  std::vector<DecodedBall> push_collect(std::uint64_t bin_index,
                                        ByteSpan payload) {
    std::vector<DecodedBall> out;
    push(bin_index, payload, [&](std::uint64_t x, double lat, ByteSpan p) {
      out.push_back(DecodedBall{x, {p.begin(), p.end()}, lat});
    });
    return out;
  }

  /// Announce that the bin with the next index was erased by the channel.
  void mark_erased(std::uint64_t bin_index) {
    check_sequence(bin_index);
    register_balls(bin_index);
    ensure_bin(bin_index);
    for (std::int32_t e = bin_head_[bin_index]; e >= 0; e = edge_next_[e]) {
      on_edge_reached(static_cast<std::uint64_t>(e) / params().l);
    }
    bin_state_[bin_index] = BinState::kErased;
    horizon_ = bin_index + 1;
    flush_free_list();
  }

  /// Classify every ball and aggregate latency and cost counters. Requires
  /// the stream to be fully consumed; with `treat_pending_as_erased` a
  /// truncated trace is accepted and unseen bins count as erased.
  TrialReport finalize_report(bool collect_latencies = true,
                              bool treat_pending_as_erased = false) const {
    if (registered_ != total_balls_) {
      throw std::logic_error("decoder: finalize before stream end");
    }
    if (!treat_pending_as_erased && max_edge_ >= horizon_) {
      throw std::logic_error("decoder: finalize before stream end");
    }
    TrialReport rep;
    rep.total_balls = total_balls_;
    rep.bins_sent = horizon_;
    rep.bins_received = received_;
    rep.peel_ops = peel_ops_;
    rep.decoded = decoded_;
    if (collect_latencies) rep.latencies.reserve(decoded_);
    double sum = 0.0;
    for (std::uint64_t x = 0; x < total_balls_; ++x) {
      if (ball_status_[x] == BallStatus::kDecoded) {
        sum += ball_latency_[x];
        if (collect_latencies) rep.latencies.push_back(ball_latency_[x]);
      } else if (all_edges_erased(x)) {
        ++rep.error_floor_balls;
      } else {
        ++rep.stalled_balls;
      }
    }
    rep.stall_occurred = rep.stalled_balls > 0;
    classify_wavefront_stall(rep);
    if (rep.decoded > 0) {
      rep.avg_latency = sum / static_cast<double>(rep.decoded);
      if (collect_latencies) {
        std::vector<double> sorted(rep.latencies);
        const std::size_t idx = percentile_rank(sorted.size(), 0.95);
        std::nth_element(sorted.begin(), sorted.begin() + idx, sorted.end());
        rep.p95_latency = sorted[idx];
      }
    }
    return rep;
  }

  /// Nearest-rank index of the q-th percentile in a sorted sample of size n.
  static std::size_t percentile_rank(std::size_t n, double q) {
    if (n == 0) return 0;
    const std::size_t rank = static_cast<std::size_t>(
        std::max(1.0, std::ceil(q * static_cast<double>(n))));
    return std::min(rank, n) - 1;
  }

private:
  void check_sequence(std::uint64_t bin_index) {
    if (bin_index < horizon_) {
      throw std::invalid_argument("decoder: duplicate or descending bin index");
    }
    if (bin_index > horizon_) {
      throw std::invalid_argument(
          "decoder: gap before bin index was not announced as erased");
    }
  }

  void ensure_bin(std::uint64_t bin) {
    if (bin >= bin_state_.size()) {
      const std::size_t n = bin + 1;
      bin_state_.resize(n, BinState::kPending);
      bin_degree_.resize(n, 0);
      bin_slot_.resize(n, -1);
      bin_head_.resize(n, -1);
    }
  }

  /// Bring every ball whose leading edge is at or below `index` into scope:
  /// derive its edge set once and link it into the incident lists.
  void register_balls(std::uint64_t index) {
    const std::uint32_t l = params().l;
    while (registered_ < total_balls_ &&
           tle_bin(params(), registered_) <= index) {
      const std::uint64_t x = registered_;
      const EdgeSet edges = gen_.derive(x);
      ball_status_.push_back(BallStatus::kUndecoded);
      ball_latency_.push_back(0.0);
      ball_slot_.push_back(-1);
      ball_future_.push_back(static_cast<std::uint8_t>(l));
      for (std::uint32_t j = 0; j < l; ++j) {
        const std::uint64_t b = edges.bins[j];
        ball_edges_.push_back(b);
        ensure_bin(b);
        if (b > max_edge_) max_edge_ = b;
        const std::int32_t slot = static_cast<std::int32_t>(x * l + j);
        edge_next_.push_back(bin_head_[b]);
        bin_head_[b] = slot;
      }
      ++registered_;
    }
  }

  const std::uint8_t* ball_payload(std::uint64_t x) const {
    return pool_.at(static_cast<std::uint32_t>(ball_slot_[x]));
  }

  /// The stream has reached one more of x's bins; a decoded payload can be
  /// dropped once no future bin will need it subtracted.
  void on_edge_reached(std::uint64_t x) {
    if (--ball_future_[x] == 0 && ball_status_[x] == BallStatus::kDecoded) {
      free_list_.push_back(static_cast<std::uint32_t>(ball_slot_[x]));
      ball_slot_[x] = -1;
    }
  }

  void resolve_bin(std::uint64_t bin) {
    bin_state_[bin] = BinState::kResolved;
    assert(all_zero(pool_.at(bin_slot_[bin]), symbol_size_));
    pool_.release(static_cast<std::uint32_t>(bin_slot_[bin]));
    bin_slot_[bin] = -1;
  }

  template <typename Sink>
  void run_peeling(std::uint64_t anchor, Sink&& sink) {
    const std::uint32_t l = params().l;
    while (!peel_queue_.empty()) {
      const std::uint64_t bin = peel_queue_.back();
      peel_queue_.pop_back();
      if (bin_state_[bin] != BinState::kReceived || bin_degree_[bin] != 1) {
        continue; // stale entry
      }
      std::uint64_t x = UINT64_MAX;
      for (std::int32_t e = bin_head_[bin]; e >= 0; e = edge_next_[e]) {
        const std::uint64_t cand = static_cast<std::uint64_t>(e) / l;
        if (ball_status_[cand] == BallStatus::kUndecoded) {
          x = cand;
          break;
        }
      }
      assert(x != UINT64_MAX);
      // The bin's residual is exactly x's payload; hand the slot over.
      ball_status_[x] = BallStatus::kDecoded;
      ball_latency_[x] = decode_latency(params(), anchor, x);
      ball_slot_[x] = bin_slot_[bin];
      bin_slot_[bin] = -1;
      bin_state_[bin] = BinState::kResolved;
      bin_degree_[bin] = 0;
      ++decoded_;
      sink(x, ball_latency_[x], ByteSpan(ball_payload(x), symbol_size_));
      for (std::uint32_t j = 0; j < l; ++j) {
        const std::uint64_t b = ball_edges_[x * l + j];
        if (b == bin || bin_state_[b] != BinState::kReceived) continue;
        xor_bytes(pool_.at(bin_slot_[b]), ball_payload(x), symbol_size_);
        ++peel_ops_;
        if (--bin_degree_[b] == 1) {
          peel_queue_.push_back(b);
        } else if (bin_degree_[b] == 0) {
          resolve_bin(b);
        }
      }
      if (ball_future_[x] == 0) {
        free_list_.push_back(static_cast<std::uint32_t>(ball_slot_[x]));
        ball_slot_[x] = -1;
      }
    }
  }

  // Slot frees are deferred to the end of the push so payload views handed
  // to the sink stay valid throughout the cascade.
  void flush_free_list() {
    for (std::uint32_t slot : free_list_) pool_.release(slot);
    free_list_.clear();
  }

  /// Wavefront-stall test: the decode failed if the stream is mostly
  /// unrecoverable past some position, checked over the next coupling window
  /// (truncated at stream end): majority undecoded, and more than 2l balls so
  /// that a lone stopping set near the tail cannot trip it. Isolated stopping
  /// sets stay far below the bar; a collapsed wavefront leaves everything
  /// after it undecoded and sails over.
  void classify_wavefront_stall(TrialReport& rep) const {
    if (rep.stalled_balls + rep.error_floor_balls == 0) return;
    const std::uint64_t w = params().w;
    const std::uint64_t k = total_balls_;
    std::vector<std::uint32_t> undecoded_prefix(k + 1, 0);
    for (std::uint64_t x = 0; x < k; ++x) {
      undecoded_prefix[x + 1] =
          undecoded_prefix[x] +
          (ball_status_[x] != BallStatus::kDecoded ? 1 : 0);
    }
    const std::uint64_t floor_count =
        std::min<std::uint64_t>(2 * params().l, w - 1);
    for (std::uint64_t x = 0; x < k; ++x) {
      const std::uint64_t end = std::min(x + w, k);
      const std::uint64_t undecoded = undecoded_prefix[end] - undecoded_prefix[x];
      if (undecoded > std::max(floor_count, (end - x) / 2)) {
        rep.decoding_failure = true;
        rep.stall_position = x;
        return;
      }
    }
  }

  bool all_edges_erased(std::uint64_t x) const {
    const std::uint32_t l = params().l;
    for (std::uint32_t j = 0; j < l; ++j) {
      const std::uint64_t b = ball_edges_[x * l + j];
      const BinState st =
          b < bin_state_.size() ? bin_state_[b] : BinState::kPending;
      if (st != BinState::kErased && st != BinState::kPending) return false;
    }
    return true;
  }

  EdgeSetGenerator gen_;
  std::uint64_t total_balls_;
  std::uint32_t symbol_size_;
  detail::PayloadPool pool_;

  std::uint64_t horizon_ = 0;    // next expected bin index
  std::uint64_t registered_ = 0; // balls brought into scope
  std::uint64_t received_ = 0;
  std::uint64_t decoded_ = 0;
  std::uint64_t peel_ops_ = 0;
  std::uint64_t max_edge_ = 0;

  std::vector<BallStatus> ball_status_;
  std::vector<double> ball_latency_;
  std::vector<std::int32_t> ball_slot_;
  std::vector<std::uint8_t> ball_future_;
  std::vector<std::uint64_t> ball_edges_; // flat, l per ball

  std::vector<BinState> bin_state_;
  std::vector<std::int32_t> bin_degree_;
  std::vector<std::int32_t> bin_slot_;
  std::vector<std::int32_t> bin_head_; // head of intrusive incident list
  std::vector<std::int32_t> edge_next_;

  std::vector<std::uint64_t> peel_queue_;
  std::vector<std::uint32_t> free_list_;
};

} // namespace mettle
