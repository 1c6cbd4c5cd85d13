#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "mettle/bytes.hpp"
#include "mettle/edge_set.hpp"
#include "mettle/params.hpp"

namespace mettle {

/// One source packet: position is its sequence number (its ball position).
struct SourceSymbol {
  std::uint64_t position = 0;
  std::vector<std::uint8_t> payload;
};

/// One coded packet: a bin. The payload is the XOR of every ball thrown into
/// the bin; a bin no ball touched is all zeros.
struct CodedSymbol {
  std::uint64_t bin_index = 0;
  std::vector<std::uint8_t> payload;
};

/// Streaming encoder. Ingesting ball t XORs its payload into the l bins of
/// its edge set and releases every bin below floor((1+c)(t+1)): the leading
/// edge of any future ball lands at or above that index, so those bins can
/// never change again. Released indices are gap-free; untouched bins go out
/// as zero payloads so the receiver can infer erasures from index gaps.
class Encoder {
public:
  explicit Encoder(const CodeParams& params)
      : gen_(params), symbol_size_(params.symbol_size) {
    ring_capacity_ = params.met_trials() + 4;
    ring_.assign(static_cast<std::size_t>(ring_capacity_) * symbol_size_, 0);
  }

  const CodeParams& params() const { return gen_.params(); }
  std::uint64_t next_ball() const { return next_ball_; }
  std::uint64_t released_watermark() const { return watermark_; }
  std::uint64_t bins_emitted() const { return emitted_; }

  /// Ingest the next ball; sink(bin_index, ByteSpan) is called once per
  /// finalized bin, in ascending index order.
  template <typename Sink>
  void push(ByteSpan payload, Sink&& sink) {
    if (flushed_) {
      throw std::logic_error("encoder: push after flush");
    }
    if (payload.size() != symbol_size_) {
      throw std::invalid_argument("encoder: payload size mismatch");
    }
    const std::uint64_t x = next_ball_;
    const EdgeSet edges = gen_.derive(x);
    for (std::uint64_t bin : edges) {
      xor_bytes(slot(bin), payload.data(), symbol_size_);
      if (bin > max_touched_) max_touched_ = bin;
    }
    ++next_ball_;
    release_up_to(params().scaled_floor(next_ball_), sink);
  }

  void push(const SourceSymbol& s, std::vector<CodedSymbol>& out) {
    if (s.position != next_ball_) {
      throw std::invalid_argument("encoder: out-of-order source position");
    }
    push(ByteSpan(s.payload),
         [&](std::uint64_t bin, ByteSpan p) { out.emplace_back(CodedSymbol{bin, {p.begin(), p.end()}}); });
  }

  std::vector<CodedSymbol> push_collect(const SourceSymbol& s) {
    std::vector<CodedSymbol> out;
    push(s, out);
    return out;
  }

  /// Terminate the stream: emit every remaining bin up to the highest index
  /// any edge reached. Plain termination; the tail spans about (1+c)w bins.
  template <typename Sink>
  void flush(Sink&& sink) {
    if (flushed_) {
      throw std::logic_error("encoder: double flush");
    }
    if (next_ball_ > 0 && max_touched_ >= watermark_) {
      release_up_to(max_touched_ + 1, sink);
    }
    flushed_ = true;
  }

  std::vector<CodedSymbol> flush_collect() {
    std::vector<CodedSymbol> out;
    flush([&](std::uint64_t bin, ByteSpan p) {
      out.emplace_back(CodedSymbol{bin, {p.begin(), p.end()}});
    });
    return out;
  }

private:
  std::uint8_t* slot(std::uint64_t bin) {
    return ring_.data() + (bin % ring_capacity_) * symbol_size_;
  }

  template <typename Sink>
  void release_up_to(std::uint64_t end, Sink&& sink) {
    for (; watermark_ < end; ++watermark_) {
      std::uint8_t* p = slot(watermark_);
      sink(watermark_, ByteSpan(p, symbol_size_));
      std::memset(p, 0, symbol_size_); // slot is recycled for a future bin
      ++emitted_;
    }
  }

  EdgeSetGenerator gen_;
  std::uint32_t symbol_size_;
  std::uint64_t ring_capacity_ = 0;
  std::vector<std::uint8_t> ring_;
  std::uint64_t next_ball_ = 0;
  std::uint64_t watermark_ = 0;  // lowest unreleased bin index
  std::uint64_t max_touched_ = 0;
  std::uint64_t emitted_ = 0;
  bool flushed_ = false;
};

} // namespace mettle
