#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "mettle/bytes.hpp"
#include "mettle/encoder.hpp"

namespace mettle::wire {

// Record layout (bit-exact): little-endian u64 bin_index, little-endian u32
// payload_length, then the payload bytes. Erased bins are simply absent from
// a trace; the reader reports them as index gaps.

namespace detail {

inline void put_le(std::ostream& os, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) {
    os.put(static_cast<char>((v >> (8 * i)) & 0xff));
  }
}

inline bool get_le(std::istream& is, int bytes, std::uint64_t& out) {
  out = 0;
  for (int i = 0; i < bytes; ++i) {
    const int ch = is.get();
    if (ch == std::istream::traits_type::eof()) {
      if (i == 0) return false;
      throw std::runtime_error("wire: truncated record header");
    }
    out |= static_cast<std::uint64_t>(static_cast<unsigned char>(ch)) << (8 * i);
  }
  return true;
}

} // namespace detail

inline void write_symbol(std::ostream& os, std::uint64_t bin_index,
                         ByteSpan payload) {
  detail::put_le(os, bin_index, 8);
  detail::put_le(os, payload.size(), 4);
  os.write(reinterpret_cast<const char*>(payload.data()),
           static_cast<std::streamsize>(payload.size()));
}

inline void write_symbol(std::ostream& os, const CodedSymbol& sym) {
  write_symbol(os, sym.bin_index, ByteSpan(sym.payload));
}

/// Pull-reader over a trace. next() yields records in file order; callers
/// infer erasures from gaps between consecutive bin indices.
class TraceReader {
public:
  explicit TraceReader(std::istream& is) : is_(is) {}

  std::optional<CodedSymbol> next() {
    std::uint64_t bin = 0;
    if (!detail::get_le(is_, 8, bin)) return std::nullopt;
    std::uint64_t len = 0;
    if (!detail::get_le(is_, 4, len)) {
      throw std::runtime_error("wire: truncated record header");
    }
    CodedSymbol sym;
    sym.bin_index = bin;
    sym.payload.resize(len);
    is_.read(reinterpret_cast<char*>(sym.payload.data()),
             static_cast<std::streamsize>(len));
    if (static_cast<std::uint64_t>(is_.gcount()) != len) {
      throw std::runtime_error("wire: truncated payload");
    }
    return sym;
  }

private:
  std::istream& is_;
};

} // namespace mettle::wire
