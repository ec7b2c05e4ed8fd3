// Lossless delta compression for 2-decimal fixed-point series.
//
// Byte layout (documented contract):
//   varint(count)                      -- number of values
//   zigzag-varint(firstize)            -- first value in hundredths (count >= 1)
//   zigzag-varint(delta) x (count - 1) -- successive differences in hundredths
//
// varint: LEB128-style little-endian base-128, low 7 bits per byte, high bit
// set on continuation bytes. zigzag: (n << 1) ^ (n >> 63) folds sign into the
// low bit.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "homewsn/errors.hpp"
#include "homewsn/fixed.hpp"

namespace homewsn {

namespace varint {

inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  while (v >= 0x80) {
    out.push_back(static_cast<std::uint8_t>(v) | 0x80);
    v >>= 7;
  }
  out.push_back(static_cast<std::uint8_t>(v));
}

inline std::uint64_t get_u64(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  std::uint64_t v = 0;
  int shift = 0;
  while (true) {
    if (pos >= bytes.size()) throw MalformedEncoding("varint truncated");
    if (shift >= 64) throw MalformedEncoding("varint too long");
    std::uint8_t b = bytes[pos++];
    v |= static_cast<std::uint64_t>(b & 0x7F) << shift;
    if (!(b & 0x80)) return v;
    shift += 7;
  }
}

inline std::uint64_t zigzag(std::int64_t n) {
  return (static_cast<std::uint64_t>(n) << 1) ^ static_cast<std::uint64_t>(n >> 63);
}

inline std::int64_t unzigzag(std::uint64_t z) {
  return static_cast<std::int64_t>(z >> 1) ^ -static_cast<std::int64_t>(z & 1);
}

}  // namespace varint

struct CompressedSeries {
  std::optional<Fixed2> first_value;  // nullopt for an empty series
  std::vector<std::int64_t> deltas;   // hundredths

  std::size_t count() const { return first_value ? deltas.size() + 1 : 0; }

  static CompressedSeries from_values(std::span<const Fixed2> series) {
    CompressedSeries c;
    if (series.empty()) return c;
    c.first_value = series[0];
    c.deltas.reserve(series.size() - 1);
    for (std::size_t i = 1; i < series.size(); ++i) {
      std::int64_t prev = series[i - 1].hundredths();
      std::int64_t cur = series[i].hundredths();
      std::int64_t delta;
      if (__builtin_sub_overflow(cur, prev, &delta))
        throw ValueOutOfRange("compress: delta exceeds 64-bit signed range");
      c.deltas.push_back(delta);
    }
    return c;
  }

  std::vector<Fixed2> values() const {
    std::vector<Fixed2> out;
    if (!first_value) return out;
    out.reserve(deltas.size() + 1);
    std::int64_t cur = first_value->hundredths();
    out.push_back(*first_value);
    for (std::int64_t d : deltas) {
      cur += d;
      out.push_back(Fixed2::from_hundredths(cur));
    }
    return out;
  }

  std::vector<std::uint8_t> to_bytes() const {
    std::vector<std::uint8_t> out;
    varint::put_u64(out, count());
    if (!first_value) return out;
    varint::put_u64(out, varint::zigzag(first_value->hundredths()));
    for (std::int64_t d : deltas) varint::put_u64(out, varint::zigzag(d));
    return out;
  }

  // Throws MalformedEncoding on truncation, oversized varints, or trailing
  // bytes.
  static CompressedSeries from_bytes(std::span<const std::uint8_t> bytes) {
    std::size_t pos = 0;
    std::uint64_t count = varint::get_u64(bytes, pos);
    CompressedSeries c;
    if (count > 0) {
      c.first_value = Fixed2::from_hundredths(varint::unzigzag(varint::get_u64(bytes, pos)));
      c.deltas.reserve(count - 1);
      for (std::uint64_t i = 1; i < count; ++i)
        c.deltas.push_back(varint::unzigzag(varint::get_u64(bytes, pos)));
    }
    if (pos != bytes.size()) throw MalformedEncoding("trailing bytes after series");
    return c;
  }
};

inline std::vector<std::uint8_t> compress_series(std::span<const Fixed2> series) {
  return CompressedSeries::from_values(series).to_bytes();
}

inline std::vector<Fixed2> decompress_series(std::span<const std::uint8_t> bytes) {
  return CompressedSeries::from_bytes(bytes).values();
}

}  // namespace homewsn
