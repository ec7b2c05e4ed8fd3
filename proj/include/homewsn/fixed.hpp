// Two-decimal fixed-point value type used for every sensor reading.
// Stored as integer hundredths so comparisons, deltas, and the message
// grammar round-trip exactly.
#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include "homewsn/errors.hpp"

namespace homewsn {

class Fixed2 {
 public:
  constexpr Fixed2() = default;

  static constexpr Fixed2 from_hundredths(std::int64_t h) {
    Fixed2 v;
    v.hundredths_ = h;
    return v;
  }

  static constexpr Fixed2 from_int(std::int64_t units) {
    return from_hundredths(units * 100);
  }

  // Rounds to the nearest hundredth. Throws ValueOutOfRange for values the
  // 64-bit scaled representation cannot hold.
  static Fixed2 from_double(double v) {
    if (!std::isfinite(v) || std::abs(v) >= 9.2e16) {
      throw ValueOutOfRange("value not representable at 2-decimal fixed point");
    }
    return from_hundredths(static_cast<std::int64_t>(std::llround(v * 100.0)));
  }

  // Accepts an optional sign, digits, and at most two decimals ("12", "-3.5",
  // "25.50"). Returns nullopt on anything else.
  static std::optional<Fixed2> parse(std::string_view text) {
    if (text.empty()) return std::nullopt;
    std::size_t i = 0;
    bool negative = false;
    if (text[i] == '-' || text[i] == '+') {
      negative = text[i] == '-';
      ++i;
    }
    if (i >= text.size()) return std::nullopt;
    std::int64_t units = 0;
    std::size_t digits = 0;
    while (i < text.size() && text[i] >= '0' && text[i] <= '9') {
      if (units > (std::numeric_limits<std::int64_t>::max() - 9) / 10) return std::nullopt;
      units = units * 10 + (text[i] - '0');
      ++i;
      ++digits;
    }
    if (digits == 0) return std::nullopt;
    std::int64_t frac = 0;
    if (i < text.size()) {
      if (text[i] != '.') return std::nullopt;
      ++i;
      std::size_t frac_digits = 0;
      while (i < text.size() && text[i] >= '0' && text[i] <= '9') {
        frac = frac * 10 + (text[i] - '0');
        ++i;
        ++frac_digits;
      }
      if (frac_digits == 0 || frac_digits > 2) return std::nullopt;
      if (frac_digits == 1) frac *= 10;
    }
    if (i != text.size()) return std::nullopt;
    if (units > (std::numeric_limits<std::int64_t>::max() - frac) / 100) return std::nullopt;
    std::int64_t h = units * 100 + frac;
    return from_hundredths(negative ? -h : h);
  }

  constexpr std::int64_t hundredths() const { return hundredths_; }
  constexpr double to_double() const { return static_cast<double>(hundredths_) / 100.0; }
  constexpr bool is_integral() const { return hundredths_ % 100 == 0; }

  // Canonical rendering: integer text when the value is whole and decimals are
  // not forced, otherwise exactly two decimals.
  std::string to_string(bool force_decimals = false) const {
    std::int64_t h = hundredths_;
    bool neg = h < 0;
    std::uint64_t mag = neg ? static_cast<std::uint64_t>(-(h + 1)) + 1 : static_cast<std::uint64_t>(h);
    std::uint64_t units = mag / 100;
    std::uint64_t frac = mag % 100;
    char buf[32];
    if (!force_decimals && frac == 0) {
      std::snprintf(buf, sizeof(buf), "%s%llu", neg ? "-" : "",
                    static_cast<unsigned long long>(units));
    } else {
      std::snprintf(buf, sizeof(buf), "%s%llu.%02llu", neg ? "-" : "",
                    static_cast<unsigned long long>(units),
                    static_cast<unsigned long long>(frac));
    }
    return buf;
  }

  friend constexpr bool operator==(Fixed2 a, Fixed2 b) { return a.hundredths_ == b.hundredths_; }
  friend constexpr auto operator<=>(Fixed2 a, Fixed2 b) { return a.hundredths_ <=> b.hundredths_; }

 private:
  std::int64_t hundredths_ = 0;
};

// Absolute difference in hundredths, computed in unsigned space so extreme
// operands cannot overflow.
inline std::uint64_t abs_diff_hundredths(Fixed2 a, Fixed2 b) {
  std::int64_t x = a.hundredths();
  std::int64_t y = b.hundredths();
  if (x >= y) return static_cast<std::uint64_t>(x) - static_cast<std::uint64_t>(y);
  return static_cast<std::uint64_t>(y) - static_cast<std::uint64_t>(x);
}

}  // namespace homewsn
