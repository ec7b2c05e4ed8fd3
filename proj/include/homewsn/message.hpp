// Canonical message grammar carried over the radio:
//   R:<room>;<field>=<value>;...;<field>=<value>\n
// celsius / percent_rh render with exactly two decimals, all other units as
// integers. encode/decode round-trip exactly.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "homewsn/errors.hpp"
#include "homewsn/rooms.hpp"

namespace homewsn {

inline std::string render_value(Unit unit, Fixed2 value) {
  return value.to_string(/*force_decimals=*/!unit_is_integral(unit));
}

inline std::vector<std::uint8_t> encode_message(RoomId room,
                                                std::span<const SensorSample> samples) {
  std::string line = "R:";
  line += to_string(room);
  for (const auto& s : samples) {
    line += ';';
    line += s.field;
    line += '=';
    line += render_value(s.unit, s.value);
  }
  line += '\n';
  return {line.begin(), line.end()};
}

struct DecodedMessage {
  RoomId room = RoomId::living_room;
  std::vector<SensorSample> samples;
};

namespace detail {

inline void validate_sample_range(const FieldSpec& spec, Fixed2 v) {
  std::int64_t h = v.hundredths();
  bool ok = true;
  switch (spec.unit) {
    case Unit::adc_counts: ok = h >= 0 && h <= 1023 * 100; break;
    case Unit::percent_rh: ok = h >= 0 && h <= 100 * 100; break;
    case Unit::boolean_flag: ok = h == 0 || h == 100; break;
    case Unit::centimeters: ok = h >= 0; break;
    case Unit::celsius: break;
  }
  if (!ok) throw GrammarError("value out of range for field " + spec.name);
}

}  // namespace detail

// Throws UnknownRoom for an unrecognized room token, GrammarError for
// anything else malformed (missing terminator, bad field, bad number,
// duplicate field, out-of-range value).
inline DecodedMessage decode_message(std::span<const std::uint8_t> bytes) {
  std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  if (text.empty() || text.back() != '\n') throw GrammarError("message missing terminator");
  text.remove_suffix(1);
  if (text.find('\n') != std::string_view::npos) throw GrammarError("embedded newline");
  if (!text.starts_with("R:")) throw GrammarError("message missing R: prefix");
  text.remove_prefix(2);

  std::size_t sep = text.find(';');
  std::string_view room_token = text.substr(0, sep);
  auto room = room_from_string(room_token);
  if (!room) throw UnknownRoom("unknown room: " + std::string(room_token));
  const RoomProfile& profile = profile_for(*room);

  DecodedMessage out;
  out.room = *room;
  if (sep == std::string_view::npos) throw GrammarError("message has no fields");
  text.remove_prefix(sep + 1);

  while (true) {
    std::size_t next = text.find(';');
    std::string_view pair = text.substr(0, next);
    std::size_t eq = pair.find('=');
    if (eq == std::string_view::npos || eq == 0) throw GrammarError("malformed field pair");
    std::string_view name = pair.substr(0, eq);
    std::string_view value_text = pair.substr(eq + 1);

    const FieldSpec* spec = profile.find_field(name);
    if (!spec) throw GrammarError("field not in room profile: " + std::string(name));
    for (const auto& s : out.samples) {
      if (s.field == name) throw GrammarError("duplicate field: " + std::string(name));
    }
    auto value = Fixed2::parse(value_text);
    if (!value) throw GrammarError("bad value for field " + std::string(name));
    detail::validate_sample_range(*spec, *value);
    out.samples.push_back({std::string(name), *value, spec->unit});

    if (next == std::string_view::npos) break;
    text.remove_prefix(next + 1);
  }
  return out;
}

// Splits into payloads of `max_payload` bytes; the last chunk may be shorter.
inline std::vector<std::vector<std::uint8_t>> chunk_message(
    std::span<const std::uint8_t> message, std::size_t max_payload) {
  if (max_payload == 0) throw ValueOutOfRange("max_payload must be >= 1");
  std::vector<std::vector<std::uint8_t>> chunks;
  for (std::size_t off = 0; off < message.size(); off += max_payload) {
    std::size_t len = std::min(max_payload, message.size() - off);
    chunks.emplace_back(message.begin() + off, message.begin() + off + len);
  }
  return chunks;
}

}  // namespace homewsn
