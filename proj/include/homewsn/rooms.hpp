// The four monitored rooms: sensor field sets, units, threshold rules, and
// rule evaluation.
#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "homewsn/errors.hpp"
#include "homewsn/fixed.hpp"

namespace homewsn {

enum class RoomId : std::uint8_t { living_room, kitchen, porch, terrace_garden };
inline constexpr std::size_t kRoomCount = 4;
inline constexpr std::array<RoomId, kRoomCount> kAllRooms = {
    RoomId::living_room, RoomId::kitchen, RoomId::porch, RoomId::terrace_garden};

inline std::string_view to_string(RoomId room) {
  switch (room) {
    case RoomId::living_room: return "living_room";
    case RoomId::kitchen: return "kitchen";
    case RoomId::porch: return "porch";
    case RoomId::terrace_garden: return "terrace_garden";
  }
  return "?";
}

inline std::optional<RoomId> room_from_string(std::string_view name) {
  for (RoomId r : kAllRooms) {
    if (to_string(r) == name) return r;
  }
  return std::nullopt;
}

// Throws UnknownRoom; used at the CLI/HTTP edges where rooms arrive as text.
inline RoomId parse_room(std::string_view name) {
  auto room = room_from_string(name);
  if (!room) throw UnknownRoom("unknown room: " + std::string(name));
  return *room;
}

enum class Unit : std::uint8_t { adc_counts, celsius, percent_rh, centimeters, boolean_flag };

// Fields carrying whole-number readings (rendered without decimals).
inline constexpr bool unit_is_integral(Unit u) {
  return u == Unit::adc_counts || u == Unit::centimeters || u == Unit::boolean_flag;
}

// Clamp to the unit's range and snap integral units to whole values.
inline Fixed2 clamp_to_unit(Unit unit, Fixed2 v) {
  std::int64_t h = v.hundredths();
  switch (unit) {
    case Unit::adc_counts:
      h = std::clamp<std::int64_t>(h, 0, 1023 * 100);
      break;
    case Unit::percent_rh:
      h = std::clamp<std::int64_t>(h, 0, 100 * 100);
      break;
    case Unit::boolean_flag:
      h = h >= 50 ? 100 : 0;
      break;
    case Unit::centimeters:
      h = std::max<std::int64_t>(h, 0);
      break;
    case Unit::celsius:
      break;
  }
  if (unit_is_integral(unit)) {
    // round half away from zero to a whole unit
    std::int64_t sign = h < 0 ? -1 : 1;
    h = sign * (((sign * h) + 50) / 100) * 100;
  }
  return Fixed2::from_hundredths(h);
}

struct SensorSample {
  std::string field;
  Fixed2 value;
  Unit unit = Unit::adc_counts;
};

enum class Actuator : std::uint8_t { led, buzzer, disco_pair };

inline std::string_view to_string(Actuator a) {
  switch (a) {
    case Actuator::led: return "led";
    case Actuator::buzzer: return "buzzer";
    case Actuator::disco_pair: return "disco_pair";
  }
  return "?";
}

enum class EffectKind : std::uint8_t { on_for, latch_on, toggle_opposite };

struct ActuatorCommand {
  Actuator actuator = Actuator::led;
  EffectKind effect = EffectKind::on_for;
  std::int64_t duration_ms = 0;  // on_for only; 0 elsewhere (latched)
};

enum class CompareOp : std::uint8_t { less, greater, equals };

struct Comparison {
  std::string field;
  CompareOp op = CompareOp::greater;
  Fixed2 threshold;
};

// One rule: a comparison (or disjunction of two) driving an actuator.
struct ThresholdRule {
  Comparison first;
  std::optional<Comparison> second;  // OR-ed with first when present
  ActuatorCommand action;
};

struct FieldSpec {
  std::string name;
  Unit unit;
};

struct RoomProfile {
  RoomId room = RoomId::living_room;
  std::vector<FieldSpec> fields;  // canonical message order
  std::vector<ThresholdRule> rules;

  const FieldSpec* find_field(std::string_view name) const {
    for (const auto& f : fields) {
      if (f.name == name) return &f;
    }
    return nullptr;
  }
};

// The paper's four rooms with their sensors and trigger rules.
inline const std::map<RoomId, RoomProfile>& builtin_profiles() {
  static const std::map<RoomId, RoomProfile> profiles = [] {
    std::map<RoomId, RoomProfile> m;

    RoomProfile living;
    living.room = RoomId::living_room;
    living.fields = {{"temperature", Unit::celsius},
                     {"humidity", Unit::percent_rh},
                     {"sound", Unit::adc_counts},
                     {"light", Unit::adc_counts}};
    living.rules = {
        {{"light", CompareOp::greater, Fixed2::from_int(500)},
         std::nullopt,
         {Actuator::disco_pair, EffectKind::toggle_opposite, 0}},
        {{"sound", CompareOp::greater, Fixed2::from_int(30)},
         std::nullopt,
         {Actuator::led, EffectKind::on_for, 2000}},
    };
    m[RoomId::living_room] = std::move(living);

    RoomProfile kitchen;
    kitchen.room = RoomId::kitchen;
    kitchen.fields = {{"flame", Unit::adc_counts}, {"gas", Unit::adc_counts}};
    kitchen.rules = {
        {{"flame", CompareOp::less, Fixed2::from_int(800)},
         Comparison{"gas", CompareOp::greater, Fixed2::from_int(600)},
         {Actuator::buzzer, EffectKind::on_for, 1000}},
    };
    m[RoomId::kitchen] = std::move(kitchen);

    RoomProfile porch;
    porch.room = RoomId::porch;
    porch.fields = {{"distance", Unit::centimeters},
                    {"motion", Unit::boolean_flag},
                    {"shock", Unit::boolean_flag}};
    porch.rules = {
        {{"shock", CompareOp::equals, Fixed2::from_int(1)},
         std::nullopt,
         {Actuator::led, EffectKind::latch_on, 0}},
    };
    m[RoomId::porch] = std::move(porch);

    RoomProfile terrace;
    terrace.room = RoomId::terrace_garden;
    terrace.fields = {{"temperature", Unit::celsius},
                      {"humidity", Unit::percent_rh},
                      {"soil_moisture", Unit::adc_counts},
                      {"water_level", Unit::adc_counts}};
    terrace.rules = {
        {{"water_level", CompareOp::greater, Fixed2::from_int(600)},
         std::nullopt,
         {Actuator::buzzer, EffectKind::on_for, 1000}},
    };
    m[RoomId::terrace_garden] = std::move(terrace);

    return m;
  }();
  return profiles;
}

inline const RoomProfile& profile_for(RoomId room) { return builtin_profiles().at(room); }

struct ActuatorEvent {
  Actuator actuator = Actuator::led;
  EffectKind effect = EffectKind::on_for;
  std::int64_t start_ms = 0;
  std::optional<std::int64_t> end_ms;  // nullopt: latched or instantaneous toggle
  std::string field;                   // the comparison that fired
  Fixed2 value;
};

// Active on [start, end] for timed effects, [start, inf) for latches.
inline bool event_active(const ActuatorEvent& e, std::int64_t t_ms) {
  if (t_ms < e.start_ms) return false;
  return !e.end_ms || t_ms <= *e.end_ms;
}

namespace detail {

inline bool comparison_holds(const Comparison& c, const std::vector<SensorSample>& samples,
                             const Fixed2** matched_value) {
  for (const auto& s : samples) {
    if (s.field == c.field) {
      *matched_value = &s.value;
      switch (c.op) {
        case CompareOp::less: return s.value < c.threshold;
        case CompareOp::greater: return s.value > c.threshold;
        case CompareOp::equals: return s.value == c.threshold;
      }
    }
  }
  throw MissingField("rule references missing field: " + c.field);
}

}  // namespace detail

// Pure rule evaluation. Strict comparisons: boundary values never fire.
// Throws MissingField when a referenced field is absent from `samples`.
inline std::vector<ActuatorEvent> evaluate_rules(const RoomProfile& profile,
                                                 const std::vector<SensorSample>& samples,
                                                 std::int64_t now_ms) {
  std::vector<ActuatorEvent> events;
  for (const auto& rule : profile.rules) {
    const Fixed2* first_value = nullptr;
    const Fixed2* second_value = nullptr;
    bool first = detail::comparison_holds(rule.first, samples, &first_value);
    bool second = rule.second && detail::comparison_holds(*rule.second, samples, &second_value);
    if (!first && !second) continue;

    ActuatorEvent e;
    e.actuator = rule.action.actuator;
    e.effect = rule.action.effect;
    e.start_ms = now_ms;
    if (rule.action.effect == EffectKind::on_for) e.end_ms = now_ms + rule.action.duration_ms;
    if (first) {
      e.field = rule.first.field;
      e.value = *first_value;
    } else {
      e.field = rule.second->field;
      e.value = *second_value;
    }
    events.push_back(std::move(e));
  }
  return events;
}

}  // namespace homewsn
