// Scripted synthetic environment: a JSON scenario file describing topology,
// link/energy/duty configuration, per-room signal generators, and timed event
// injections. env_at() is a pure function of (seed, room, field, t), so runs
// replay bit-identically.
#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "homewsn/crypto.hpp"
#include "homewsn/energy.hpp"
#include "homewsn/medium.hpp"
#include "homewsn/message.hpp"
#include "homewsn/rng.hpp"
#include "homewsn/rooms.hpp"

namespace homewsn {

struct SignalSpec {
  double baseline = 0;           // boolean fields: probability of reading 1
  double diurnal_amplitude = 0;  // sinusoid over a 24 h simulated day
  double noise_stddev = 0;
};

struct TimedEvent {
  std::int64_t at_ms = 0;
  RoomId room = RoomId::living_room;
  std::string field;
  Fixed2 value;
  std::int64_t hold_ms = 0;  // override active on [at, at + hold]
};

struct NodePlacement {
  RoomId room = RoomId::living_room;
  Position position;
  std::int64_t sampling_period_ms = 0;  // 0: inherit the scenario default
};

struct AggregationConfig {
  bool enabled = false;
  std::size_t window = 10;
};

struct EncryptionConfig {
  bool enabled = false;
  PayloadKey key;
};

struct Scenario {
  std::string name = "scenario";
  std::uint64_t seed = 1;
  std::int64_t duration_ms = 60'000;
  double time_scale = 1.0;  // simulated-ms of diurnal day per run-ms
  std::int64_t sampling_period_ms = 1000;
  RoutingMode routing_mode = RoutingMode::tree;
  Position coordinator_position{0, 0};
  LinkModel link;
  EnergyModel energy;
  double battery_capacity_mah = 2000.0;
  DutyCycle duty;
  EncryptionConfig encryption;
  AggregationConfig aggregation;
  bool archive_series = false;
  std::size_t batch_size = 100;
  std::int64_t reassembly_timeout_ms = 5000;
  std::vector<NodePlacement> nodes;
  std::map<RoomId, std::map<std::string, SignalSpec>> signals;
  std::vector<TimedEvent> events;
};

// Plausible home defaults for every field the profiles know about; scenario
// files override per room.
inline const std::map<std::string, SignalSpec>& default_signal_specs() {
  static const std::map<std::string, SignalSpec> specs = {
      {"temperature", {25.0, 3.0, 0.2}},
      {"humidity", {45.0, 8.0, 1.0}},
      {"sound", {12.0, 0.0, 4.0}},
      {"light", {300.0, 200.0, 20.0}},
      {"flame", {950.0, 0.0, 10.0}},  // healthy flame sensors read high
      {"gas", {200.0, 0.0, 25.0}},
      {"distance", {150.0, 0.0, 8.0}},
      {"motion", {0.02, 0.0, 0.0}},
      {"shock", {0.0, 0.0, 0.0}},
      {"soil_moisture", {480.0, 60.0, 15.0}},
      {"water_level", {320.0, 0.0, 30.0}},
  };
  return specs;
}

inline SignalSpec signal_spec_for(const Scenario& sc, RoomId room, const std::string& field) {
  auto room_it = sc.signals.find(room);
  if (room_it != sc.signals.end()) {
    auto f = room_it->second.find(field);
    if (f != room_it->second.end()) return f->second;
  }
  auto d = default_signal_specs().find(field);
  return d != default_signal_specs().end() ? d->second : SignalSpec{};
}

inline constexpr std::int64_t kDiurnalPeriodMs = 24LL * 3600 * 1000;

// Deterministic environment readout: baseline + diurnal sinusoid + seeded
// noise, overridden by any active TimedEvent (last matching event wins),
// clamped and quantized to the field's unit.
inline Fixed2 env_at(const Scenario& sc, RoomId room, const std::string& field,
                     std::int64_t t_ms) {
  const FieldSpec* spec = profile_for(room).find_field(field);
  if (!spec) throw UnknownField("env_at: no field '" + field + "' in " + std::string(to_string(room)));
  if (t_ms < 0 || t_ms > sc.duration_ms)
    throw ValidationError("env_at: t outside scenario duration");

  // Event overrides take precedence over the generator.
  std::optional<Fixed2> override;
  for (const auto& ev : sc.events) {
    if (ev.room == room && ev.field == field && t_ms >= ev.at_ms && t_ms <= ev.at_ms + ev.hold_ms)
      override = ev.value;
  }
  if (override) return clamp_to_unit(spec->unit, *override);

  SignalSpec sig = signal_spec_for(sc, room, field);
  Rng noise(mix_seed(mix_seed(sc.seed, hash_str(to_string(room))),
                     mix_seed(hash_str(field), static_cast<std::uint64_t>(t_ms))));

  if (spec->unit == Unit::boolean_flag) {
    return Fixed2::from_int(noise.u01() < sig.baseline ? 1 : 0);
  }

  double phase = 2.0 * std::numbers::pi *
                 static_cast<double>(static_cast<std::int64_t>(
                     std::llround(static_cast<double>(t_ms) * sc.time_scale)) %
                                     kDiurnalPeriodMs) /
                 static_cast<double>(kDiurnalPeriodMs);
  double value = sig.baseline + sig.diurnal_amplitude * std::sin(phase);
  if (sig.noise_stddev > 0) value += noise.gauss(0.0, sig.noise_stddev);
  return clamp_to_unit(spec->unit, Fixed2::from_double(value));
}

namespace detail {

inline void validate_event(const Scenario& sc, const TimedEvent& ev, std::size_t index) {
  auto path = [index](const char* leaf) {
    return "events[" + std::to_string(index) + "]." + leaf;
  };
  const FieldSpec* spec = profile_for(ev.room).find_field(ev.field);
  if (!spec) throw ValidationError(path("field") + ": not a field of " + std::string(to_string(ev.room)));
  if (ev.at_ms < 0 || ev.at_ms > sc.duration_ms)
    throw ValidationError(path("at_ms") + ": outside [0, duration_ms]");
  if (ev.hold_ms < 0) throw ValidationError(path("hold_ms") + ": negative");
  if (clamp_to_unit(spec->unit, ev.value) != ev.value)
    throw ValidationError(path("value") + ": outside the unit range for " + ev.field);
}

}  // namespace detail

inline void validate_scenario(const Scenario& sc) {
  if (sc.duration_ms <= 0) throw ValidationError("duration_ms must be > 0");
  if (sc.time_scale <= 0) throw ValidationError("time_scale must be > 0");
  if (sc.sampling_period_ms <= 0) throw ValidationError("sampling_period_ms must be > 0");
  if (sc.batch_size == 0) throw ValidationError("batch_size must be >= 1");
  if (sc.reassembly_timeout_ms <= 0) throw ValidationError("reassembly_timeout_ms must be > 0");
  sc.link.validate();
  sc.energy.validate();
  sc.duty.validate();
  if (sc.battery_capacity_mah <= 0) throw ValidationError("battery_capacity_mah must be > 0");
  if (sc.duty.mode == DutyCycle::Mode::duty_cycled && sc.duty.period_ms != sc.sampling_period_ms)
    throw ValidationError("duty_cycle.period_ms must equal sampling_period_ms");
  if (!std::isfinite(sc.coordinator_position.x) || !std::isfinite(sc.coordinator_position.y))
    throw ValidationError("coordinator.position must be finite");
  for (std::size_t i = 0; i < sc.nodes.size(); ++i) {
    if (!std::isfinite(sc.nodes[i].position.x) || !std::isfinite(sc.nodes[i].position.y))
      throw ValidationError("nodes[" + std::to_string(i) + "].position must be finite");
    std::int64_t period = sc.nodes[i].sampling_period_ms;
    if (period < 0) throw ValidationError("nodes[" + std::to_string(i) + "].sampling_period_ms: negative");
    if (period != 0 && sc.duty.mode == DutyCycle::Mode::duty_cycled && period != sc.duty.period_ms)
      throw ValidationError("nodes[" + std::to_string(i) +
                            "].sampling_period_ms: duty-cycled nodes wake once per duty period");
  }
  if (sc.aggregation.enabled && sc.aggregation.window == 0)
    throw ValidationError("aggregation.window must be >= 1");
  for (std::size_t i = 0; i < sc.events.size(); ++i) detail::validate_event(sc, sc.events[i], i);
  for (const auto& [room, fields] : sc.signals) {
    for (const auto& [field, spec] : fields) {
      (void)spec;
      if (!profile_for(room).find_field(field))
        throw ValidationError("signals." + std::string(to_string(room)) + "." + field +
                              ": not a field of that room");
    }
  }
}

namespace detail {

inline RoomId room_from_json(const nlohmann::json& j, const std::string& path) {
  std::string name = j.get<std::string>();
  auto room = room_from_string(name);
  if (!room) throw ValidationError(path + ": unknown room '" + name + "'");
  return *room;
}

inline Fixed2 fixed_from_json(const nlohmann::json& j, const std::string& path) {
  if (j.is_number_integer()) return Fixed2::from_int(j.get<std::int64_t>());
  if (j.is_number()) return Fixed2::from_double(j.get<double>());
  throw ValidationError(path + ": expected a number");
}

}  // namespace detail

// Builds and validates a Scenario from parsed JSON. Unknown keys are ignored.
inline Scenario scenario_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("scenario root must be a JSON object");
  Scenario sc;
  try {
    sc.name = j.value("name", sc.name);
    sc.seed = j.value("seed", sc.seed);
    sc.duration_ms = j.value("duration_ms", sc.duration_ms);
    sc.time_scale = j.value("time_scale", sc.time_scale);
    sc.sampling_period_ms = j.value("sampling_period_ms", sc.sampling_period_ms);
    sc.batch_size = j.value("batch_size", sc.batch_size);
    sc.reassembly_timeout_ms = j.value("reassembly_timeout_ms", sc.reassembly_timeout_ms);
    sc.archive_series = j.value("archive_series", sc.archive_series);
    sc.battery_capacity_mah = j.value("battery_capacity_mah", sc.battery_capacity_mah);

    if (j.contains("routing_mode")) {
      std::string mode = j.at("routing_mode").get<std::string>();
      if (mode == "tree")
        sc.routing_mode = RoutingMode::tree;
      else if (mode == "mesh_shortest_path")
        sc.routing_mode = RoutingMode::mesh_shortest_path;
      else
        throw ValidationError("routing_mode: expected 'tree' or 'mesh_shortest_path'");
    }
    if (j.contains("coordinator")) {
      auto pos = j.at("coordinator").at("position");
      sc.coordinator_position = {pos.at(0).get<double>(), pos.at(1).get<double>()};
    }
    if (j.contains("link_model")) {
      const auto& l = j.at("link_model");
      sc.link.max_range_m = l.value("max_range_m", sc.link.max_range_m);
      sc.link.reliable_range_m = l.value("reliable_range_m", sc.link.reliable_range_m);
      if (l.contains("latency_ms")) {
        sc.link.latency_lo_ms = l.at("latency_ms").at(0).get<double>();
        sc.link.latency_hi_ms = l.at("latency_ms").at(1).get<double>();
      }
      if (l.contains("extra_hop_latency_ms")) {
        sc.link.extra_hop_lo_ms = l.at("extra_hop_latency_ms").at(0).get<double>();
        sc.link.extra_hop_hi_ms = l.at("extra_hop_latency_ms").at(1).get<double>();
      }
      sc.link.bit_rate_bps = l.value("bit_rate_bps", sc.link.bit_rate_bps);
      sc.link.interference_loss = l.value("interference_loss", sc.link.interference_loss);
      sc.link.max_payload = l.value("max_payload", sc.link.max_payload);
      sc.link.frequency_band = l.value("frequency_band", sc.link.frequency_band);
    }
    if (j.contains("energy")) {
      const auto& e = j.at("energy");
      sc.energy.voltage = e.value("voltage", sc.energy.voltage);
      sc.energy.current_tx_ma = e.value("current_tx_ma", sc.energy.current_tx_ma);
      sc.energy.current_rx_idle_ma = e.value("current_rx_idle_ma", sc.energy.current_rx_idle_ma);
      sc.energy.current_sleep_ma = e.value("current_sleep_ma", sc.energy.current_sleep_ma);
      sc.energy.current_mcu_active_ma =
          e.value("current_mcu_active_ma", sc.energy.current_mcu_active_ma);
    }
    if (j.contains("duty_cycle")) {
      const auto& d = j.at("duty_cycle");
      std::string mode = d.value("mode", std::string("always_on"));
      if (mode == "always_on")
        sc.duty.mode = DutyCycle::Mode::always_on;
      else if (mode == "duty_cycled")
        sc.duty.mode = DutyCycle::Mode::duty_cycled;
      else
        throw ValidationError("duty_cycle.mode: expected 'always_on' or 'duty_cycled'");
      sc.duty.awake_window_ms = d.value("awake_window_ms", sc.duty.awake_window_ms);
      sc.duty.period_ms = d.value("period_ms", sc.duty.period_ms);
    }
    if (j.contains("encryption")) {
      const auto& e = j.at("encryption");
      sc.encryption.enabled = e.value("enabled", false);
      if (sc.encryption.enabled) {
        if (!e.contains("key_hex"))
          throw ValidationError("encryption.key_hex required when encryption is enabled");
        sc.encryption.key = PayloadKey::from_hex(e.at("key_hex").get<std::string>());
      }
    }
    if (j.contains("aggregation")) {
      const auto& a = j.at("aggregation");
      sc.aggregation.enabled = a.value("enabled", true);
      sc.aggregation.window = a.value("window", sc.aggregation.window);
    }
    if (j.contains("nodes")) {
      std::size_t i = 0;
      for (const auto& n : j.at("nodes")) {
        NodePlacement p;
        p.room = detail::room_from_json(n.at("room"), "nodes[" + std::to_string(i) + "].room");
        auto pos = n.at("position");
        p.position = {pos.at(0).get<double>(), pos.at(1).get<double>()};
        p.sampling_period_ms = n.value("sampling_period_ms", 0);
        sc.nodes.push_back(p);
        ++i;
      }
    }
    if (j.contains("signals")) {
      for (const auto& [room_name, fields] : j.at("signals").items()) {
        auto room = room_from_string(room_name);
        if (!room) throw ValidationError("signals: unknown room '" + room_name + "'");
        for (const auto& [field, spec_json] : fields.items()) {
          SignalSpec spec;
          spec.baseline = spec_json.value("baseline", 0.0);
          spec.diurnal_amplitude = spec_json.value("diurnal_amplitude", 0.0);
          spec.noise_stddev = spec_json.value("noise_stddev", 0.0);
          if (spec.noise_stddev < 0)
            throw ValidationError("signals." + room_name + "." + field +
                                  ".noise_stddev: negative");
          sc.signals[*room][field] = spec;
        }
      }
    }
    if (j.contains("events")) {
      std::size_t i = 0;
      for (const auto& e : j.at("events")) {
        std::string path = "events[" + std::to_string(i) + "]";
        TimedEvent ev;
        ev.at_ms = e.at("at_ms").get<std::int64_t>();
        ev.room = detail::room_from_json(e.at("room"), path + ".room");
        ev.field = e.at("field").get<std::string>();
        ev.value = detail::fixed_from_json(e.at("value"), path + ".value");
        ev.hold_ms = e.value("hold_ms", 0);
        sc.events.push_back(std::move(ev));
        ++i;
      }
    }
  } catch (const nlohmann::json::exception& ex) {
    throw ValidationError(std::string("scenario: ") + ex.what());
  }
  validate_scenario(sc);
  return sc;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario file: " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& ex) {
    throw ParseError("scenario JSON parse error: " + std::string(ex.what()));
  }
  return scenario_from_json(j);
}

}  // namespace homewsn
