// Battery accounting with state-based current draw, duty cycling, and the
// first-node-death network lifetime metric.
#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "homewsn/errors.hpp"
#include "homewsn/frame.hpp"
#include "homewsn/rooms.hpp"

namespace homewsn {

enum class RadioState : std::uint8_t { tx, rx_idle, sleep, mcu_active };

inline std::string_view to_string(RadioState s) {
  switch (s) {
    case RadioState::tx: return "tx";
    case RadioState::rx_idle: return "rx_idle";
    case RadioState::sleep: return "sleep";
    case RadioState::mcu_active: return "mcu_active";
  }
  return "?";
}

// Defaults are representative of the XBee S2C family; all configurable.
struct EnergyModel {
  double voltage = 3.3;
  double current_tx_ma = 45.0;
  double current_rx_idle_ma = 31.0;
  double current_sleep_ma = 0.001;
  double current_mcu_active_ma = 10.0;

  double current_ma(RadioState s) const {
    switch (s) {
      case RadioState::tx: return current_tx_ma;
      case RadioState::rx_idle: return current_rx_idle_ma;
      case RadioState::sleep: return current_sleep_ma;
      case RadioState::mcu_active: return current_mcu_active_ma;
    }
    return 0;
  }

  void validate() const {
    if (!(voltage > 0)) throw ValidationError("energy: voltage must be > 0");
    if (current_tx_ma < 0 || current_rx_idle_ma < 0 || current_sleep_ma < 0 ||
        current_mcu_active_ma < 0)
      throw ValidationError("energy: currents must be >= 0");
  }
};

struct EnergySegment {
  RadioState state = RadioState::rx_idle;
  double duration_ms = 0;
};

// mAh consumed by one segment.
inline double charge_mah(RadioState state, double duration_ms, const EnergyModel& model) {
  return model.current_ma(state) * duration_ms / 3'600'000.0;
}

// Independent recomputation over a history; pairs with BatteryState's running
// total for the conservation check.
inline double consumed_from_history(std::span<const EnergySegment> history,
                                    const EnergyModel& model) {
  double total = 0;
  for (const auto& seg : history) total += charge_mah(seg.state, seg.duration_ms, model);
  return total;
}

inline double joules_from_mah(double mah, double voltage) { return mah * 3600.0 * voltage / 1000.0; }

class BatteryState {
 public:
  explicit BatteryState(double capacity_mah) : capacity_(capacity_mah) {}

  double capacity_mah() const { return capacity_; }
  double consumed_mah() const { return consumed_; }
  double remaining_mah() const { return capacity_ - consumed_; }
  bool dead() const { return consumed_ >= capacity_; }
  const std::vector<EnergySegment>& history() const { return history_; }

  // Draws current for `duration_ms` in `state`. Throws NodeDead when the
  // battery is already exhausted. When this segment exhausts it, returns the
  // offset (ms into the segment) at which death occurred; consumption clamps
  // at capacity.
  std::optional<double> account(RadioState state, double duration_ms, const EnergyModel& model) {
    if (dead()) throw NodeDead("battery exhausted");
    if (duration_ms < 0) throw ValidationError("account: negative duration");
    if (duration_ms == 0) return std::nullopt;
    double delta = charge_mah(state, duration_ms, model);
    history_.push_back({state, duration_ms});
    if (consumed_ + delta >= capacity_) {
      double remaining = capacity_ - consumed_;
      consumed_ = capacity_;
      double death_offset = delta > 0 ? duration_ms * (remaining / delta) : duration_ms;
      return death_offset;
    }
    consumed_ += delta;
    return std::nullopt;
  }

 private:
  double capacity_;
  double consumed_ = 0;
  std::vector<EnergySegment> history_;
};

struct DutyCycle {
  enum class Mode : std::uint8_t { always_on, duty_cycled };
  Mode mode = Mode::always_on;
  std::int64_t awake_window_ms = 100;
  std::int64_t period_ms = 1000;

  double awake_fraction() const {
    if (mode == Mode::always_on) return 1.0;
    return static_cast<double>(awake_window_ms) / static_cast<double>(period_ms);
  }

  void validate() const {
    if (!(awake_window_ms > 0) || awake_window_ms > period_ms)
      throw ValidationError("duty_cycle: require 0 < awake_window <= period");
  }
};

inline std::string_view to_string(DutyCycle::Mode m) {
  return m == DutyCycle::Mode::always_on ? "always_on" : "duty_cycled";
}

// Closed-form average draw for a node that is awake (radio idle + MCU) for the
// duty window, asleep otherwise, plus tx_ms_per_period of transmit time
// replacing idle time inside the window.
inline double average_current_ma(const DutyCycle& duty, const EnergyModel& model,
                                 double tx_ms_per_period = 0) {
  double period = static_cast<double>(duty.period_ms);
  double awake = duty.mode == DutyCycle::Mode::always_on
                     ? period
                     : static_cast<double>(duty.awake_window_ms);
  double tx = std::min(tx_ms_per_period, awake);
  double charge = tx * model.current_tx_ma + (awake - tx) * model.current_rx_idle_ma +
                  awake * model.current_mcu_active_ma +
                  (period - awake) * model.current_sleep_ma;
  return charge / period;
}

struct NodeEnergyReport {
  NodeAddress address = 0;
  RoomId room = RoomId::living_room;
  double consumed_mah = 0;
  double joules = 0;
  double tx_ms = 0;
  double awake_ms = 0;
  double sleep_ms = 0;
  std::optional<double> death_at_ms;
};

struct EnergyReport {
  std::vector<NodeEnergyReport> per_node;  // sorted by address
  double network_lifetime_ms = 0;          // first node death, or run duration
  std::optional<NodeAddress> first_death_address;
};

}  // namespace homewsn
