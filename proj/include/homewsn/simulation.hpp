// End-to-end deterministic run: scenario-driven node ticks, frame transport
// across the medium, gateway ingest into a storage backend, per-node battery
// accounting, and a reproducible JSON run report. Identical (scenario, seed)
// inputs produce byte-identical reports and record files.
#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include <json.hpp>

#include "homewsn/aggregate.hpp"
#include "homewsn/compress.hpp"
#include "homewsn/energy.hpp"
#include "homewsn/gateway.hpp"
#include "homewsn/medium.hpp"
#include "homewsn/node.hpp"
#include "homewsn/scenario.hpp"
#include "homewsn/store.hpp"

namespace homewsn {

struct RunOptions {
  std::filesystem::path out_dir;  // empty: skip report/aggregate/archive files
  std::optional<std::uint64_t> seed_override;
  std::optional<DutyCycle> duty_override;
  std::optional<double> capacity_override;
};

struct RunResult {
  MediumStats medium;
  GatewayStats gateway;
  EnergyReport energy;
  std::vector<Alert> alerts;
  std::uint64_t records_stored = 0;
  std::uint64_t batches = 0;
  std::uint64_t actuator_events = 0;
  std::map<NodeAddress, std::vector<ActuatorEvent>> node_events;
  nlohmann::ordered_json report;
};

namespace detail {

struct PendingDelivery {
  double at_ms;
  std::uint64_t order;  // stable tie-break
  Frame frame;
};

struct DeliveryLater {
  bool operator()(const PendingDelivery& a, const PendingDelivery& b) const {
    return a.at_ms > b.at_ms || (a.at_ms == b.at_ms && a.order > b.order);
  }
};

struct SimNode {
  SensorNode node;
  BatteryState battery;
  RoomId room;
  std::int64_t period_ms = 1000;
  std::int64_t next_tick_ms = 0;
  double pending_tx_ms = 0;  // airtime spent since this node's last window close
  double tx_ms_total = 0;
  double awake_ms_total = 0;
  double sleep_ms_total = 0;
  std::optional<double> death_at_ms;
};

inline nlohmann::ordered_json position_json(Position p) {
  return nlohmann::ordered_json::array({p.x, p.y});
}

}  // namespace detail

inline nlohmann::ordered_json build_report(const Scenario& sc, const RunResult& run,
                                           const Medium& medium,
                                           const std::vector<detail::SimNode>& nodes,
                                           std::uint64_t aggregate_windows) {
  nlohmann::ordered_json report;

  nlohmann::ordered_json scenario;
  scenario["name"] = sc.name;
  scenario["seed"] = sc.seed;
  scenario["duration_ms"] = sc.duration_ms;
  scenario["sampling_period_ms"] = sc.sampling_period_ms;
  scenario["routing_mode"] =
      sc.routing_mode == RoutingMode::tree ? "tree" : "mesh_shortest_path";
  scenario["encryption"] = sc.encryption.enabled;
  scenario["duty_cycle"] = {{"mode", std::string(to_string(sc.duty.mode))},
                            {"awake_window_ms", sc.duty.awake_window_ms},
                            {"period_ms", sc.duty.period_ms}};
  scenario["link_model"] = {{"max_range_m", sc.link.max_range_m},
                            {"reliable_range_m", sc.link.reliable_range_m},
                            {"latency_ms", {sc.link.latency_lo_ms, sc.link.latency_hi_ms}},
                            {"bit_rate_bps", sc.link.bit_rate_bps},
                            {"interference_loss", sc.link.interference_loss},
                            {"max_payload", sc.link.max_payload},
                            {"frequency_band", sc.link.frequency_band}};
  scenario["battery_capacity_mah"] = sc.battery_capacity_mah;
  report["scenario"] = std::move(scenario);

  nlohmann::ordered_json network;
  network["coordinator"] = {{"address", kCoordinatorAddress},
                            {"position", detail::position_json(sc.coordinator_position)}};
  nlohmann::ordered_json node_list = nlohmann::ordered_json::array();
  for (const auto& n : nodes) {
    const Topology& topo = medium.topology();
    nlohmann::ordered_json entry;
    entry["address"] = n.node.address();
    entry["room"] = std::string(to_string(n.room));
    entry["position"] = detail::position_json(topo.position(n.node.address()));
    entry["parent"] = *topo.parent(n.node.address());
    node_list.push_back(std::move(entry));
  }
  network["nodes"] = std::move(node_list);
  report["network"] = std::move(network);

  nlohmann::ordered_json traffic;
  traffic["frames_sent"] = run.medium.frames_sent;
  traffic["frames_delivered"] = run.medium.frames_delivered;
  nlohmann::ordered_json drops;
  for (const auto& [reason, count] : run.medium.drops)
    drops[std::string(to_string(reason))] = count;
  traffic["frames_dropped"] = std::move(drops);
  traffic["delivered_bits"] = run.medium.delivered_bits;
  traffic["frames_duplicated"] = run.gateway.frames_duplicated;
  traffic["decrypt_failures"] = run.gateway.decrypt_failures;
  traffic["messages_reassembled"] = run.gateway.messages_reassembled;
  traffic["messages_failed"] = run.gateway.messages_failed;
  traffic["messages_malformed"] = run.gateway.messages_malformed;
  traffic["records_ingested"] = run.gateway.records;
  traffic["records_stored"] = run.records_stored;
  traffic["batches"] = run.batches;
  traffic["actuator_events"] = run.actuator_events;
  report["traffic"] = std::move(traffic);

  nlohmann::ordered_json alerts;
  alerts["total"] = run.alerts.size();
  alerts["threshold_rule"] = run.gateway.alerts_threshold;
  alerts["change_detected"] = run.gateway.alerts_change;
  nlohmann::ordered_json alert_list = nlohmann::ordered_json::array();
  for (const auto& a : run.alerts) {
    alert_list.push_back({{"kind", std::string(to_string(a.kind))},
                          {"room", std::string(to_string(a.room))},
                          {"field", a.field},
                          {"value", a.value.to_double()},
                          {"timestamp_ms", a.timestamp_ms}});
  }
  alerts["events"] = std::move(alert_list);
  report["alerts"] = std::move(alerts);

  nlohmann::ordered_json energy;
  energy["network_lifetime_ms"] = run.energy.network_lifetime_ms;
  if (run.energy.first_death_address)
    energy["first_death_address"] = *run.energy.first_death_address;
  else
    energy["first_death_address"] = nullptr;
  nlohmann::ordered_json per_node = nlohmann::ordered_json::array();
  for (const auto& n : run.energy.per_node) {
    nlohmann::ordered_json entry;
    entry["address"] = n.address;
    entry["room"] = std::string(to_string(n.room));
    entry["consumed_mah"] = n.consumed_mah;
    entry["joules"] = n.joules;
    entry["tx_ms"] = n.tx_ms;
    entry["awake_ms"] = n.awake_ms;
    entry["sleep_ms"] = n.sleep_ms;
    entry["death_at_ms"] = n.death_at_ms ? nlohmann::ordered_json(*n.death_at_ms)
                                         : nlohmann::ordered_json(nullptr);
    per_node.push_back(std::move(entry));
  }
  energy["per_node"] = std::move(per_node);
  report["energy"] = std::move(energy);

  report["aggregation"] = {{"enabled", sc.aggregation.enabled},
                           {"window", sc.aggregation.window},
                           {"windows_written", aggregate_windows}};
  return report;
}

inline RunResult run_simulation(const Scenario& scenario, StorageBackend& store,
                                const RunOptions& opts = {}) {
  Scenario sc = scenario;
  if (opts.seed_override) sc.seed = *opts.seed_override;
  if (opts.duty_override) sc.duty = *opts.duty_override;
  if (opts.capacity_override) sc.battery_capacity_mah = *opts.capacity_override;
  validate_scenario(sc);

  Medium medium(sc.link, sc.routing_mode, sc.seed, sc.coordinator_position);
  Gateway gateway(
      GatewayConfig{sc.reassembly_timeout_ms, sc.encryption.enabled, sc.encryption.key});

  std::vector<detail::SimNode> nodes;
  nodes.reserve(sc.nodes.size());
  for (const auto& placement : sc.nodes) {
    NodeAddress addr = medium.topology().join(placement.position);
    NodeConfig config;
    config.address = addr;
    config.room = placement.room;
    config.max_payload = sc.link.max_payload;
    config.encrypt = sc.encryption.enabled;
    config.key = sc.encryption.key;
    detail::SimNode sim_node{SensorNode(config), BatteryState(sc.battery_capacity_mah),
                             placement.room,     sc.sampling_period_ms,
                             0,                  0,
                             0,                  0,
                             0,                  std::nullopt};
    if (placement.sampling_period_ms > 0) sim_node.period_ms = placement.sampling_period_ms;
    nodes.push_back(std::move(sim_node));
  }

  RunResult run;
  std::priority_queue<detail::PendingDelivery, std::vector<detail::PendingDelivery>,
                      detail::DeliveryLater>
      deliveries;
  std::uint64_t delivery_order = 0;

  std::vector<SensorRecord> all_records;
  std::vector<SensorRecord> pending_batch;
  std::uint64_t batch_counter = 0;

  auto flush_batch = [&](bool flush_all) {
    while (pending_batch.size() >= sc.batch_size ||
           (flush_all && !pending_batch.empty())) {
      std::size_t n = std::min(pending_batch.size(), sc.batch_size);
      std::vector<SensorRecord> batch(pending_batch.begin(),
                                      pending_batch.begin() + static_cast<std::ptrdiff_t>(n));
      pending_batch.erase(pending_batch.begin(),
                          pending_batch.begin() + static_cast<std::ptrdiff_t>(n));
      char id[32];
      std::snprintf(id, sizeof(id), "b-%06llu",
                    static_cast<unsigned long long>(batch_counter++));
      run.records_stored += store.insert_batch(batch, id);
      ++run.batches;
    }
  };

  auto accept_records = [&](std::vector<SensorRecord>&& records) {
    for (auto& r : records) {
      all_records.push_back(r);
      pending_batch.push_back(std::move(r));
    }
    flush_batch(false);
  };

  auto deliver_until = [&](double limit_ms) {
    while (!deliveries.empty() && deliveries.top().at_ms <= limit_ms) {
      detail::PendingDelivery d = deliveries.top();
      deliveries.pop();
      accept_records(gateway.on_frame(d.frame, d.at_ms));
    }
  };

  std::map<NodeAddress, detail::SimNode*> by_address;
  for (auto& n : nodes) by_address[n.node.address()] = &n;

  // Battery accounting over one sampling window [t, t + period): tx replaces
  // idle time inside the awake window; the MCU draws alongside the radio
  // while awake. Death within a window is located by charge fraction
  // (uniform-draw assumption).
  auto account_window = [&](detail::SimNode& sim_node, std::int64_t t) {
    double period = static_cast<double>(sim_node.period_ms);
    double awake = sc.duty.mode == DutyCycle::Mode::always_on
                       ? period
                       : static_cast<double>(sc.duty.awake_window_ms);
    double tx = std::min(sim_node.pending_tx_ms, awake);
    sim_node.pending_tx_ms = 0;
    double idle = awake - tx;
    double sleep = period - awake;

    double charge = charge_mah(RadioState::tx, tx, sc.energy) +
                    charge_mah(RadioState::rx_idle, idle, sc.energy) +
                    charge_mah(RadioState::mcu_active, awake, sc.energy) +
                    charge_mah(RadioState::sleep, sleep, sc.energy);
    bool dies = charge > 0 && sim_node.battery.remaining_mah() <= charge;
    if (dies) {
      sim_node.death_at_ms =
          static_cast<double>(t) + period * (sim_node.battery.remaining_mah() / charge);
    }

    auto account = [&](RadioState state, double ms) {
      if (ms <= 0 || sim_node.battery.dead()) return;
      sim_node.battery.account(state, ms, sc.energy);
    };
    account(RadioState::tx, tx);
    account(RadioState::rx_idle, idle);
    account(RadioState::mcu_active, awake);
    account(RadioState::sleep, sleep);

    sim_node.tx_ms_total += tx;
    sim_node.awake_ms_total += awake;
    sim_node.sleep_ms_total += sleep;

    if (dies) medium.topology().set_down(sim_node.node.address(), true);
  };

  // Per-node tick schedule, earliest first (ties resolved by address).
  while (true) {
    detail::SimNode* due = nullptr;
    for (auto& sim_node : nodes) {
      if (sim_node.battery.dead() || sim_node.next_tick_ms >= sc.duration_ms) continue;
      if (!due || sim_node.next_tick_ms < due->next_tick_ms) due = &sim_node;
    }
    if (!due) break;
    std::int64_t t = due->next_tick_ms;

    deliver_until(static_cast<double>(t));
    gateway.poll(static_cast<double>(t));
    accept_records(gateway.take_overflow());

    RoomId room = due->room;
    EnvFn env = [&](const std::string& field) { return env_at(sc, room, field, t); };
    TickResult res = due->node.tick(env, t);
    run.actuator_events += res.events.size();
    if (!res.events.empty()) {
      auto& log = run.node_events[due->node.address()];
      log.insert(log.end(), res.events.begin(), res.events.end());
    }
    for (const Frame& frame : res.frames) {
      DeliveryOutcome outcome = medium.transmit(frame, static_cast<double>(t));
      for (const TxShare& share : outcome.tx_shares) {
        auto it = by_address.find(share.node);
        if (it != by_address.end()) it->second->pending_tx_ms += share.tx_ms;
      }
      if (outcome.delivered)
        deliveries.push(detail::PendingDelivery{outcome.at_ms, delivery_order++, frame});
    }

    account_window(*due, t);
    due->next_tick_ms += due->period_ms;
  }

  deliver_until(static_cast<double>(sc.duration_ms));
  gateway.poll(static_cast<double>(sc.duration_ms));
  accept_records(gateway.take_overflow());
  flush_batch(true);

  // Energy report and first-node-death lifetime.
  run.energy.network_lifetime_ms = static_cast<double>(sc.duration_ms);
  for (const auto& sim_node : nodes) {
    NodeEnergyReport n;
    n.address = sim_node.node.address();
    n.room = sim_node.room;
    n.consumed_mah = sim_node.battery.consumed_mah();
    n.joules = joules_from_mah(n.consumed_mah, sc.energy.voltage);
    n.tx_ms = sim_node.tx_ms_total;
    n.awake_ms = sim_node.awake_ms_total;
    n.sleep_ms = sim_node.sleep_ms_total;
    n.death_at_ms = sim_node.death_at_ms;
    if (sim_node.death_at_ms && *sim_node.death_at_ms < run.energy.network_lifetime_ms) {
      run.energy.network_lifetime_ms = *sim_node.death_at_ms;
      run.energy.first_death_address = n.address;
    }
    run.energy.per_node.push_back(std::move(n));
  }

  run.medium = medium.stats();
  run.gateway = gateway.stats();
  run.alerts = gateway.alerts();

  // Aggregation (gateway-side) and the compressed series archive.
  std::uint64_t aggregate_windows = 0;
  nlohmann::ordered_json aggregates_out = nlohmann::ordered_json::array();
  std::map<std::pair<RoomId, std::string>, std::vector<SensorRecord>> by_series;
  for (const auto& r : all_records) by_series[{r.room, r.field}].push_back(r);

  if (sc.aggregation.enabled) {
    for (const auto& [key, records] : by_series) {
      std::vector<TimedValue> series;
      series.reserve(records.size());
      for (const auto& r : records) series.push_back({r.timestamp_ms, r.value});
      for (const auto& w : aggregate(series, sc.aggregation.window)) {
        nlohmann::ordered_json entry;
        entry["room"] = std::string(to_string(key.first));
        entry["field"] = key.second;
        entry["count"] = w.count;
        entry["min"] = w.min.to_double();
        entry["max"] = w.max.to_double();
        entry["mean"] = w.mean;
        entry["first_ts_ms"] = w.first_ts_ms;
        entry["last_ts_ms"] = w.last_ts_ms;
        aggregates_out.push_back(std::move(entry));
        ++aggregate_windows;
      }
    }
  }

  run.report = build_report(sc, run, medium, nodes, aggregate_windows);

  if (!opts.out_dir.empty()) {
    std::filesystem::create_directories(opts.out_dir);
    {
      std::ofstream out(opts.out_dir / "report.json");
      out << run.report.dump(2) << '\n';
    }
    if (sc.aggregation.enabled) {
      std::ofstream out(opts.out_dir / "aggregates.jsonl");
      for (const auto& entry : aggregates_out) out << entry.dump() << '\n';
    }
    if (sc.archive_series) {
      std::filesystem::path archive_dir = opts.out_dir / "archive";
      std::filesystem::create_directories(archive_dir);
      nlohmann::ordered_json index;
      for (const auto& [key, records] : by_series) {
        std::vector<Fixed2> values;
        values.reserve(records.size());
        for (const auto& r : records) values.push_back(r.value);
        std::vector<std::uint8_t> bytes = compress_series(values);
        std::string name =
            std::string(to_string(key.first)) + "." + key.second + ".hwsc";
        std::ofstream out(archive_dir / name, std::ios::binary);
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
        index[name] = {{"count", records.size()},
                       {"first_ts_ms", records.empty() ? 0 : records.front().timestamp_ms},
                       {"last_ts_ms", records.empty() ? 0 : records.back().timestamp_ms},
                       {"bytes", bytes.size()}};
      }
      std::ofstream out(archive_dir / "index.json");
      out << index.dump(2) << '\n';
    }
  }
  return run;
}

// Network lifetime for a duty-cycle configuration; runs the full simulation
// and reports the first node death (or the duration when none).
inline double simulate_lifetime(const Scenario& scenario, const DutyCycle& duty,
                                std::optional<double> capacity_override = std::nullopt) {
  MemoryStore store;
  RunOptions opts;
  opts.duty_override = duty;
  opts.capacity_override = capacity_override;
  return run_simulation(scenario, store, opts).energy.network_lifetime_ms;
}

}  // namespace homewsn
