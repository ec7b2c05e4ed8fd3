// homewsn command line: run simulations, export series, serve the query API,
// summarize run reports, and host the reference mock remote store.
//
//   homewsn simulate --scenario F [--seed N] --out DIR
//   homewsn export --room R --field F --from T0 --to T1 --format csv|json
//   homewsn serve --bind HOST:PORT [--store DIR]
//   homewsn report --run DIR
//   homewsn mock-store --bind HOST:PORT [--store DIR]
//
// WSN_STORE_URL switches record storage to the remote backend.

#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "homewsn/homewsn.hpp"

namespace {

using namespace homewsn;

std::unique_ptr<StorageBackend> open_backend(const std::string& store_dir) {
  const char* url = std::getenv("WSN_STORE_URL");
  if (url && *url) return std::make_unique<RemoteStoreClient>(url);
  return std::make_unique<LocalStore>(store_dir);
}

std::pair<std::string, int> parse_bind(const std::string& bind) {
  auto colon = bind.rfind(':');
  if (colon == std::string::npos)
    throw CLI::ValidationError("--bind", "expected HOST:PORT");
  return {bind.substr(0, colon), std::stoi(bind.substr(colon + 1))};
}

int cmd_simulate(const std::string& scenario_path, std::int64_t seed, const std::string& out_dir) {
  Scenario scenario = load_scenario(scenario_path);
  RunOptions opts;
  opts.out_dir = out_dir;
  if (seed >= 0) opts.seed_override = static_cast<std::uint64_t>(seed);

  auto backend = open_backend(out_dir + "/store");
  RunResult run = run_simulation(scenario, *backend, opts);

  std::printf("scenario       %s (seed %llu)\n", scenario.name.c_str(),
              static_cast<unsigned long long>(opts.seed_override.value_or(scenario.seed)));
  std::printf("frames         %llu sent, %llu delivered\n",
              static_cast<unsigned long long>(run.medium.frames_sent),
              static_cast<unsigned long long>(run.medium.frames_delivered));
  std::printf("records        %llu ingested, %llu stored in %llu batches\n",
              static_cast<unsigned long long>(run.gateway.records),
              static_cast<unsigned long long>(run.records_stored),
              static_cast<unsigned long long>(run.batches));
  std::printf("alerts         %zu (%llu threshold, %llu change)\n", run.alerts.size(),
              static_cast<unsigned long long>(run.gateway.alerts_threshold),
              static_cast<unsigned long long>(run.gateway.alerts_change));
  std::printf("lifetime       %.0f ms\n", run.energy.network_lifetime_ms);
  std::printf("report         %s/report.json\n", out_dir.c_str());
  return 0;
}

int cmd_export(const std::string& store_dir, const std::string& room_name,
               const std::string& field, std::int64_t from_ts, std::int64_t to_ts,
               const std::string& format, const std::string& out_file) {
  auto backend = open_backend(store_dir);
  RoomId room = parse_room(room_name);
  std::string text =
      export_series(*backend, room, field, from_ts, to_ts, parse_export_format(format));
  if (out_file.empty() || out_file == "-") {
    std::fputs(text.c_str(), stdout);
  } else {
    std::ofstream out(out_file);
    if (!out) throw Error("cannot open output file: " + out_file);
    out << text;
    std::printf("wrote %s\n", out_file.c_str());
  }
  return 0;
}

int serve_blocking(StoreHttpServer& server, const std::string& bind, const char* label) {
  auto [host, port] = parse_bind(bind);
  int bound = server.start(host, port);
  std::printf("%s listening on %s:%d (ctrl-c to stop)\n", label, host.c_str(), bound);
  static StoreHttpServer* active = nullptr;
  active = &server;
  std::signal(SIGINT, [](int) {
    if (active) active->request_stop();
  });
  std::signal(SIGTERM, [](int) {
    if (active) active->request_stop();
  });
  server.wait();
  return 0;
}

int cmd_report(const std::string& run_dir) {
  std::ifstream in(run_dir + "/report.json");
  if (!in) throw Error("no report.json under " + run_dir);
  nlohmann::json report = nlohmann::json::parse(in);

  const auto& sc = report.at("scenario");
  const auto& traffic = report.at("traffic");
  const auto& alerts = report.at("alerts");
  const auto& energy = report.at("energy");

  std::printf("scenario   %s  seed=%llu  duration=%lld ms\n",
              sc.at("name").get<std::string>().c_str(),
              static_cast<unsigned long long>(sc.at("seed").get<std::uint64_t>()),
              static_cast<long long>(sc.at("duration_ms").get<std::int64_t>()));
  std::printf("frames     sent=%llu delivered=%llu duplicated=%llu\n",
              static_cast<unsigned long long>(traffic.at("frames_sent").get<std::uint64_t>()),
              static_cast<unsigned long long>(traffic.at("frames_delivered").get<std::uint64_t>()),
              static_cast<unsigned long long>(traffic.at("frames_duplicated").get<std::uint64_t>()));
  for (const auto& [reason, count] : traffic.at("frames_dropped").items())
    std::printf("  dropped  %-14s %llu\n", reason.c_str(),
                static_cast<unsigned long long>(count.get<std::uint64_t>()));
  std::printf("messages   ok=%llu failed=%llu malformed=%llu\n",
              static_cast<unsigned long long>(traffic.at("messages_reassembled").get<std::uint64_t>()),
              static_cast<unsigned long long>(traffic.at("messages_failed").get<std::uint64_t>()),
              static_cast<unsigned long long>(traffic.at("messages_malformed").get<std::uint64_t>()));
  std::printf("records    ingested=%llu stored=%llu batches=%llu\n",
              static_cast<unsigned long long>(traffic.at("records_ingested").get<std::uint64_t>()),
              static_cast<unsigned long long>(traffic.at("records_stored").get<std::uint64_t>()),
              static_cast<unsigned long long>(traffic.at("batches").get<std::uint64_t>()));
  std::printf("alerts     total=%llu threshold=%llu change=%llu\n",
              static_cast<unsigned long long>(alerts.at("total").get<std::uint64_t>()),
              static_cast<unsigned long long>(alerts.at("threshold_rule").get<std::uint64_t>()),
              static_cast<unsigned long long>(alerts.at("change_detected").get<std::uint64_t>()));
  std::printf("lifetime   %.0f ms\n", energy.at("network_lifetime_ms").get<double>());
  for (const auto& n : energy.at("per_node")) {
    std::printf("  node %-3u %-15s %9.4f mAh  %8.3f J%s\n",
                n.at("address").get<unsigned>(), n.at("room").get<std::string>().c_str(),
                n.at("consumed_mah").get<double>(), n.at("joules").get<double>(),
                n.at("death_at_ms").is_null() ? "" : "  (died)");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Zigbee-style home monitoring WSN simulator and data pipeline"};
  app.require_subcommand(1);

  // simulate
  std::string scenario_path;
  std::string out_dir = "out";
  std::int64_t seed = -1;
  auto* simulate = app.add_subcommand("simulate", "Run a scenario end to end");
  simulate->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
  simulate->add_option("--seed", seed, "Override the scenario seed");
  simulate->add_option("--out", out_dir, "Output directory (report, store, archive)");

  // export
  std::string store_dir = "out/store";
  std::string room_name, field, format = "csv", out_file;
  std::int64_t from_ts = 0, to_ts = std::numeric_limits<std::int64_t>::max();
  auto* export_cmd = app.add_subcommand("export", "Export a room/field time series");
  export_cmd->add_option("--room", room_name, "Room name")->required();
  export_cmd->add_option("--field", field, "Field name")->required();
  export_cmd->add_option("--from", from_ts, "Range start (ms, inclusive)");
  export_cmd->add_option("--to", to_ts, "Range end (ms, inclusive)");
  export_cmd->add_option("--format", format, "csv or json");
  export_cmd->add_option("--store", store_dir, "Record store directory");
  export_cmd->add_option("--out", out_file, "Output file ('-' = stdout)");

  // serve
  std::string bind_addr = "127.0.0.1:8080";
  std::string serve_store = "out/store";
  auto* serve = app.add_subcommand("serve", "Read-only HTTP query endpoint");
  serve->add_option("--bind", bind_addr, "HOST:PORT");
  serve->add_option("--store", serve_store, "Record store directory");

  // report
  std::string run_dir = "out";
  auto* report = app.add_subcommand("report", "Summarize a completed run");
  report->add_option("--run", run_dir, "Run output directory");

  // mock-store
  std::string mock_bind = "127.0.0.1:9090";
  std::string mock_dir;
  auto* mock = app.add_subcommand("mock-store", "Reference remote document store");
  mock->add_option("--bind", mock_bind, "HOST:PORT");
  mock->add_option("--store", mock_dir, "Backing directory (default: in-memory)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) return cmd_simulate(scenario_path, seed, out_dir);
    if (export_cmd->parsed())
      return cmd_export(store_dir, room_name, field, from_ts, to_ts, format, out_file);
    if (serve->parsed()) {
      LocalStore store(serve_store);
      StoreHttpServer server(store, /*enable_writes=*/false);
      return serve_blocking(server, bind_addr, "query endpoint");
    }
    if (report->parsed()) return cmd_report(run_dir);
    if (mock->parsed()) {
      std::unique_ptr<StorageBackend> store;
      if (mock_dir.empty())
        store = std::make_unique<MemoryStore>();
      else
        store = std::make_unique<LocalStore>(mock_dir);
      StoreHttpServer server(*store, /*enable_writes=*/true);
      return serve_blocking(server, mock_bind, "mock store");
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
