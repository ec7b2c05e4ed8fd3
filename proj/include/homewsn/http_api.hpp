// HTTP surface over a StorageBackend.
//
// Read-only query endpoints (mirrors the room/field/series CLI):
//   GET /rooms                      -> ["kitchen", ...]
//   GET /rooms/{room}/fields        -> ["flame", "gas"]
//   GET /series?room&field&from&to  -> [{"timestamp":t,"value":v}, ...]
// Responses reflect store state at request time.
//
// Remote document-store protocol (write mode, used by RemoteStoreClient and
// the bundled mock server) adds:
//   POST /batches  {"batch_id":"...","records":[...]}  -> {"inserted":n}
//   GET  /records?room&field&from&to  -> full record objects
#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "homewsn/store.hpp"

namespace homewsn {

namespace detail {

inline void reply_json(httplib::Response& res, int status, const nlohmann::ordered_json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

inline void reply_error(httplib::Response& res, int status, const std::string& code) {
  reply_json(res, status, nlohmann::ordered_json{{"error", code}});
}

struct SeriesParams {
  RoomId room;
  std::string field;
  std::int64_t from_ts;
  std::int64_t to_ts;
};

inline std::optional<SeriesParams> parse_series_params(const httplib::Request& req,
                                                       httplib::Response& res) {
  for (const char* p : {"room", "field", "from", "to"}) {
    if (!req.has_param(p)) {
      reply_error(res, 400, std::string("missing parameter: ") + p);
      return std::nullopt;
    }
  }
  SeriesParams out;
  out.field = req.get_param_value("field");
  auto room = room_from_string(req.get_param_value("room"));
  if (!room) {
    reply_error(res, 404, "unknown_room");
    return std::nullopt;
  }
  out.room = *room;
  try {
    out.from_ts = std::stoll(req.get_param_value("from"));
    out.to_ts = std::stoll(req.get_param_value("to"));
  } catch (const std::exception&) {
    reply_error(res, 400, "from/to must be integer milliseconds");
    return std::nullopt;
  }
  if (out.from_ts > out.to_ts) {
    reply_error(res, 400, "from must be <= to");
    return std::nullopt;
  }
  return out;
}

}  // namespace detail

// Serves a backend over HTTP on a background thread. Write routes are only
// mounted for the remote-store role; the public query endpoint stays
// read-only.
class StoreHttpServer {
 public:
  explicit StoreHttpServer(StorageBackend& backend, bool enable_writes = false)
      : backend_(backend) {
    mount_read_routes();
    if (enable_writes) mount_write_routes();
  }

  ~StoreHttpServer() { stop(); }

  // Binds and starts serving; port 0 picks a free port. Returns the bound port.
  int start(const std::string& host, int port = 0) {
    int bound = port == 0 ? server_.bind_to_any_port(host)
                          : (server_.bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw StoreUnavailable("cannot bind " + host + ":" + std::to_string(port));
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return bound;
  }

  void stop() {
    if (thread_.joinable()) {
      server_.stop();
      thread_.join();
    }
  }

  // Signals the listener to exit without joining (usable from a signal
  // handler); pair with wait().
  void request_stop() { server_.stop(); }

  // Blocks until the listener thread exits.
  void wait() {
    if (thread_.joinable()) thread_.join();
  }

  // Test hook: the next `n` batch inserts answer `status` instead.
  void fail_next_inserts(int n, int status = 503) {
    fail_inserts_ = n;
    fail_status_ = status;
  }

  std::uint64_t insert_requests() const { return insert_requests_; }

 private:
  void mount_read_routes() {
    server_.Get("/rooms", [this](const httplib::Request&, httplib::Response& res) {
      detail::reply_json(res, 200, nlohmann::ordered_json(backend_.list_rooms()));
    });

    server_.Get(R"(/rooms/([^/]+)/fields)",
                [this](const httplib::Request& req, httplib::Response& res) {
                  auto room = room_from_string(req.matches[1].str());
                  if (!room) {
                    detail::reply_error(res, 404, "unknown_room");
                    return;
                  }
                  detail::reply_json(res, 200, nlohmann::ordered_json(backend_.list_fields(*room)));
                });

    server_.Get("/series", [this](const httplib::Request& req, httplib::Response& res) {
      auto params = detail::parse_series_params(req, res);
      if (!params) return;
      try {
        auto records = backend_.query(params->room, params->field, params->from_ts, params->to_ts);
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto& r : records)
          arr.push_back({{"timestamp", r.timestamp_ms}, {"value", r.value.to_double()}});
        detail::reply_json(res, 200, arr);
      } catch (const UnknownField&) {
        detail::reply_error(res, 404, "unknown_field");
      }
    });
  }

  void mount_write_routes() {
    server_.Post("/batches", [this](const httplib::Request& req, httplib::Response& res) {
      ++insert_requests_;
      if (fail_inserts_ > 0) {
        --fail_inserts_;
        detail::reply_error(res, fail_status_, "injected_failure");
        return;
      }
      try {
        auto body = nlohmann::json::parse(req.body);
        std::string batch_id = body.at("batch_id").get<std::string>();
        std::vector<SensorRecord> records;
        for (const auto& j : body.at("records")) records.push_back(record_from_json(j));
        std::size_t inserted = backend_.insert_batch(records, batch_id);
        detail::reply_json(res, 200, nlohmann::ordered_json{{"inserted", inserted}});
      } catch (const Error& e) {
        detail::reply_error(res, 400, e.what());
      } catch (const nlohmann::json::exception&) {
        detail::reply_error(res, 400, "malformed batch body");
      }
    });

    server_.Get("/records", [this](const httplib::Request& req, httplib::Response& res) {
      auto params = detail::parse_series_params(req, res);
      if (!params) return;
      try {
        auto records = backend_.query(params->room, params->field, params->from_ts, params->to_ts);
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto& r : records) arr.push_back(nlohmann::ordered_json::parse(record_to_jsonl(r)));
        detail::reply_json(res, 200, arr);
      } catch (const UnknownField&) {
        detail::reply_error(res, 404, "unknown_field");
      }
    });
  }

  StorageBackend& backend_;
  httplib::Server server_;
  std::thread thread_;
  std::atomic<int> fail_inserts_{0};
  int fail_status_ = 503;
  std::atomic<std::uint64_t> insert_requests_{0};
};

}  // namespace homewsn
