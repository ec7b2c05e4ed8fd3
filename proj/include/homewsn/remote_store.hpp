// StorageBackend client for the remote document-store protocol (POST /batches,
// GET /records|/rooms). Retries transport failures and 5xx responses with
// exponential backoff, then raises StoreUnavailable so the caller can retain
// the batch.
#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "homewsn/store.hpp"

namespace homewsn {

struct RetryPolicy {
  int max_retries = 3;       // attempts = max_retries + 1
  int backoff_base_ms = 100;
  double multiplier = 2.0;
};

class RemoteStoreClient : public StorageBackend {
 public:
  using SleepFn = std::function<void(int ms)>;

  explicit RemoteStoreClient(std::string base_url, RetryPolicy policy = {},
                             int timeout_ms = 5000,
                             SleepFn sleep = [](int ms) {
                               std::this_thread::sleep_for(std::chrono::milliseconds(ms));
                             })
      : base_url_(std::move(base_url)), policy_(policy), timeout_ms_(timeout_ms),
        sleep_(std::move(sleep)) {}

  const std::vector<int>& backoff_delays() const { return backoff_delays_; }

  std::size_t insert_batch(const std::vector<SensorRecord>& records,
                           const std::string& batch_id) override {
    nlohmann::ordered_json body;
    body["batch_id"] = batch_id;
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : records) arr.push_back(nlohmann::ordered_json::parse(record_to_jsonl(r)));
    body["records"] = std::move(arr);
    std::string payload = body.dump();

    auto response = with_retries([&](httplib::Client& cli) {
      return cli.Post("/batches", payload, "application/json");
    });
    return nlohmann::json::parse(response.body).at("inserted").get<std::size_t>();
  }

  std::vector<SensorRecord> query(RoomId room, const std::string& field, std::int64_t from_ts,
                                  std::int64_t to_ts) override {
    httplib::Params params{{"room", std::string(to_string(room))},
                           {"field", field},
                           {"from", std::to_string(from_ts)},
                           {"to", std::to_string(to_ts)}};
    auto response = with_retries([&](httplib::Client& cli) {
      return cli.Get("/records", params, httplib::Headers{});
    });
    std::vector<SensorRecord> out;
    for (const auto& j : nlohmann::json::parse(response.body)) out.push_back(record_from_json(j));
    return out;
  }

  std::vector<std::string> list_rooms() override {
    auto response = with_retries([&](httplib::Client& cli) { return cli.Get("/rooms"); });
    return nlohmann::json::parse(response.body).get<std::vector<std::string>>();
  }

  std::vector<std::string> list_fields(RoomId room) override {
    std::string path = "/rooms/" + std::string(to_string(room)) + "/fields";
    auto response = with_retries([&](httplib::Client& cli) { return cli.Get(path); });
    return nlohmann::json::parse(response.body).get<std::vector<std::string>>();
  }

 private:
  template <typename Call>
  httplib::Response with_retries(const Call& call) {
    httplib::Client cli(base_url_);
    cli.set_connection_timeout(std::chrono::milliseconds(timeout_ms_));
    cli.set_read_timeout(std::chrono::milliseconds(timeout_ms_));

    int delay = policy_.backoff_base_ms;
    for (int attempt = 0;; ++attempt) {
      httplib::Result result = call(cli);
      if (result && result->status < 500) {
        if (result->status == 404) raise_not_found(result->body);
        if (result->status >= 400)
          throw ValidationError("remote store rejected request: " + result->body);
        return *result;
      }
      if (attempt >= policy_.max_retries)
        throw StoreUnavailable("remote store unavailable after " +
                               std::to_string(attempt + 1) + " attempts");
      backoff_delays_.push_back(delay);
      sleep_(delay);
      delay = static_cast<int>(delay * policy_.multiplier);
    }
  }

  [[noreturn]] void raise_not_found(const std::string& body) {
    std::string code;
    try {
      code = nlohmann::json::parse(body).value("error", "");
    } catch (const nlohmann::json::exception&) {
    }
    if (code == "unknown_field") throw UnknownField("remote store: unknown field");
    throw UnknownRoom("remote store: unknown room");
  }

  std::string base_url_;
  RetryPolicy policy_;
  int timeout_ms_;
  SleepFn sleep_;
  std::vector<int> backoff_delays_;
};

}  // namespace homewsn
