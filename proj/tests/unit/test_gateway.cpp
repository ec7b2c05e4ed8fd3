#include <doctest.h>

#include <algorithm>
#include <string>
#include <vector>

#include "homewsn/gateway.hpp"
#include "homewsn/message.hpp"
#include "homewsn/node.hpp"
#include "homewsn/rng.hpp"

using namespace homewsn;

namespace {

std::vector<std::uint8_t> bytes_of(const std::string& s) {
  return {s.begin(), s.end()};
}

// Chunks a message into frames with consecutive sequence numbers.
std::vector<Frame> frames_for(NodeAddress src, std::uint8_t first_seq, const std::string& message,
                              std::size_t max_payload) {
  std::vector<Frame> out;
  std::uint8_t seq = first_seq;
  for (auto& chunk : chunk_message(bytes_of(message), max_payload))
    out.push_back(make_frame(src, kCoordinatorAddress, seq++, std::move(chunk)));
  return out;
}

}  // namespace

TEST_CASE("split message reassembles across two frames") {
  Gateway gw;
  auto frames = frames_for(5, 0, "R:kitchen;flame=512;gas=44\n", 13);
  REQUIRE(frames.size() == 3);

  CHECK(gw.on_frame(frames[0], 10.0).empty());
  CHECK(gw.on_frame(frames[1], 20.0).empty());
  auto records = gw.on_frame(frames[2], 30.0);
  REQUIRE(records.size() == 2);
  CHECK(records[0].field == "flame");
  CHECK(records[0].value == Fixed2::from_int(512));
  CHECK(records[0].timestamp_ms == 30);
  CHECK(records[1].field == "gas");
  CHECK(records[1].value == Fixed2::from_int(44));
  CHECK(gw.stats().messages_reassembled == 1);
}

TEST_CASE("a self-contained chunk completes immediately") {
  Gateway gw;
  auto frames = frames_for(2, 7, "R:kitchen;flame=512;gas=44\n", 84);
  REQUIRE(frames.size() == 1);
  CHECK(gw.on_frame(frames[0], 5.0).size() == 2);
}

TEST_CASE("out-of-order chunks within a run still assemble") {
  Gateway gw;
  auto frames = frames_for(3, 250, "R:kitchen;flame=512;gas=44\n", 10);
  REQUIRE(frames.size() == 3);
  CHECK(gw.on_frame(frames[0], 1.0).empty());
  CHECK(gw.on_frame(frames[2], 2.0).empty());  // gap
  auto records = gw.on_frame(frames[1], 3.0);  // fills it
  CHECK(records.size() == 2);
  CHECK(gw.stats().messages_reassembled == 1);
}

TEST_CASE("sequence numbers wrap across 255 without losing messages") {
  Gateway gw;
  auto first = frames_for(4, 254, "R:kitchen;flame=512;gas=44\n", 14);   // seqs 254, 255
  auto second = frames_for(4, 0, "R:kitchen;flame=600;gas=50\n", 14);    // seqs 0, 1
  REQUIRE(first.size() == 2);
  CHECK(gw.on_frame(first[0], 1.0).empty());
  CHECK(gw.on_frame(first[1], 2.0).size() == 2);
  CHECK(gw.on_frame(second[0], 3.0).empty());
  CHECK(gw.on_frame(second[1], 4.0).size() == 2);
  CHECK(gw.stats().frames_duplicated == 0);
}

TEST_CASE("a missing middle chunk times out with zero records") {
  GatewayConfig config;
  config.reassembly_timeout_ms = 5000;
  Gateway gw(config);
  auto frames = frames_for(6, 0, "R:kitchen;flame=512;gas=44\n", 10);
  REQUIRE(frames.size() == 3);
  CHECK(gw.on_frame(frames[0], 0.0).empty());
  CHECK(gw.on_frame(frames[2], 1.0).empty());  // middle frame lost

  gw.poll(6000.0);  // beyond the timeout
  CHECK(gw.take_overflow().empty());
  CHECK(gw.stats().messages_failed >= 1);
  CHECK(gw.stats().records == 0);
}

TEST_CASE("duplicate frame runs yield zero records the second time") {
  Gateway gw;
  auto frames = frames_for(7, 10, "R:kitchen;flame=512;gas=44\n", 84);
  CHECK(gw.on_frame(frames[0], 1.0).size() == 2);
  CHECK(gw.on_frame(frames[0], 2.0).empty());  // retransmission
  CHECK(gw.stats().frames_duplicated == 1);
  CHECK(gw.stats().records == 2);
}

TEST_CASE("ingest counts malformed and unknown-room messages without dying") {
  Gateway gw;
  CHECK(gw.ingest_message(bytes_of("R:bathroom;x=1\n"), 1, 0).empty());
  CHECK(gw.stats().unknown_room == 1);
  CHECK(gw.ingest_message(bytes_of("garbage\n"), 1, 0).empty());
  CHECK(gw.stats().messages_malformed == 1);
  auto records = gw.ingest_message(bytes_of("R:kitchen;flame=512;gas=44\n"), 1, 9);
  CHECK(records.size() == 2);
  CHECK(gw.stats().messages_reassembled == 1);
}

TEST_CASE("change detector alerts only past epsilon and primes silently") {
  ChangeDetector detector;
  auto record = [](double v, std::int64_t ts) {
    return SensorRecord{RoomId::living_room, "temperature", Fixed2::from_double(v), ts, 1};
  };
  CHECK_FALSE(detector.observe(record(25.0, 0)).has_value());   // first primes
  CHECK_FALSE(detector.observe(record(25.4, 1)).has_value());   // 0.4 <= 0.5
  auto alert = detector.observe(record(25.96, 2));              // 0.56 > 0.5 from 25.4
  REQUIRE(alert.has_value());
  CHECK(alert->kind == Alert::Kind::change_detected);
  CHECK(alert->field == "temperature");
  CHECK(alert->timestamp_ms == 2);

  SUBCASE("last value updates even without an alert") {
    ChangeDetector d2;
    d2.observe(record(25.0, 0));
    d2.observe(record(25.4, 1));  // no alert, but state moves to 25.4
    CHECK_FALSE(d2.observe(record(25.8, 2)).has_value());  // 0.4 from 25.4
  }
}

TEST_CASE("gateway mirrors node threshold rules as alerts") {
  Gateway gw;
  auto records = gw.ingest_message(bytes_of("R:kitchen;flame=512;gas=44\n"), 3, 50);
  CHECK(records.size() == 2);
  REQUIRE(gw.stats().alerts_threshold == 1);
  bool found = false;
  for (const auto& a : gw.alerts()) {
    if (a.kind == Alert::Kind::threshold_rule) {
      found = true;
      CHECK(a.room == RoomId::kitchen);
      CHECK(a.field == "flame");
      CHECK(a.value == Fixed2::from_int(512));
      CHECK(a.timestamp_ms == 50);
    }
  }
  CHECK(found);
}

TEST_CASE("replayed record stream produces an identical alert stream") {
  auto run = [] {
    Gateway gw;
    std::vector<std::string> messages{
        "R:kitchen;flame=900;gas=100\n", "R:kitchen;flame=900;gas=130\n",
        "R:kitchen;flame=700;gas=130\n", "R:kitchen;flame=700;gas=610\n",
    };
    std::int64_t ts = 0;
    for (const auto& m : messages) gw.ingest_message(bytes_of(m), 2, ts += 1000);
    return gw.alerts();
  };
  auto a = run();
  auto b = run();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].kind == b[i].kind);
    CHECK(a[i].field == b[i].field);
    CHECK(a[i].value == b[i].value);
    CHECK(a[i].timestamp_ms == b[i].timestamp_ms);
  }
}

TEST_CASE("randomized duplication and reordering never duplicates records") {
  Rng rng(987654);
  Gateway gw;

  std::uint64_t expected_records = 0;
  std::uint8_t seq = 0;
  double now = 0;
  for (int run = 0; run < 200; ++run) {
    int flame = static_cast<int>(rng.below(1024));
    int gas = static_cast<int>(rng.below(1024));
    std::string message =
        "R:kitchen;flame=" + std::to_string(flame) + ";gas=" + std::to_string(gas) + "\n";
    auto frames = frames_for(9, seq, message, 12);
    seq = static_cast<std::uint8_t>(seq + frames.size());
    expected_records += 2;

    // duplicate ~30% of frames, then shuffle the batch
    std::vector<Frame> batch = frames;
    for (const auto& f : frames) {
      if (rng.u01() < 0.3) batch.push_back(f);
    }
    for (std::size_t i = batch.size(); i > 1; --i)
      std::swap(batch[i - 1], batch[rng.below(i)]);

    for (const auto& f : batch) {
      now += 1.0;
      gw.on_frame(f, now);
    }
  }
  CHECK(gw.stats().records == expected_records);
  CHECK(gw.stats().messages_reassembled == 200);
  CHECK(gw.stats().messages_failed == 0);
  CHECK(gw.stats().frames_duplicated > 0);
}

TEST_CASE("encrypted frames decrypt through the gateway with per-frame nonces") {
  PayloadKey key = PayloadKey::from_hex("000102030405060708090a0b0c0d0e0f");
  NodeConfig config;
  config.address = 11;
  config.room = RoomId::kitchen;
  config.encrypt = true;
  config.key = key;
  SensorNode node(config);
  EnvFn env = [](const std::string& field) {
    return field == "flame" ? Fixed2::from_int(900) : Fixed2::from_int(100);
  };

  Gateway gw(GatewayConfig{.reassembly_timeout_ms = 5000, .decrypt = true, .key = key});
  // push the node across the seq wrap so the gateway must track the epoch
  std::size_t total_records = 0;
  for (int tick = 0; tick < 300; ++tick) {
    auto res = node.tick(env, tick * 1000);
    for (const auto& f : res.frames) total_records += gw.on_frame(f, tick * 1000 + 40.0).size();
  }
  CHECK(total_records == 600);
  CHECK(gw.stats().decrypt_failures == 0);

  SUBCASE("tampered ciphertext is dropped and counted") {
    auto res = node.tick(env, 400'000);
    Frame f = res.frames[0];
    f.payload[0] ^= 0x01;
    f.checksum = payload_checksum(f.payload);
    CHECK(gw.on_frame(f, 400'050.0).empty());
    CHECK(gw.stats().decrypt_failures == 1);
  }
}
