// Coordinator-side ingest: frame dedupe, chunk reassembly across 8-bit
// sequence wrap, grammar parsing into timestamped records, change detection,
// and alert emission. Built for lossy at-least-once input: duplicates and
// malformed data are counted, never fatal.
#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "homewsn/crypto.hpp"
#include "homewsn/frame.hpp"
#include "homewsn/message.hpp"
#include "homewsn/rooms.hpp"

namespace homewsn {

struct SensorRecord {
  RoomId room = RoomId::living_room;
  std::string field;
  Fixed2 value;
  std::int64_t timestamp_ms = 0;
  NodeAddress src = 0;

  friend bool operator==(const SensorRecord&, const SensorRecord&) = default;
};

struct Alert {
  enum class Kind : std::uint8_t { threshold_rule, change_detected };
  Kind kind = Kind::threshold_rule;
  RoomId room = RoomId::living_room;
  std::string field;
  Fixed2 value;
  std::int64_t timestamp_ms = 0;
};

inline std::string_view to_string(Alert::Kind k) {
  return k == Alert::Kind::threshold_rule ? "threshold_rule" : "change_detected";
}

// Per-field absolute deviation thresholds, in hundredths.
inline std::int64_t default_epsilon_hundredths(Unit unit) {
  switch (unit) {
    case Unit::celsius: return 50;        // 0.5 degC
    case Unit::percent_rh: return 200;    // 2.0 %RH
    case Unit::adc_counts: return 1000;   // 10 counts
    case Unit::centimeters: return 500;   // 5 cm
    case Unit::boolean_flag: return 100;  // 1
  }
  return 100;
}

// Alerts when a field moves more than epsilon from its last seen value. The
// first observation primes state without alerting; last_value updates
// unconditionally.
class ChangeDetector {
 public:
  std::optional<Alert> observe(const SensorRecord& record) {
    const FieldSpec* spec = profile_for(record.room).find_field(record.field);
    std::int64_t epsilon =
        spec ? default_epsilon_hundredths(spec->unit) : default_epsilon_hundredths(Unit::adc_counts);
    auto key = std::make_pair(record.room, record.field);
    auto it = last_.find(key);
    std::optional<Alert> alert;
    if (it != last_.end() &&
        abs_diff_hundredths(record.value, it->second) > static_cast<std::uint64_t>(epsilon)) {
      alert = Alert{Alert::Kind::change_detected, record.room, record.field, record.value,
                    record.timestamp_ms};
    }
    last_[key] = record.value;
    return alert;
  }

 private:
  std::map<std::pair<RoomId, std::string>, Fixed2> last_;
};

struct GatewayStats {
  std::uint64_t frames_received = 0;
  std::uint64_t frames_duplicated = 0;
  std::uint64_t decrypt_failures = 0;
  std::uint64_t messages_reassembled = 0;
  std::uint64_t messages_failed = 0;  // reassembly timeouts
  std::uint64_t messages_malformed = 0;
  std::uint64_t unknown_room = 0;
  std::uint64_t records = 0;
  std::uint64_t alerts_threshold = 0;
  std::uint64_t alerts_change = 0;
};

struct GatewayConfig {
  std::int64_t reassembly_timeout_ms = 5000;
  bool decrypt = false;
  PayloadKey key;
};

class Gateway {
 public:
  explicit Gateway(GatewayConfig config = {}) : config_(config) {}

  const GatewayStats& stats() const { return stats_; }
  const std::vector<Alert>& alerts() const { return alerts_; }

  // Full ingest path for one delivered frame; returns records ready for
  // storage (empty while a message is still partial).
  std::vector<SensorRecord> on_frame(const Frame& frame, double arrival_ms) {
    ++stats_.frames_received;
    SrcState& src = sources_[frame.src];

    std::uint64_t vseq = virtual_seq(src, frame.seq);
    if (src.pending.contains(vseq)) {
      ++stats_.frames_duplicated;
      return {};
    }
    if (src.primed && vseq < src.expected) {
      // Before anything is consumed the start point is provisional: an
      // earlier chunk of the first run arriving late moves it back. Once
      // consumption begins, anything below expected is a duplicate.
      if (src.consumed_any) {
        ++stats_.frames_duplicated;
        return {};
      }
      src.expected = vseq;
    }
    if (!src.primed) {
      src.primed = true;
      src.expected = vseq;
      src.last_progress_ms = arrival_ms;
    }

    std::vector<std::uint8_t> payload = frame.payload;
    if (frame.encrypted) {
      if (!config_.decrypt) {
        ++stats_.decrypt_failures;
        return {};
      }
      FrameNonce nonce{frame.src, static_cast<std::uint8_t>(vseq & 0xFF),
                       static_cast<std::uint32_t>(vseq >> 8)};
      try {
        payload = decrypt_payload(payload, config_.key, nonce);
      } catch (const AuthenticationFailed&) {
        ++stats_.decrypt_failures;
        return {};
      }
    }

    check_timeout(src, arrival_ms);
    src.pending.emplace(vseq, PendingChunk{std::move(payload), arrival_ms});

    std::vector<SensorRecord> records;
    drain(frame.src, src, arrival_ms, records);
    return records;
  }

  // Sweeps reassembly timeouts; call when time advances without traffic.
  void poll(double now_ms) {
    for (auto& [addr, src] : sources_) {
      check_timeout(src, now_ms);
      std::vector<SensorRecord> records;
      drain(addr, src, now_ms, records);
      // Timeout resync can only complete a message if pending frames were
      // already terminator-bearing; records here are rare but valid.
      for (auto& r : records) overflow_.push_back(std::move(r));
    }
  }

  // Records completed by poll() rather than by a frame arrival.
  std::vector<SensorRecord> take_overflow() { return std::exchange(overflow_, {}); }

  // Parses one reassembled message into records; grammar and room problems
  // are counted, not thrown.
  std::vector<SensorRecord> ingest_message(std::span<const std::uint8_t> message, NodeAddress src,
                                           std::int64_t arrival_ts_ms) {
    DecodedMessage decoded;
    try {
      decoded = decode_message(message);
    } catch (const UnknownRoom&) {
      ++stats_.unknown_room;
      return {};
    } catch (const GrammarError&) {
      ++stats_.messages_malformed;
      return {};
    }
    ++stats_.messages_reassembled;

    std::vector<SensorRecord> records;
    records.reserve(decoded.samples.size());
    for (const auto& s : decoded.samples) {
      SensorRecord r{decoded.room, s.field, s.value, arrival_ts_ms, src};
      auto change = change_detector_.observe(r);
      if (change) {
        ++stats_.alerts_change;
        alerts_.push_back(*change);
      }
      records.push_back(std::move(r));
      ++stats_.records;
    }

    // Mirror the node-side threshold rules as gateway alerts, 1:1.
    try {
      for (const auto& e :
           evaluate_rules(profile_for(decoded.room), decoded.samples, arrival_ts_ms)) {
        ++stats_.alerts_threshold;
        alerts_.push_back(
            Alert{Alert::Kind::threshold_rule, decoded.room, e.field, e.value, arrival_ts_ms});
      }
    } catch (const MissingField&) {
      // partial sample set; threshold mirroring skipped
    }
    return records;
  }

 private:
  struct PendingChunk {
    std::vector<std::uint8_t> payload;
    double arrival_ms = 0;
  };

  struct SrcState {
    bool primed = false;
    bool consumed_any = false;   // expected is provisional until first consume
    std::uint64_t expected = 0;  // next virtual seq (epoch * 256 + seq) to consume
    std::map<std::uint64_t, PendingChunk> pending;
    std::vector<std::uint8_t> buffer;  // consumed bytes awaiting a terminator
    double message_stamp_ms = 0;       // latest arrival among the buffered chunks
    double last_emitted_ms = 0;        // keeps per-source timestamps monotone
    double last_progress_ms = 0;
    bool in_message = false;  // buffer or pending belongs to a partial message
  };

  // Maps an 8-bit seq onto the 64-bit virtual counter nearest the current
  // expectation. Handles reordering within a +/-128 window across wrap, and
  // subsumes the bounded (src, seq) duplicate window with one integer.
  static std::uint64_t virtual_seq(const SrcState& src, std::uint8_t seq) {
    if (!src.primed) return seq;
    std::uint64_t base = src.expected & ~0xFFull;
    std::uint64_t best = base + seq;
    std::uint64_t best_dist = dist(best, src.expected);
    if (base >= 256) {
      std::uint64_t cand = base - 256 + seq;
      std::uint64_t d = dist(cand, src.expected);
      if (d < best_dist) {
        best = cand;
        best_dist = d;
      }
    }
    std::uint64_t cand = base + 256 + seq;
    if (dist(cand, src.expected) < best_dist) best = cand;
    return best;
  }

  static std::uint64_t dist(std::uint64_t a, std::uint64_t b) { return a > b ? a - b : b - a; }

  // Consumes contiguous pending frames, emitting each newline-terminated
  // message found in the byte stream. A message is stamped with the arrival
  // time of the chunk that completed it (clamped monotone per source).
  void drain(NodeAddress addr, SrcState& src, double arrival_ms,
             std::vector<SensorRecord>& records) {
    bool progressed = false;
    while (true) {
      auto it = src.pending.find(src.expected);
      if (it == src.pending.end()) break;
      // A fresh source commits its start point only at a chunk that opens a
      // grammar line ('R' never occurs mid-message). An earlier chunk of the
      // same run arriving late can still move the start back; a genuine
      // mid-stream join resolves through the timeout resync.
      if (!src.consumed_any && (it->second.payload.empty() || it->second.payload[0] != 'R'))
        break;
      progressed = true;
      src.consumed_any = true;
      double chunk_arrival = it->second.arrival_ms;
      src.message_stamp_ms = std::max(src.message_stamp_ms, chunk_arrival);
      src.buffer.insert(src.buffer.end(), it->second.payload.begin(), it->second.payload.end());
      src.pending.erase(it);
      ++src.expected;

      // Extract every complete line in the buffer.
      std::size_t start = 0;
      for (std::size_t i = 0; i < src.buffer.size(); ++i) {
        if (src.buffer[i] != '\n') continue;
        std::span<const std::uint8_t> line(src.buffer.data() + start, i - start + 1);
        double stamp = std::max(src.last_emitted_ms, src.message_stamp_ms);
        auto msg_records =
            ingest_message(line, addr, static_cast<std::int64_t>(std::llround(stamp)));
        records.insert(records.end(), msg_records.begin(), msg_records.end());
        src.last_emitted_ms = stamp;
        src.message_stamp_ms = chunk_arrival;  // bytes past the newline start the next message
        start = i + 1;
      }
      src.buffer.erase(src.buffer.begin(), src.buffer.begin() + static_cast<std::ptrdiff_t>(start));
    }
    if (progressed) src.last_progress_ms = arrival_ms;
    src.in_message = !src.buffer.empty() || !src.pending.empty();
  }

  // A stalled partial run is discarded after the timeout; reassembly resyncs
  // at the earliest pending frame.
  void check_timeout(SrcState& src, double now_ms) {
    if (!src.in_message) {
      src.last_progress_ms = now_ms;
      return;
    }
    if (now_ms - src.last_progress_ms <= static_cast<double>(config_.reassembly_timeout_ms))
      return;
    if (!src.buffer.empty() || !src.pending.empty()) ++stats_.messages_failed;
    src.buffer.clear();
    src.message_stamp_ms = 0;  // discarded chunks no longer stamp anything
    if (!src.pending.empty()) src.expected = src.pending.begin()->first;
    src.consumed_any = true;  // the resync point is committed
    src.last_progress_ms = now_ms;
    src.in_message = !src.pending.empty();
  }

  GatewayConfig config_;
  GatewayStats stats_;
  ChangeDetector change_detector_;
  std::vector<Alert> alerts_;
  std::vector<SensorRecord> overflow_;
  std::map<NodeAddress, SrcState> sources_;
};

}  // namespace homewsn
