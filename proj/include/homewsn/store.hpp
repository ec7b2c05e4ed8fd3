// Persistence and retrieval: the StorageBackend interface, an in-memory
// backend, a durable append-only JSON-Lines backend (one file per room), and
// CSV/JSON series export.
//
// Record line format (field order is part of the contract):
//   {"timestamp":<ms>,"room":"<room>","field":"<field>","value":<value>,"src":<addr>}
#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "homewsn/errors.hpp"
#include "homewsn/gateway.hpp"
#include "homewsn/rooms.hpp"

namespace homewsn {

class StorageBackend {
 public:
  virtual ~StorageBackend() = default;

  // Inserts records durably; idempotent per batch_id. Returns the number of
  // records actually inserted (0 for a replayed batch).
  virtual std::size_t insert_batch(const std::vector<SensorRecord>& records,
                                   const std::string& batch_id) = 0;

  // Records matching room+field with timestamp in [from_ts, to_ts], ascending.
  virtual std::vector<SensorRecord> query(RoomId room, const std::string& field,
                                          std::int64_t from_ts, std::int64_t to_ts) = 0;

  // Rooms with at least one record, then fields with at least one record.
  virtual std::vector<std::string> list_rooms() = 0;
  virtual std::vector<std::string> list_fields(RoomId room) = 0;
};

inline void validate_record(const SensorRecord& r) {
  if (!profile_for(r.room).find_field(r.field))
    throw UnknownField("record field '" + r.field + "' not valid for room " +
                       std::string(to_string(r.room)));
}

inline std::string record_to_jsonl(const SensorRecord& r) {
  const FieldSpec* spec = profile_for(r.room).find_field(r.field);
  std::string value_text = r.value.to_string(spec && !unit_is_integral(spec->unit));
  std::ostringstream line;
  line << "{\"timestamp\":" << r.timestamp_ms << ",\"room\":\"" << to_string(r.room)
       << "\",\"field\":\"" << r.field << "\",\"value\":" << value_text
       << ",\"src\":" << r.src << "}";
  return line.str();
}

inline SensorRecord record_from_json(const nlohmann::json& j) {
  SensorRecord r;
  r.room = parse_room(j.at("room").get<std::string>());
  r.field = j.at("field").get<std::string>();
  r.timestamp_ms = j.at("timestamp").get<std::int64_t>();
  r.src = j.at("src").get<NodeAddress>();
  const auto& v = j.at("value");
  r.value = v.is_number_integer() ? Fixed2::from_int(v.get<std::int64_t>())
                                  : Fixed2::from_double(v.get<double>());
  return r;
}

class MemoryStore : public StorageBackend {
 public:
  std::size_t insert_batch(const std::vector<SensorRecord>& records,
                           const std::string& batch_id) override {
    std::lock_guard lock(mutex_);
    return insert_locked(records, batch_id);
  }

  std::vector<SensorRecord> query(RoomId room, const std::string& field, std::int64_t from_ts,
                                  std::int64_t to_ts) override {
    std::lock_guard lock(mutex_);
    return query_locked(room, field, from_ts, to_ts);
  }

  std::vector<std::string> list_rooms() override {
    std::lock_guard lock(mutex_);
    return list_rooms_locked();
  }

  std::vector<std::string> list_fields(RoomId room) override {
    std::lock_guard lock(mutex_);
    return list_fields_locked(room);
  }

 protected:
  std::size_t insert_locked(const std::vector<SensorRecord>& records,
                            const std::string& batch_id) {
    if (!applied_batches_.insert(batch_id).second) return 0;
    for (const auto& r : records) {
      validate_record(r);
      series_[{r.room, r.field}].push_back(r);
    }
    return records.size();
  }

  std::vector<SensorRecord> query_locked(RoomId room, const std::string& field,
                                         std::int64_t from_ts, std::int64_t to_ts) const {
    if (!profile_for(room).find_field(field))
      throw UnknownField("unknown field '" + field + "' for room " +
                         std::string(to_string(room)));
    std::vector<SensorRecord> out;
    auto it = series_.find({room, field});
    if (it == series_.end()) return out;
    for (const auto& r : it->second) {
      if (r.timestamp_ms >= from_ts && r.timestamp_ms <= to_ts) out.push_back(r);
    }
    std::stable_sort(out.begin(), out.end(), [](const SensorRecord& a, const SensorRecord& b) {
      return a.timestamp_ms < b.timestamp_ms;
    });
    return out;
  }

  std::vector<std::string> list_rooms_locked() const {
    std::set<RoomId> rooms;
    for (const auto& [key, records] : series_) {
      if (!records.empty()) rooms.insert(key.first);
    }
    std::vector<std::string> out;
    for (RoomId r : kAllRooms) {
      if (rooms.contains(r)) out.emplace_back(to_string(r));
    }
    return out;
  }

  std::vector<std::string> list_fields_locked(RoomId room) const {
    std::vector<std::string> out;
    for (const auto& f : profile_for(room).fields) {
      auto it = series_.find({room, f.name});
      if (it != series_.end() && !it->second.empty()) out.push_back(f.name);
    }
    return out;
  }

  mutable std::mutex mutex_;
  std::map<std::pair<RoomId, std::string>, std::vector<SensorRecord>> series_;
  std::set<std::string> applied_batches_;
};

// Durable backend: one append-only JSON-Lines file per room plus a batch
// ledger; reopening a directory replays the files into an identical query
// surface. refresh() tails lines appended by other processes.
class LocalStore : public MemoryStore {
 public:
  explicit LocalStore(const std::filesystem::path& directory) : dir_(directory) {
    std::filesystem::create_directories(dir_);
    std::lock_guard lock(mutex_);
    for (RoomId room : kAllRooms) tail_file_locked(room_file(room), room_offsets_[room]);
    tail_ledger_locked();
  }

  const std::filesystem::path& directory() const { return dir_; }

  std::size_t insert_batch(const std::vector<SensorRecord>& records,
                           const std::string& batch_id) override {
    std::lock_guard lock(mutex_);
    refresh_locked();
    if (applied_batches_.contains(batch_id)) return 0;
    for (const auto& r : records) validate_record(r);

    // room files first, ledger last: a replayed batch_id implies its records
    // are already on disk
    std::map<RoomId, std::vector<const SensorRecord*>> by_room;
    for (const auto& r : records) by_room[r.room].push_back(&r);
    for (const auto& [room, rs] : by_room) {
      std::ofstream out(room_file(room), std::ios::app);
      if (!out) throw StoreUnavailable("cannot open " + room_file(room).string());
      for (const SensorRecord* r : rs) out << record_to_jsonl(*r) << '\n';
      out.flush();
      if (!out) throw StoreUnavailable("write failed: " + room_file(room).string());
      room_offsets_[room] = std::filesystem::file_size(room_file(room));
    }
    {
      std::ofstream ledger(ledger_file(), std::ios::app);
      if (!ledger) throw StoreUnavailable("cannot open batch ledger");
      ledger << batch_id << '\n';
      ledger.flush();
      ledger_offset_ = std::filesystem::file_size(ledger_file());
    }
    return insert_locked(records, batch_id);
  }

  std::vector<SensorRecord> query(RoomId room, const std::string& field, std::int64_t from_ts,
                                  std::int64_t to_ts) override {
    std::lock_guard lock(mutex_);
    refresh_locked();
    return query_locked(room, field, from_ts, to_ts);
  }

  std::vector<std::string> list_rooms() override {
    std::lock_guard lock(mutex_);
    refresh_locked();
    return list_rooms_locked();
  }

  std::vector<std::string> list_fields(RoomId room) override {
    std::lock_guard lock(mutex_);
    refresh_locked();
    return list_fields_locked(room);
  }

 private:
  std::filesystem::path room_file(RoomId room) const {
    return dir_ / (std::string(to_string(room)) + ".jsonl");
  }
  std::filesystem::path ledger_file() const { return dir_ / "_batches.log"; }

  void refresh_locked() {
    for (RoomId room : kAllRooms) tail_file_locked(room_file(room), room_offsets_[room]);
    tail_ledger_locked();
  }

  void tail_file_locked(const std::filesystem::path& path, std::uintmax_t& offset) {
    std::error_code ec;
    std::uintmax_t size = std::filesystem::file_size(path, ec);
    if (ec || size <= offset) return;
    std::ifstream in(path);
    if (!in) return;
    in.seekg(static_cast<std::streamoff>(offset));
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      SensorRecord r = record_from_json(nlohmann::json::parse(line));
      series_[{r.room, r.field}].push_back(r);
    }
    offset = size;
  }

  void tail_ledger_locked() {
    std::error_code ec;
    std::uintmax_t size = std::filesystem::file_size(ledger_file(), ec);
    if (ec || size <= ledger_offset_) return;
    std::ifstream in(ledger_file());
    if (!in) return;
    in.seekg(static_cast<std::streamoff>(ledger_offset_));
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty()) applied_batches_.insert(line);
    }
    ledger_offset_ = size;
  }

  std::filesystem::path dir_;
  std::map<RoomId, std::uintmax_t> room_offsets_;
  std::uintmax_t ledger_offset_ = 0;
};

enum class ExportFormat : std::uint8_t { csv, json };

inline ExportFormat parse_export_format(std::string_view text) {
  if (text == "csv") return ExportFormat::csv;
  if (text == "json") return ExportFormat::json;
  throw ValidationError("format must be 'csv' or 'json'");
}

// Renders a queried series. CSV: "timestamp,value" header plus one row per
// record; JSON: an array of {timestamp, value} objects.
inline std::string export_series(StorageBackend& backend, RoomId room, const std::string& field,
                                 std::int64_t from_ts, std::int64_t to_ts, ExportFormat format) {
  const FieldSpec* spec = profile_for(room).find_field(field);
  std::vector<SensorRecord> records = backend.query(room, field, from_ts, to_ts);
  std::ostringstream out;
  if (format == ExportFormat::csv) {
    out << "timestamp,value\n";
    for (const auto& r : records)
      out << r.timestamp_ms << ',' << r.value.to_string(spec && !unit_is_integral(spec->unit))
          << '\n';
    return out.str();
  }
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : records) {
    nlohmann::ordered_json item;
    item["timestamp"] = r.timestamp_ms;
    item["value"] = r.value.to_double();
    arr.push_back(std::move(item));
  }
  out << arr.dump(2) << '\n';
  return out.str();
}

}  // namespace homewsn
