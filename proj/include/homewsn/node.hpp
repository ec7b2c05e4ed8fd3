// Per-room sensor node: samples the environment once per period, applies the
// room's threshold rules to its actuators, serializes readings to the message
// grammar, and chunks them into frames with consecutive 8-bit sequence
// numbers.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "homewsn/crypto.hpp"
#include "homewsn/frame.hpp"
#include "homewsn/message.hpp"
#include "homewsn/rooms.hpp"

namespace homewsn {

// Environment readout for one node's room at the current tick.
using EnvFn = std::function<Fixed2(const std::string& field)>;

struct NodeConfig {
  NodeAddress address = 0;
  RoomId room = RoomId::living_room;
  std::size_t max_payload = kDefaultMaxPayload;
  bool encrypt = false;
  PayloadKey key;
};

struct TickResult {
  std::vector<SensorSample> samples;
  std::vector<ActuatorEvent> events;
  std::vector<std::uint8_t> message;
  std::vector<Frame> frames;
};

class SensorNode {
 public:
  explicit SensorNode(NodeConfig config) : config_(config), profile_(profile_for(config.room)) {}

  NodeAddress address() const { return config_.address; }
  RoomId room() const { return config_.room; }
  std::uint8_t next_seq() const { return seq_; }

  TickResult tick(const EnvFn& env, std::int64_t now_ms) {
    TickResult result;
    result.samples.reserve(profile_.fields.size());
    for (const auto& field : profile_.fields)
      result.samples.push_back({field.name, env(field.name), field.unit});

    result.events = evaluate_rules(profile_, result.samples, now_ms);
    apply_events(result.events);

    result.message = encode_message(config_.room, result.samples);
    // GCM appends a 16-byte tag per frame, so encrypted chunks leave room.
    if (config_.encrypt && config_.max_payload <= kGcmTagBytes)
      throw ValidationError("node: max_payload too small for encrypted frames");
    std::size_t chunk_len =
        config_.encrypt ? config_.max_payload - kGcmTagBytes : config_.max_payload;
    for (auto& chunk : chunk_message(result.message, chunk_len)) {
      std::vector<std::uint8_t> payload = std::move(chunk);
      if (config_.encrypt) {
        FrameNonce nonce{config_.address, seq_, seq_epoch_};
        nonce_guard_.check(nonce);
        payload = encrypt_payload(payload, config_.key, nonce);
      }
      result.frames.push_back(make_frame(config_.address, kCoordinatorAddress, seq_,
                                         std::move(payload), config_.encrypt));
      if (seq_ == 0xFF) ++seq_epoch_;
      ++seq_;  // wraps mod 256
    }
    return result;
  }

  // Actuator readouts.
  bool led_on(std::int64_t now_ms) const {
    return led_latched_ || (led_until_ && now_ms <= *led_until_);
  }
  bool led_latched() const { return led_latched_; }
  bool buzzer_on(std::int64_t now_ms) const { return buzzer_until_ && now_ms <= *buzzer_until_; }
  bool disco_pin_a() const { return disco_a_; }
  bool disco_pin_b() const { return !disco_a_; }  // pair held in opposite states

 private:
  void apply_events(const std::vector<ActuatorEvent>& events) {
    for (const auto& e : events) {
      switch (e.effect) {
        case EffectKind::on_for:
          if (e.actuator == Actuator::led)
            led_until_ = e.end_ms;
          else if (e.actuator == Actuator::buzzer)
            buzzer_until_ = e.end_ms;
          break;
        case EffectKind::latch_on:
          if (e.actuator == Actuator::led) led_latched_ = true;
          break;
        case EffectKind::toggle_opposite:
          disco_a_ = !disco_a_;
          break;
      }
    }
    // A latch clears at the first tick its rule condition reads false.
    for (const auto& rule : profile_.rules) {
      if (rule.action.effect != EffectKind::latch_on) continue;
      bool fired = false;
      for (const auto& e : events) {
        if (e.actuator == rule.action.actuator && e.effect == EffectKind::latch_on) fired = true;
      }
      if (!fired && rule.action.actuator == Actuator::led) led_latched_ = false;
    }
  }

  NodeConfig config_;
  const RoomProfile& profile_;
  std::uint8_t seq_ = 0;
  std::uint32_t seq_epoch_ = 0;
  NonceGuard nonce_guard_;

  std::optional<std::int64_t> led_until_;
  std::optional<std::int64_t> buzzer_until_;
  bool led_latched_ = false;
  bool disco_a_ = false;
};

}  // namespace homewsn
