// Radio frame: the unit of transmission across the virtual medium.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "homewsn/errors.hpp"

namespace homewsn {

using NodeAddress = std::uint16_t;
inline constexpr NodeAddress kCoordinatorAddress = 0;

// Typical XBee S2C RF payload; configurable through LinkModel.
inline constexpr std::size_t kDefaultMaxPayload = 84;

// src(2) + dst(2) + seq(1) + flags(1) + length(1) + checksum(1)
inline constexpr std::size_t kFrameOverheadBytes = 8;

// XBee-style two's-complement byte checksum: 0xFF minus the low byte of the
// byte sum.
inline std::uint8_t payload_checksum(std::span<const std::uint8_t> payload) {
  unsigned sum = 0;
  for (std::uint8_t b : payload) sum += b;
  return static_cast<std::uint8_t>(0xFFu - (sum & 0xFFu));
}

inline bool checksum_valid(std::span<const std::uint8_t> payload, std::uint8_t checksum) {
  unsigned sum = checksum;
  for (std::uint8_t b : payload) sum += b;
  return (sum & 0xFFu) == 0xFFu;
}

struct Frame {
  NodeAddress src = 0;
  NodeAddress dst = 0;
  std::uint8_t seq = 0;
  std::vector<std::uint8_t> payload;
  bool encrypted = false;
  std::uint8_t checksum = 0xFF;
};

inline Frame make_frame(NodeAddress src, NodeAddress dst, std::uint8_t seq,
                        std::vector<std::uint8_t> payload, bool encrypted = false) {
  Frame f;
  f.src = src;
  f.dst = dst;
  f.seq = seq;
  f.checksum = payload_checksum(payload);
  f.payload = std::move(payload);
  f.encrypted = encrypted;
  return f;
}

inline bool frame_valid(const Frame& f, std::size_t max_payload = kDefaultMaxPayload) {
  return f.payload.size() <= max_payload && checksum_valid(f.payload, f.checksum);
}

// Airtime cost of one frame, payload plus header.
inline std::size_t frame_bits(const Frame& f) {
  return (f.payload.size() + kFrameOverheadBytes) * 8;
}

}  // namespace homewsn
