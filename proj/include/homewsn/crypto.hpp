// Authenticated AES-128 payload encryption (AES-128-GCM via OpenSSL).
// Ciphertext = GCM output followed by the 16-byte tag. The nonce is the
// frame's (src, seq, epoch) counter, so it is unique per frame without
// spending payload bytes; NonceGuard enforces uniqueness on the sending side.
#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <openssl/evp.h>

#include "homewsn/errors.hpp"
#include "homewsn/frame.hpp"

namespace homewsn {

inline constexpr std::size_t kKeyBytes = 16;
inline constexpr std::size_t kGcmTagBytes = 16;
inline constexpr std::size_t kGcmNonceBytes = 12;

struct PayloadKey {
  std::array<std::uint8_t, kKeyBytes> bytes{};

  static PayloadKey from_hex(std::string_view hex) {
    if (hex.size() != kKeyBytes * 2)
      throw ValidationError("key must be exactly 16 bytes (32 hex digits)");
    auto nibble = [](char c) -> int {
      if (c >= '0' && c <= '9') return c - '0';
      if (c >= 'a' && c <= 'f') return c - 'a' + 10;
      if (c >= 'A' && c <= 'F') return c - 'A' + 10;
      throw ValidationError("key contains a non-hex digit");
    };
    PayloadKey k;
    for (std::size_t i = 0; i < kKeyBytes; ++i)
      k.bytes[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
    return k;
  }
};

// 12-byte IV: src (big-endian), seq, zero pad, epoch (big-endian), zero pad.
struct FrameNonce {
  NodeAddress src = 0;
  std::uint8_t seq = 0;
  std::uint32_t epoch = 0;  // count of 8-bit seq wraps

  std::array<std::uint8_t, kGcmNonceBytes> iv() const {
    std::array<std::uint8_t, kGcmNonceBytes> out{};
    out[0] = static_cast<std::uint8_t>(src >> 8);
    out[1] = static_cast<std::uint8_t>(src & 0xFF);
    out[2] = seq;
    out[4] = static_cast<std::uint8_t>(epoch >> 24);
    out[5] = static_cast<std::uint8_t>(epoch >> 16);
    out[6] = static_cast<std::uint8_t>(epoch >> 8);
    out[7] = static_cast<std::uint8_t>(epoch & 0xFF);
    return out;
  }

  std::uint64_t counter() const {
    return static_cast<std::uint64_t>(epoch) * 256 + seq;
  }
};

namespace detail {

struct CipherCtx {
  EVP_CIPHER_CTX* ctx;
  CipherCtx() : ctx(EVP_CIPHER_CTX_new()) {
    if (!ctx) throw Error("EVP_CIPHER_CTX_new failed");
  }
  ~CipherCtx() { EVP_CIPHER_CTX_free(ctx); }
  CipherCtx(const CipherCtx&) = delete;
  CipherCtx& operator=(const CipherCtx&) = delete;
};

}  // namespace detail

inline std::vector<std::uint8_t> encrypt_payload(std::span<const std::uint8_t> plaintext,
                                                 const PayloadKey& key, const FrameNonce& nonce) {
  detail::CipherCtx c;
  auto iv = nonce.iv();
  if (EVP_EncryptInit_ex(c.ctx, EVP_aes_128_gcm(), nullptr, key.bytes.data(), iv.data()) != 1)
    throw Error("AES-GCM encrypt init failed");

  std::vector<std::uint8_t> out(plaintext.size() + kGcmTagBytes);
  int len = 0;
  if (!plaintext.empty() &&
      EVP_EncryptUpdate(c.ctx, out.data(), &len, plaintext.data(),
                        static_cast<int>(plaintext.size())) != 1)
    throw Error("AES-GCM encrypt failed");
  int total = len;
  if (EVP_EncryptFinal_ex(c.ctx, out.data() + total, &len) != 1)
    throw Error("AES-GCM encrypt finalize failed");
  total += len;
  if (EVP_CIPHER_CTX_ctrl(c.ctx, EVP_CTRL_GCM_GET_TAG, kGcmTagBytes, out.data() + total) != 1)
    throw Error("AES-GCM tag retrieval failed");
  out.resize(total + kGcmTagBytes);
  return out;
}

// Throws AuthenticationFailed on a wrong key, tampered bytes, or wrong nonce.
inline std::vector<std::uint8_t> decrypt_payload(std::span<const std::uint8_t> ciphertext,
                                                 const PayloadKey& key, const FrameNonce& nonce) {
  if (ciphertext.size() < kGcmTagBytes)
    throw AuthenticationFailed("ciphertext shorter than the authentication tag");
  std::size_t body_len = ciphertext.size() - kGcmTagBytes;

  detail::CipherCtx c;
  auto iv = nonce.iv();
  if (EVP_DecryptInit_ex(c.ctx, EVP_aes_128_gcm(), nullptr, key.bytes.data(), iv.data()) != 1)
    throw Error("AES-GCM decrypt init failed");

  std::vector<std::uint8_t> out(body_len);
  int len = 0;
  if (body_len > 0 &&
      EVP_DecryptUpdate(c.ctx, out.data(), &len, ciphertext.data(),
                        static_cast<int>(body_len)) != 1)
    throw AuthenticationFailed("payload authentication failed");
  int total = len;

  std::array<std::uint8_t, kGcmTagBytes> tag;
  std::copy(ciphertext.begin() + body_len, ciphertext.end(), tag.begin());
  if (EVP_CIPHER_CTX_ctrl(c.ctx, EVP_CTRL_GCM_SET_TAG, kGcmTagBytes, tag.data()) != 1)
    throw Error("AES-GCM tag set failed");
  if (EVP_DecryptFinal_ex(c.ctx, out.data() + total, &len) != 1)
    throw AuthenticationFailed("payload authentication failed");
  out.resize(total + len);
  return out;
}

// Sending-side uniqueness: nonce counters must strictly increase per source.
class NonceGuard {
 public:
  void check(const FrameNonce& nonce) {
    std::uint64_t counter = nonce.counter();
    if (used_ && counter <= last_)
      throw NonceReuse("nonce (src, seq, epoch) counter reused or regressed");
    used_ = true;
    last_ = counter;
  }

 private:
  bool used_ = false;
  std::uint64_t last_ = 0;
};

}  // namespace homewsn
