#pragma once

// Minimal server side of RFC 6455: the upgrade handshake and text framing.

#include <openssl/evp.h>
#include <openssl/sha.h>

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace monoland::bridge::ws {

inline std::string accept_key(const std::string& client_key) {
  const std::string magic = client_key + "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";
  unsigned char digest[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(magic.data()), magic.size(), digest);
  unsigned char out[4 * ((SHA_DIGEST_LENGTH + 2) / 3) + 1];
  const int n = EVP_EncodeBlock(out, digest, SHA_DIGEST_LENGTH);
  return std::string(reinterpret_cast<char*>(out), static_cast<std::size_t>(n));
}

/// Value of a header in an HTTP request head, case-insensitive on the name.
inline std::optional<std::string> header(const std::string& head, const std::string& name) {
  std::istringstream in(head);
  std::string line;
  auto lower = [](std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
  };
  const std::string want = lower(name);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    if (lower(line.substr(0, colon)) != want) continue;
    std::string v = line.substr(colon + 1);
    const auto b = v.find_first_not_of(" \t");
    const auto e = v.find_last_not_of(" \t");
    return b == std::string::npos ? std::string() : v.substr(b, e - b + 1);
  }
  return std::nullopt;
}

/// 101 response for an upgrade request head, or nothing if the head is not
/// a WebSocket upgrade.
inline std::optional<std::string> handshake_response(const std::string& head) {
  const auto key = header(head, "Sec-WebSocket-Key");
  if (!key) return std::nullopt;
  return "HTTP/1.1 101 Switching Protocols\r\nUpgrade: websocket\r\nConnection: Upgrade\r\nSec-WebSocket-Accept: " +
         accept_key(*key) + "\r\n\r\n";
}

enum class Opcode : std::uint8_t { continuation = 0, text = 1, binary = 2, close = 8, ping = 9, pong = 10 };

/// Unmasked server frame.
inline std::string frame(Opcode op, const std::string& payload) {
  std::string f;
  f.push_back(static_cast<char>(0x80 | static_cast<std::uint8_t>(op)));
  const std::uint64_t n = payload.size();
  if (n < 126) {
    f.push_back(static_cast<char>(n));
  } else if (n <= 0xFFFF) {
    f.push_back(static_cast<char>(126));
    f.push_back(static_cast<char>((n >> 8) & 0xFF));
    f.push_back(static_cast<char>(n & 0xFF));
  } else {
    f.push_back(static_cast<char>(127));
    for (int i = 7; i >= 0; --i) f.push_back(static_cast<char>((n >> (8 * i)) & 0xFF));
  }
  return f + payload;
}

/// Masked client frame, as a browser would send it.
inline std::string client_frame(Opcode op, const std::string& payload, std::uint32_t mask_key = 0x12345678) {
  std::string f = frame(op, payload);
  const std::size_t header_len = f.size() - payload.size();
  f[1] = static_cast<char>(static_cast<std::uint8_t>(f[1]) | 0x80);
  const unsigned char mask[4] = {static_cast<unsigned char>(mask_key >> 24), static_cast<unsigned char>(mask_key >> 16),
                                 static_cast<unsigned char>(mask_key >> 8), static_cast<unsigned char>(mask_key)};
  std::string out = f.substr(0, header_len);
  out.append(reinterpret_cast<const char*>(mask), 4);
  for (std::size_t i = 0; i < payload.size(); ++i) out.push_back(static_cast<char>(payload[i] ^ mask[i % 4]));
  return out;
}

struct Frame {
  bool fin = true;
  Opcode op = Opcode::text;
  std::string payload;
};

/// Pops one complete frame off the front of `buf`, if there is one.
inline std::optional<Frame> parse_frame(std::string& buf, std::uint64_t max_payload = 1u << 24) {
  if (buf.size() < 2) return std::nullopt;
  const auto b0 = static_cast<std::uint8_t>(buf[0]);
  const auto b1 = static_cast<std::uint8_t>(buf[1]);
  const bool masked = b1 & 0x80;
  std::uint64_t n = b1 & 0x7F;
  std::size_t pos = 2;
  if (n == 126) {
    if (buf.size() < 4) return std::nullopt;
    n = (static_cast<std::uint64_t>(static_cast<std::uint8_t>(buf[2])) << 8) | static_cast<std::uint8_t>(buf[3]);
    pos = 4;
  } else if (n == 127) {
    if (buf.size() < 10) return std::nullopt;
    n = 0;
    for (int i = 0; i < 8; ++i) n = (n << 8) | static_cast<std::uint8_t>(buf[2 + static_cast<std::size_t>(i)]);
    pos = 10;
  }
  if (n > max_payload) throw std::runtime_error("websocket frame too large");
  unsigned char mask[4] = {0, 0, 0, 0};
  if (masked) {
    if (buf.size() < pos + 4) return std::nullopt;
    for (int i = 0; i < 4; ++i) mask[i] = static_cast<unsigned char>(buf[pos + static_cast<std::size_t>(i)]);
    pos += 4;
  }
  if (buf.size() < pos + n) return std::nullopt;
  Frame f;
  f.fin = b0 & 0x80;
  f.op = static_cast<Opcode>(b0 & 0x0F);
  f.payload.resize(n);
  for (std::size_t i = 0; i < n; ++i) f.payload[i] = static_cast<char>(buf[pos + i] ^ mask[i % 4]);
  buf.erase(0, pos + n);
  return f;
}

}  // namespace monoland::bridge::ws
