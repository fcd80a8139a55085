#pragma once

// Wire envelope of the session protocol: one JSON object per line,
// {type, seq, t, payload}.

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <regex>
#include <stdexcept>
#include <string>

namespace monoland::bridge {

using nlohmann::json;

inline constexpr int kProtocolVersion = 1;

struct Envelope {
  std::string type;
  std::uint64_t seq = 0;
  double t = 0.0;
  json payload = json::object();

  bool operator==(const Envelope&) const = default;
};

/// A message that could not be accepted. `seq` is the offender's sequence
/// number when it could be recovered.
class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(const std::string& what, std::optional<std::uint64_t> seq)
      : std::runtime_error(what), seq_(seq) {}
  std::optional<std::uint64_t> seq() const { return seq_; }

 private:
  std::optional<std::uint64_t> seq_;
};

// Best effort for lines that are not valid JSON.
inline std::optional<std::uint64_t> scrape_seq(const std::string& line) {
  static const std::regex re(R"re("seq"\s*:\s*([0-9]+))re");
  std::smatch m;
  if (!std::regex_search(line, m, re)) return std::nullopt;
  try {
    return std::stoull(m[1].str());
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

inline Envelope parse_envelope(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error&) {
    throw ProtocolError("malformed JSON", scrape_seq(line));
  }
  if (!j.is_object()) throw ProtocolError("message must be a JSON object", std::nullopt);
  std::optional<std::uint64_t> seq;
  if (j.contains("seq") && j["seq"].is_number_unsigned()) seq = j["seq"].get<std::uint64_t>();
  if (!seq) throw ProtocolError("missing or invalid seq", std::nullopt);
  if (!j.contains("type") || !j["type"].is_string()) throw ProtocolError("missing or invalid type", seq);
  Envelope e;
  e.type = j["type"].get<std::string>();
  e.seq = *seq;
  if (j.contains("t")) {
    if (!j["t"].is_number()) throw ProtocolError("invalid t", seq);
    e.t = j["t"].get<double>();
  }
  if (j.contains("payload")) {
    if (!j["payload"].is_object()) throw ProtocolError("payload must be an object", seq);
    e.payload = j["payload"];
  }
  return e;
}

inline std::string serialize(const Envelope& e) {
  json j;
  j["type"] = e.type;
  j["seq"] = e.seq;
  j["t"] = e.t;
  j["payload"] = e.payload;
  return j.dump();
}

}  // namespace monoland::bridge
