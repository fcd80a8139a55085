#pragma once

// One live session: its own simulator, estimator, policy and blend state.
// Transport-free; the server feeds it lines and calls tick() at the sim rate.

#include <monoland/bridge/protocol.hpp>
#include <monoland/config.hpp>
#include <monoland/harness.hpp>
#include <monoland/shared.hpp>

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace monoland::bridge {

struct SessionAssets {
  std::shared_ptr<const EstimatorModel> estimator;
  std::shared_ptr<const std::vector<agent::PolicySnapshot>> policies;
};

/// {v: [vx, vy, vz], yaw_rate, land}; missing fields are zero/false.
inline ControlCommand command_from_json(const json& p) {
  ControlCommand c;
  if (p.contains("v")) {
    const auto& v = p.at("v");
    if (!v.is_array() || v.size() != 3) throw InvalidInput("v must be an array of 3 numbers");
    for (std::size_t i = 0; i < 3; ++i) {
      if (!v[i].is_number()) throw InvalidInput("v must be an array of 3 numbers");
      c.v_cmd[static_cast<Eigen::Index>(i)] = v[i].get<double>();
    }
  }
  if (p.contains("yaw_rate")) {
    if (!p["yaw_rate"].is_number()) throw InvalidInput("yaw_rate must be a number");
    c.yaw_rate = p["yaw_rate"].get<double>();
  }
  if (p.contains("land")) {
    if (!p["land"].is_boolean()) throw InvalidInput("land must be a boolean");
    c.land = p["land"].get<bool>();
  }
  if (!c.v_cmd.allFinite() || !std::isfinite(c.yaw_rate)) throw InvalidInput("command must be finite");
  return c;
}

inline json telemetry_payload(const shared::SharedEpisode& ep, std::size_t tick) {
  const FlightStep& s = ep.flight().current();
  const FlightConfig& cfg = ep.flight().config();
  json p;
  p["tick"] = tick;
  p["drone"] = {{"position", harness::vec_json(s.state.position)},
                {"velocity", harness::vec_json(s.state.velocity)},
                {"yaw", s.state.yaw}};
  p["pad"] = {{"center", harness::vec_json(s.pad_center)}, {"facing", cfg.pad.facing}, {"radius", cfg.pad.radius}};
  p["observation"] = harness::observation_json(s.observation);
  p["estimate"] = harness::estimate_json(s.estimate);
  if (!ep.trajectory().steps.empty()) {
    const auto& last = ep.trajectory().steps.back();
    p["command"] = harness::command_json(last.flight.command);
    p["human_command"] = harness::command_json(last.human_command);
    p["ai_command"] = harness::command_json(last.ai_command);
    p["alpha"] = last.alpha;
    p["conflict"] = last.conflict;
  } else {
    p["command"] = nullptr;
    p["human_command"] = nullptr;
    p["ai_command"] = nullptr;
    p["alpha"] = nullptr;
    p["conflict"] = nullptr;
  }
  const Vec2 w = cfg.wind.drift(s.state.time);
  p["wind"] = json::array({w.x(), w.y()});
  p["status"] = std::string(to_string(s.status));
  return p;
}

class Session {
 public:
  enum class Phase { handshake, idle, running, stopped, finished };

  Session(Config config, SessionAssets assets) : config_(std::move(config)), assets_(std::move(assets)) {
    require(assets_.estimator && assets_.policies && !assets_.policies->empty(), "session needs an estimator and a policy");
    const auto list = scenarios_for(config_, harness::SuiteKind::static_pad);
    const std::size_t id = config_.bridge.start_scenario;
    require(id >= 1 && id <= list.size(), "bridge start scenario out of range");
    scenario_ = list[id - 1];
    alpha_max_ = config_.blend.alpha_max;
  }

  Phase phase() const { return phase_; }
  bool closed() const { return closed_; }
  bool running() const { return phase_ == Phase::running; }
  const shared::SharedEpisode* episode() const { return episode_ ? &*episode_ : nullptr; }
  const harness::ScenarioConfig& scenario() const { return scenario_; }
  /// Live pilot commands in the form a replay accepts.
  const std::vector<shared::CommandLogEntry>& command_log() const { return log_; }
  double time() const { return episode_ ? episode_->flight().state().time : 0.0; }

  /// Handles one inbound line; returns the replies to send, in order.
  std::vector<std::string> handle(const std::string& line) {
    out_.clear();
    try {
      const Envelope in = parse_envelope(line);
      if (last_in_ && in.seq <= *last_in_) throw ProtocolError("seq must be strictly increasing", in.seq);
      last_in_ = in.seq;
      dispatch(in);
    } catch (const ProtocolError& e) {
      error(e.what(), e.seq());
    }
    return std::move(out_);
  }

  /// One sim tick. Returns telemetry, and metrics when the episode ends.
  std::vector<std::string> tick() {
    out_.clear();
    if (phase_ != Phase::running) return std::move(out_);
    const double t = episode_->flight().state().time;
    episode_->tick(hold_.at(t));
    ++ticks_;
    emit("telemetry", telemetry_payload(*episode_, ticks_));
    if (episode_->finished()) {
      phase_ = Phase::finished;
      const harness::MetricsRecord m =
          harness::compute_metrics(scenario_, episode_->trajectory(), config_.flight.pad, config_.harness.metrics);
      emit("metrics", harness::to_json(m));
    }
    return std::move(out_);
  }

 private:
  void dispatch(const Envelope& in) {
    if (phase_ == Phase::handshake && in.type != "hello") throw ProtocolError("hello required first", in.seq);
    if (in.type == "hello") return on_hello(in);
    if (in.type == "configure") return on_configure(in);
    if (in.type == "start") return on_start(in);
    if (in.type == "stop") return on_stop(in);
    if (in.type == "pilot_cmd") return on_pilot_cmd(in);
    if (in.type == "set_alpha_max") return on_set_alpha_max(in);
    throw ProtocolError("unknown message type: " + in.type, in.seq);
  }

  void on_hello(const Envelope& in) {
    if (phase_ != Phase::handshake) throw ProtocolError("hello already received", in.seq);
    const json& v = in.payload.contains("version") ? in.payload["version"] : json();
    if (!v.is_number_integer() || v.get<long long>() != kProtocolVersion) {
      error("unsupported protocol version", in.seq);
      closed_ = true;
      return;
    }
    phase_ = Phase::idle;
    emit("hello", {{"version", kProtocolVersion},
                   {"capabilities", {"telemetry", "metrics", "pilot_cmd", "set_alpha_max", "command_log", "websocket"}},
                   {"tick_rate_hz", config_.bridge.tick_rate_hz}});
  }

  void on_configure(const Envelope& in) {
    if (phase_ == Phase::running) throw ProtocolError("cannot configure a running episode", in.seq);
    const json& p = in.payload;
    harness::ScenarioConfig next = scenario_;
    double alpha = alpha_max_;
    std::size_t policy = policy_index_;
    try {
      std::string suite = "static";
      if (p.contains("suite")) suite = p.at("suite").get<std::string>();
      if (suite != "static" && suite != "dynamic") throw InvalidInput("suite must be static or dynamic");
      const auto kind = suite == "static" ? harness::SuiteKind::static_pad : harness::SuiteKind::dynamic_pad;
      const auto list = scenarios_for(config_, kind);
      std::size_t id = 1;
      if (p.contains("scenario")) id = p.at("scenario").get<std::size_t>();
      if (id < 1 || id > list.size()) throw InvalidInput("scenario id out of range");
      next = list[id - 1];
      if (p.contains("seed")) next.seed = p.at("seed").get<std::uint64_t>();
      if (p.contains("alpha_max")) alpha = p.at("alpha_max").get<double>();
      if (alpha < 0.0 || alpha > 1.0) throw InvalidInput("alpha_max must be within [0, 1]");
      if (p.contains("policy")) policy = p.at("policy").get<std::size_t>();
      if (policy >= assets_.policies->size()) throw InvalidInput("policy index out of range");
    } catch (const json::exception& e) {
      throw ProtocolError(std::string("bad configure payload: ") + e.what(), in.seq);
    } catch (const InvalidInput& e) {
      throw ProtocolError(e.what(), in.seq);
    }
    scenario_ = next;
    alpha_max_ = alpha;
    policy_index_ = policy;
    emit("configure", {{"suite", scenario_.kind == harness::SuiteKind::static_pad ? "static" : "dynamic"},
                       {"scenario", scenario_.id},
                       {"seed", scenario_.seed},
                       {"alpha_max", alpha_max_},
                       {"policy", policy_index_}});
  }

  void on_start(const Envelope& in) {
    if (phase_ == Phase::running) throw ProtocolError("episode already running", in.seq);
    shared::CommandHold hold(config_.bridge.command_staleness);
    replaying_ = false;
    if (in.payload.contains("command_log")) {
      std::vector<shared::CommandLogEntry> log;
      try {
        const json& l = in.payload["command_log"];
        if (l.is_string()) {
          log = shared::parse_command_log(l.get<std::string>());
        } else if (l.is_array()) {
          for (const auto& row : l) log.push_back({row.at("t").get<double>(), command_from_json(row)});
        } else {
          throw InvalidInput("command_log must be CSV text or an array");
        }
        for (const auto& e : log) {
          if (!e.command.within_bounds(config_.flight.world)) throw InvalidInput("command out of bounds");
          hold.push(e.t, e.command);
        }
      } catch (const std::exception& e) {
        throw ProtocolError(std::string("bad command_log: ") + e.what(), in.seq);
      }
      replaying_ = true;
    }
    const FlightConfig fc = harness::flight_config_for(scenario_, config_.flight);
    shared::BlendConfig blend = config_.blend;
    blend.alpha_max = alpha_max_;
    episode_.emplace((*assets_.policies)[policy_index_], fc, *assets_.estimator,
                     harness::start_state_for(scenario_, fc.pad), scenario_.seed, blend);
    hold_ = std::move(hold);
    log_.clear();
    ticks_ = 0;
    phase_ = Phase::running;
    emit("start", {{"scenario", scenario_.id}, {"seed", scenario_.seed}, {"replay", replaying_}});
  }

  void on_stop(const Envelope& in) {
    if (phase_ != Phase::running) throw ProtocolError("no running episode", in.seq);
    phase_ = Phase::stopped;
    emit("stop", {{"ticks", ticks_}, {"status", std::string(to_string(episode_->flight().status()))}});
  }

  void on_pilot_cmd(const Envelope& in) {
    ControlCommand c;
    try {
      c = command_from_json(in.payload);
    } catch (const InvalidInput& e) {
      throw ProtocolError(e.what(), in.seq);
    }
    if (!c.within_bounds(config_.flight.world)) throw ProtocolError("command out of bounds", in.seq);
    if (phase_ != Phase::running) throw ProtocolError("no running episode", in.seq);
    if (replaying_) throw ProtocolError("episode is replaying a command log", in.seq);
    const double t = time();
    hold_.push(t, c);
    log_.push_back({t, c});
  }

  void on_set_alpha_max(const Envelope& in) {
    const json& v = in.payload.contains("alpha_max") ? in.payload["alpha_max"] : json();
    if (!v.is_number()) throw ProtocolError("alpha_max must be a number", in.seq);
    const double a = v.get<double>();
    if (!(a >= 0.0 && a <= 1.0)) throw ProtocolError("alpha_max must be within [0, 1]", in.seq);
    alpha_max_ = a;
    if (episode_) episode_->set_alpha_max(a);
    emit("set_alpha_max", {{"alpha_max", a}});
  }

  void emit(const std::string& type, json payload) {
    out_.push_back(serialize({type, ++seq_, time(), std::move(payload)}));
  }

  void error(const std::string& message, std::optional<std::uint64_t> offender) {
    emit("error", {{"message", message}, {"offender_seq", offender ? json(*offender) : json(nullptr)}});
  }

  Config config_;
  SessionAssets assets_;
  harness::ScenarioConfig scenario_;
  double alpha_max_ = 0.6;
  std::size_t policy_index_ = 0;
  Phase phase_ = Phase::handshake;
  bool closed_ = false;
  bool replaying_ = false;
  std::optional<shared::SharedEpisode> episode_;
  shared::CommandHold hold_;
  std::vector<shared::CommandLogEntry> log_;
  std::size_t ticks_ = 0;
  std::uint64_t seq_ = 0;
  std::optional<std::uint64_t> last_in_;
  std::vector<std::string> out_;
};

}  // namespace monoland::bridge
