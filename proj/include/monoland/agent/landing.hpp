#pragma once

// The landing task as a tabular RL problem: actions, reward, training
// environment, policy snapshot and greedy rollouts.

#include <monoland/agent/encoding.hpp>
#include <monoland/agent/qlearning.hpp>
#include <monoland/binary_io.hpp>
#include <monoland/flight.hpp>

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace monoland::agent {

/// 27 body-velocity directions {-1, 0, +1}^3 times `speed`, plus LAND.
/// Velocities are relative to the tracked pad: the command adds the pad
/// velocity estimated by the flight's PadMotionTracker. LAND is a committed
/// maneuver held until touchdown: descend at `land_descent` with the land
/// flag set while steering the estimated horizontal offset to zero with gain
/// `land_gain`, capped at `speed`.
struct ActionSpec {
  static constexpr std::size_t kCount = 28;
  static constexpr std::size_t kLand = 27;

  double speed = 1.0;
  double land_descent = 0.4;
  double land_gain = 2.0;  // 1/s
  std::size_t hold_ticks = 4;  // ticks each decision is held for

  static constexpr std::size_t count() { return kCount; }

  /// Body-frame unit-grid direction of a velocity action.
  static Vec3 direction(std::size_t action) {
    require(action < kLand, "not a velocity action");
    const int a = static_cast<int>(action);
    return {static_cast<double>(a / 9 - 1), static_cast<double>((a / 3) % 3 - 1), static_cast<double>(a % 3 - 1)};
  }

  /// The pad-relative part of an action, in the body frame. LAND needs the
  /// current estimate and the body heading relative to the approach frame.
  ControlCommand relative_command(std::size_t action, const std::optional<PositionEstimate>& est = std::nullopt,
                                  double relative_yaw = 0.0) const {
    require(action < kCount, "action index out of range");
    ControlCommand c;
    if (action == kLand) {
      Vec2 v = Vec2::Zero();
      if (est) {
        v = -land_gain * Vec2(est->depth, est->lateral_offset);
        if (v.norm() > speed) v *= speed / v.norm();
      }
      c.v_cmd = rotate_z(Vec3(v.x(), v.y(), -land_descent), -relative_yaw);
      c.land = true;
    } else {
      c.v_cmd = speed * direction(action);
    }
    return c;
  }

  void validate(const WorldParams& world) const {
    require(speed > 0.0 && speed <= world.v_max, "action speed must be within (0, v_max]");
    require(land_descent > 0.0 && land_descent <= world.v_land_max, "land descent must be within (0, v_land_max]");
    require(land_gain >= 0.0, "land gain must be >= 0");
    require(hold_ticks >= 1, "hold ticks must be >= 1");
  }

  bool operator==(const ActionSpec&) const = default;
};

struct ActionCommand {
  ControlCommand command;   // what the drone is told to fly
  ControlCommand relative;  // pad-relative part, used for dead reckoning
};

/// Full command for an action given the current flight: relative part plus
/// the tracked pad velocity rotated into the body frame, clamped to bounds.
inline ActionCommand command_for(const ActionSpec& spec, std::size_t action, const Flight& flight) {
  ActionCommand out;
  out.relative = spec.relative_command(action, flight.current().estimate, flight.relative_yaw());
  const Vec2 pad_v = flight.tracker().velocity();
  const Vec3 ff = rotate_z(Vec3(pad_v.x(), pad_v.y(), 0.0), -flight.relative_yaw());
  out.command = out.relative;
  out.command.v_cmd += ff;
  out.command = out.command.clamped(flight.config().world);
  return out;
}

/// The command issued when there is no estimate to act on: hold position
/// relative to the tracked pad.
inline ActionCommand hover_command(const Flight& flight) {
  ActionCommand out;
  const Vec2 pad_v = flight.tracker().velocity();
  out.command.v_cmd = rotate_z(Vec3(pad_v.x(), pad_v.y(), 0.0), -flight.relative_yaw());
  out.command = out.command.clamped(flight.config().world);
  return out;
}

struct RewardSpec {
  double w_progress = 1.0;
  double w_time = -0.01;
  double land_bonus = 100.0;
  double land_scale = 0.1;  // m
  double crash = -100.0;
  double out_of_bounds = -50.0;
  double progress_clip = 0.5;  // bound on the per-step progress term

  void validate() const {
    require(crash < 0.0 && land_bonus > 0.0, "rewards must satisfy crash < 0 < land");
    require(land_scale > 0.0 && progress_clip > 0.0, "reward scales must be > 0");
  }

  bool operator==(const RewardSpec&) const = default;
};

inline double estimate_distance(const PositionEstimate& e) {
  return std::sqrt(e.depth * e.depth + e.lateral_offset * e.lateral_offset + e.altitude * e.altitude);
}

/// Per-tick reward. Progress is the decrease of the estimated distance to the
/// pad; terminal terms follow the flight status after the tick.
inline double reward(const std::optional<PositionEstimate>& prev, const std::optional<PositionEstimate>& next,
                     std::size_t /*action*/, FlightStatus status, double lateral_displacement,
                     const RewardSpec& spec) {
  double r = spec.w_time;
  if (prev && next) {
    const double progress = estimate_distance(*prev) - estimate_distance(*next);
    r += std::clamp(spec.w_progress * progress, -spec.progress_clip, spec.progress_clip);
  }
  switch (status) {
    case FlightStatus::landed:
      r += spec.land_bonus * std::exp(-lateral_displacement / spec.land_scale);
      break;
    case FlightStatus::crashed: r += spec.crash; break;
    case FlightStatus::out_of_bounds: r += spec.out_of_bounds; break;
    case FlightStatus::running:
    case FlightStatus::timed_out: break;
  }
  return r;
}

inline EncodedState encode(const FlightStep& step, const BinScheme& bins) {
  require(step.estimate.has_value(), "cannot encode a step without an estimate");
  return encode(*step.estimate, step.color, bins);
}

struct PolicySnapshot {
  static constexpr std::uint16_t kVersion = 1;

  QTable q;
  BinScheme bins;
  ActionSpec actions;
  QLearningParams params;
  std::uint64_t episodes = 0;
  std::uint64_t seed = 0;

  void validate() const {
    require(q.state_count() == bins.state_count(), "Q table rows must match the state count");
    require(q.action_count() == ActionSpec::count(), "Q table columns must match the action count");
    require(q.all_finite(), "Q table must be finite");
  }

  std::vector<std::uint8_t> to_bytes() const;
  static PolicySnapshot from_bytes(std::vector<std::uint8_t> bytes);
  void save(const std::string& path) const { ByteWriter::write_file(path, to_bytes()); }
  static PolicySnapshot load(const std::string& path) { return from_bytes(ByteReader::read_file(path)); }

  bool operator==(const PolicySnapshot&) const = default;
};

namespace detail {
inline void write_edges(ByteWriter& w, const std::vector<double>& e) {
  w.u32(static_cast<std::uint32_t>(e.size()));
  for (double v : e) w.f64(v);
}
inline std::vector<double> read_edges(ByteReader& r) {
  const std::uint32_t n = r.u32();
  if (n > 4096) throw FormatError("implausible bin edge count");
  std::vector<double> e(n);
  for (auto& v : e) v = r.f64();
  return e;
}
}  // namespace detail

inline std::vector<std::uint8_t> PolicySnapshot::to_bytes() const {
  ByteWriter w;
  w.magic("LLQP");
  w.u16(kVersion);
  detail::write_edges(w, bins.altitude_edges);
  detail::write_edges(w, bins.depth_edges);
  detail::write_edges(w, bins.lateral_edges);
  w.f64(bins.confidence_threshold);
  w.f64(actions.speed);
  w.f64(actions.land_descent);
  w.f64(actions.land_gain);
  w.u32(static_cast<std::uint32_t>(actions.hold_ticks));
  w.f64(params.alpha);
  w.f64(params.gamma);
  w.f64(params.epsilon_start);
  w.f64(params.epsilon_end);
  w.f64(params.decay_fraction);
  w.u64(params.max_steps);
  w.u64(episodes);
  w.u64(seed);
  w.u32(static_cast<std::uint32_t>(q.state_count()));
  w.u32(static_cast<std::uint32_t>(q.action_count()));
  for (double v : q.values()) w.f64(v);
  return w.bytes();
}

inline PolicySnapshot PolicySnapshot::from_bytes(std::vector<std::uint8_t> bytes) {
  ByteReader r(std::move(bytes));
  r.expect_magic("LLQP");
  const std::uint16_t version = r.u16();
  if (version != kVersion) throw FormatError("unsupported policy version " + std::to_string(version));
  PolicySnapshot p;
  p.bins.altitude_edges = detail::read_edges(r);
  p.bins.depth_edges = detail::read_edges(r);
  p.bins.lateral_edges = detail::read_edges(r);
  p.bins.confidence_threshold = r.f64();
  p.actions.speed = r.f64();
  p.actions.land_descent = r.f64();
  p.actions.land_gain = r.f64();
  p.actions.hold_ticks = r.u32();
  p.params.alpha = r.f64();
  p.params.gamma = r.f64();
  p.params.epsilon_start = r.f64();
  p.params.epsilon_end = r.f64();
  p.params.decay_fraction = r.f64();
  p.params.max_steps = r.u64();
  p.episodes = r.u64();
  p.seed = r.u64();
  const std::uint32_t states = r.u32();
  const std::uint32_t actions = r.u32();
  p.q = QTable(states, actions);
  for (auto& v : p.q.values()) v = r.f64();
  if (!r.at_end()) throw FormatError("trailing bytes in policy file");
  p.validate();
  return p;
}

/// Greedy controller around a policy. Holds LAND once chosen. States the
/// policy never visited during training get no action: the drone hovers
/// relative to the pad instead of taking the tie-break action.
class Autopilot {
 public:
  explicit Autopilot(const PolicySnapshot& policy) : policy_(&policy) {}

  struct Decision {
    std::optional<std::size_t> action;  // empty when there is no estimate yet
    ActionCommand command;
  };

  Decision decide(const Flight& flight) {
    Decision d;
    if (held_ && (landing_ || hold_left_ > 0)) {
      d.action = held_;
    } else if (flight.current().estimate) {
      const EncodedState s = encode(flight.current(), policy_->bins);
      if (visited(policy_->q.row(s.index))) {
        d.action = greedy_action(policy_->q.row(s.index));
        held_ = d.action;
        hold_left_ = policy_->actions.hold_ticks;
        landing_ = *d.action == ActionSpec::kLand;
      } else {
        held_.reset();
      }
    }
    if (hold_left_ > 0) --hold_left_;
    d.command = d.action ? command_for(policy_->actions, *d.action, flight) : hover_command(flight);
    return d;
  }

  bool landing() const { return landing_; }

 private:
  const PolicySnapshot* policy_;
  std::optional<std::size_t> held_;
  std::size_t hold_left_ = 0;
  bool landing_ = false;
};

/// Start poses for training episodes: distance and bearing from the pad,
/// altitude, each jittered; optionally a moving pad.
struct StartDistribution {
  double distance_min = 5.0;
  double distance_max = 15.0;
  double bearing_max = deg_to_rad(30.0);
  double altitude = 2.5;
  double jitter = 1.0;  // m, uniform on depth, lateral and altitude
  double moving_fraction = 0.3;
  double linear_speed_max = 1.75;          // m/s
  double rotation_rate_max = deg_to_rad(12.5);  // rad/s
  double rotation_radius = 3.0;            // m

  bool operator==(const StartDistribution&) const = default;
};

/// Pad-relative start pose facing the landmark.
inline DroneState start_pose(const PadConfig& pad, double depth, double lateral, double altitude) {
  const Vec3 c = platform_pose(pad.motion, 0.0);
  const Vec2 rel = rotate_2d(Vec2(depth, lateral), pad.facing);
  DroneState s;
  s.position = Vec3(c.x() + rel.x(), c.y() + rel.y(), altitude);
  s.yaw = wrap_angle(pad.facing + kPi);
  return s;
}

/// Linear motion away from the approach corridor.
inline MotionPattern receding_motion(const PadConfig& pad, double speed) {
  MotionPattern m;
  m.kind = speed > 0.0 ? MotionKind::linear : MotionKind::fixed;
  m.speed = speed;
  m.start = pad.motion.start;
  m.heading = -heading_vector(pad.facing);
  return m;
}

/// Rotation about a center `radius` to the pad's left (facing + 90 degrees).
inline MotionPattern circling_motion(const PadConfig& pad, double rate, double radius) {
  MotionPattern m;
  m.kind = rate > 0.0 ? MotionKind::rotational : MotionKind::fixed;
  m.speed = rate;
  m.start = pad.motion.start;
  const Vec2 s(m.start.x(), m.start.y());
  m.center = s + radius * heading_vector(pad.facing + kPi / 2.0);
  return m;
}

class LandingEnv {
 public:
  LandingEnv(const FlightConfig& base, const EstimatorModel& model, BinScheme bins = {}, ActionSpec actions = {},
             RewardSpec rewards = {}, StartDistribution starts = {})
      : base_(base), model_(&model), bins_(std::move(bins)), actions_(actions), rewards_(rewards), starts_(starts) {
    base_.validate();
    bins_.validate();
    actions_.validate(base_.world);
    rewards_.validate();
  }

  std::size_t state_count() const { return bins_.state_count(); }
  std::size_t action_count() const { return ActionSpec::count(); }
  const BinScheme& bins() const { return bins_; }
  const ActionSpec& actions() const { return actions_; }
  const Flight& flight() const { return *flight_; }

  std::size_t reset(Rng& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int tries = 0; tries < 1000; ++tries) {
      FlightConfig cfg = base_;
      if (unit(rng) < starts_.moving_fraction) {
        if (unit(rng) < 0.5)
          cfg.pad.motion = receding_motion(cfg.pad, starts_.linear_speed_max * unit(rng));
        else
          cfg.pad.motion = circling_motion(cfg.pad, starts_.rotation_rate_max * unit(rng), starts_.rotation_radius);
      }
      const double dist = starts_.distance_min + (starts_.distance_max - starts_.distance_min) * unit(rng);
      const double bearing = starts_.bearing_max * (2.0 * unit(rng) - 1.0);
      const double j = starts_.jitter;
      const double depth = dist * std::cos(bearing) + j * (2.0 * unit(rng) - 1.0);
      const double lateral = dist * std::sin(bearing) + j * (2.0 * unit(rng) - 1.0);
      const double altitude = std::max(0.3, starts_.altitude + j * (2.0 * unit(rng) - 1.0));
      const std::uint64_t noise_seed = rng();
      flight_.emplace(cfg, *model_, start_pose(cfg.pad, depth, lateral, altitude), noise_seed);
      if (flight_->current().estimate) return encode(flight_->current(), bins_).index;
    }
    throw std::runtime_error("no start pose with a visible landmark");
  }

  /// One decision, held for `hold_ticks` ticks. LAND runs the descent to its
  /// end inside a single step.
  Transition step(std::size_t action) {
    require(flight_ && !flight_->finished(), "environment needs a reset");
    double total = 0.0;
    std::size_t ticks = 0;
    do {
      const std::optional<PositionEstimate> prev = flight_->current().estimate;
      const ActionCommand c = command_for(actions_, action, *flight_);
      const FlightStep& now = flight_->advance(c.command, c.relative);
      total += reward(prev, now.estimate, action, now.status, now.outcome.lateral_displacement, rewards_);
      ++ticks;
    } while (!flight_->finished() && (action == ActionSpec::kLand || ticks < actions_.hold_ticks));

    Transition t;
    t.reward = total;
    const FlightStatus st = flight_->status();
    t.terminal = st == FlightStatus::landed || st == FlightStatus::crashed || st == FlightStatus::out_of_bounds;
    t.truncated = st == FlightStatus::timed_out;
    t.next_state = t.terminal ? bins_.terminal_state() : encode(flight_->current(), bins_).index;
    return t;
  }

 private:
  FlightConfig base_;
  const EstimatorModel* model_;
  BinScheme bins_;
  ActionSpec actions_;
  RewardSpec rewards_;
  StartDistribution starts_;
  std::optional<Flight> flight_;
};

/// Trains a policy on the landing environment.
struct TrainedPolicy {
  PolicySnapshot policy;
  std::vector<EpisodeStat> curve;
};

inline TrainedPolicy train_policy(LandingEnv& env, const QLearningParams& params, std::size_t episodes,
                                  std::uint64_t seed) {
  TrainResult r = train(env, params, episodes, seed);
  TrainedPolicy out;
  out.policy.q = std::move(r.q);
  out.policy.bins = env.bins();
  out.policy.actions = env.actions();
  out.policy.params = params;
  out.policy.episodes = episodes;
  out.policy.seed = seed;
  out.curve = std::move(r.curve);
  return out;
}

struct TrajectoryStep {
  FlightStep flight;
  std::optional<std::size_t> action;
  ControlCommand ai_command;
  ControlCommand human_command;
  double alpha = 1.0;
  double conflict = 0.0;
  double reward = 0.0;
};

struct Trajectory {
  FlightStep initial;
  std::vector<TrajectoryStep> steps;

  FlightStatus status() const { return steps.empty() ? initial.status : steps.back().flight.status; }
  const FlightStep& last() const { return steps.empty() ? initial : steps.back().flight; }
};

/// Greedy rollout of `policy` from `start` until the flight ends.
inline Trajectory rollout(const PolicySnapshot& policy, const FlightConfig& config, const EstimatorModel& model,
                          const DroneState& start, std::uint64_t noise_seed, const RewardSpec& rewards = {}) {
  Flight flight(config, model, start, noise_seed);
  Autopilot pilot(policy);
  Trajectory traj;
  traj.initial = flight.current();
  traj.steps.reserve(config.max_ticks);
  while (!flight.finished()) {
    const std::optional<PositionEstimate> prev = flight.current().estimate;
    const Autopilot::Decision d = pilot.decide(flight);
    const FlightStep& now = flight.advance(d.command.command, d.command.relative);
    TrajectoryStep ts;
    ts.flight = now;
    ts.action = d.action;
    ts.ai_command = d.command.command;
    ts.reward = reward(prev, now.estimate, d.action.value_or(0), now.status, now.outcome.lateral_displacement, rewards);
    traj.steps.push_back(std::move(ts));
  }
  return traj;
}

}  // namespace monoland::agent
