#pragma once

// Kinematic world: drone, landing pad, landmark placement, wind and the
// moving platform. Velocity-command model with explicit Euler integration.

#include <monoland/core.hpp>

#include <algorithm>
#include <array>
#include <cmath>

namespace monoland {

struct WorldParams {
  double v_max = 3.0;       // m/s, per command component and on |velocity|
  double wind_max = 2.0;    // m/s
  double v_land_max = 0.5;  // m/s, highest descent speed that still counts as a landing
  double dt = 0.05;         // s, 20 Hz
  double yaw_rate_max = 1.0;
};

/// Kinematic state in the world frame (z up, ground at z = 0).
struct DroneState {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  double yaw = 0.0;
  double time = 0.0;
};

enum class MotionKind { fixed, linear, rotational };

/// Predefined platform motion. `speed` is m/s for linear and rad/s for
/// rotational motion; the pad stays level in both cases.
struct MotionPattern {
  MotionKind kind = MotionKind::fixed;
  double speed = 0.0;
  Vec3 start = Vec3::Zero();
  Vec2 heading{1.0, 0.0};  // linear: unit direction of travel
  Vec2 center{0.0, 0.0};   // rotational: center of rotation

  void validate() const {
    require(std::isfinite(speed) && speed >= 0.0, "motion speed must be >= 0");
    require(start.allFinite(), "motion start must be finite");
    if (kind == MotionKind::fixed) require(speed == 0.0, "static motion must have zero speed");
    if (kind == MotionKind::linear)
      require(std::abs(heading.norm() - 1.0) < 1e-9, "linear heading must be a unit vector");
  }
};

/// Landing pad. `facing` is the yaw of the approach axis: the landmark sits
/// behind the pad along -facing and its disc faces +facing.
struct PadConfig {
  MotionPattern motion;
  double radius = 0.5;
  double facing = 0.0;

  void validate() const {
    require(radius > 0.0, "pad radius must be > 0");
    motion.validate();
  }
};

struct LandmarkConfig {
  double offset_from_pad = 1.0;          // m behind the pad center
  double height = 0.5;                   // m, disc center above ground
  double inclination = deg_to_rad(20.0); // disc plane tilt from vertical, toward the approach corridor
  double diameter = 0.5;                 // m
  std::array<double, 2> band_edges{deg_to_rad(12.0), deg_to_rad(25.0)};

  void validate() const {
    require(diameter > 0.0, "landmark diameter must be > 0");
    require(height > 0.0, "landmark height must be > 0");
    require(0.0 < band_edges[0] && band_edges[0] < band_edges[1] && band_edges[1] < kPi / 2.0,
            "band edges must satisfy 0 < e0 < e1 < pi/2");
    require(std::abs(inclination) < kPi / 2.0, "inclination must be within (-pi/2, pi/2)");
  }
};

struct WindState {
  Vec2 velocity = Vec2::Zero();
  double gust_amplitude = 0.0;  // m/s along the mean wind direction
  double gust_period = 0.0;     // s; 0 disables gusts

  void validate(const WorldParams& params) const {
    require(velocity.allFinite(), "wind must be finite");
    require(velocity.norm() <= params.wind_max + 1e-12, "wind exceeds wind_max");
    require(gust_amplitude >= 0.0 && gust_period >= 0.0, "gust parameters must be >= 0");
  }

  /// Horizontal drift velocity at time t.
  Vec2 drift(double t) const {
    if (gust_period <= 0.0 || gust_amplitude == 0.0 || velocity.norm() == 0.0) return velocity;
    const double g = gust_amplitude * std::sin(2.0 * kPi * t / gust_period);
    return velocity + g * velocity.normalized();
  }
};

/// Velocity command in the body frame (x forward, y left, z up).
struct ControlCommand {
  Vec3 v_cmd = Vec3::Zero();
  double yaw_rate = 0.0;
  bool land = false;

  bool within_bounds(const WorldParams& params) const {
    if (!v_cmd.allFinite() || !std::isfinite(yaw_rate)) return false;
    for (int i = 0; i < 3; ++i)
      if (std::abs(v_cmd[i]) > params.v_max) return false;
    return std::abs(yaw_rate) <= params.yaw_rate_max;
  }

  ControlCommand clamped(const WorldParams& params) const {
    ControlCommand out = *this;
    for (int i = 0; i < 3; ++i) out.v_cmd[i] = std::clamp(v_cmd[i], -params.v_max, params.v_max);
    out.yaw_rate = std::clamp(yaw_rate, -params.yaw_rate_max, params.yaw_rate_max);
    return out;
  }

  bool operator==(const ControlCommand&) const = default;
};

/// One explicit Euler step of the kinematic model.
inline DroneState step(const DroneState& state, const ControlCommand& cmd, const WindState& wind, double dt,
                       const WorldParams& params = {}) {
  require(std::isfinite(dt) && dt > 0.0, "dt must be finite and > 0");
  require(state.position.allFinite() && state.velocity.allFinite() && std::isfinite(state.yaw) &&
              std::isfinite(state.time),
          "drone state must be finite");
  require(cmd.within_bounds(params), "command out of bounds");
  require(wind.velocity.allFinite(), "wind must be finite");

  Vec3 commanded = rotate_z(cmd.v_cmd, state.yaw);
  const double speed = commanded.norm();
  if (speed > params.v_max) commanded *= params.v_max / speed;

  const Vec2 drift = wind.drift(state.time);
  const Vec3 velocity = commanded + Vec3(drift.x(), drift.y(), 0.0);

  DroneState next;
  next.position = state.position + velocity * dt;
  if (next.position.z() < 0.0) next.position.z() = 0.0;
  next.velocity = velocity;
  next.yaw = wrap_angle(state.yaw + cmd.yaw_rate * dt);
  next.time = state.time + dt;
  return next;
}

/// Pad center at time t for a motion pattern.
inline Vec3 platform_pose(const MotionPattern& pattern, double t) {
  require(t >= 0.0, "platform time must be >= 0");
  switch (pattern.kind) {
    case MotionKind::fixed:
      return pattern.start;
    case MotionKind::linear: {
      const Vec2 d = pattern.heading * (pattern.speed * t);
      return pattern.start + Vec3(d.x(), d.y(), 0.0);
    }
    case MotionKind::rotational: {
      const Vec2 rel(pattern.start.x() - pattern.center.x(), pattern.start.y() - pattern.center.y());
      const Vec2 p = pattern.center + rotate_2d(rel, pattern.speed * t);
      return {p.x(), p.y(), pattern.start.z()};
    }
  }
  return pattern.start;
}

/// World pose of the landmark disc for a given pad center.
struct LandmarkPose {
  Vec3 center;
  Vec3 normal;  // unit, pointing toward the approach corridor
};

inline LandmarkPose landmark_pose(const LandmarkConfig& lm, const Vec3& pad_center, double facing) {
  const Vec2 f = heading_vector(facing);
  LandmarkPose pose;
  pose.center = Vec3(pad_center.x() - lm.offset_from_pad * f.x(), pad_center.y() - lm.offset_from_pad * f.y(),
                     pad_center.z() + lm.height);
  pose.normal = Vec3(std::cos(lm.inclination) * f.x(), std::cos(lm.inclination) * f.y(), std::sin(lm.inclination));
  return pose;
}

/// Drone position relative to the pad, in the approach frame: depth along the
/// facing axis, lateral along facing + 90 degrees, altitude above ground.
struct RelativePosition {
  double depth = 0.0;
  double lateral = 0.0;
  double altitude = 0.0;
};

inline RelativePosition relative_to_pad(const Vec3& drone, const Vec3& pad_center, double facing) {
  const Vec2 d(drone.x() - pad_center.x(), drone.y() - pad_center.y());
  const Vec2 r = rotate_2d(d, -facing);
  return {r.x(), r.y(), drone.z()};
}

struct TouchdownOutcome {
  enum class Kind { airborne, landed, crashed };
  Kind kind = Kind::airborne;
  double lateral_displacement = 0.0;  // m, meaningful for landed and crashed

  bool landed() const { return kind == Kind::landed; }
  bool touched_down() const { return kind != Kind::airborne; }
};

/// Classifies the transition `before -> after` driven by `cmd`. Touchdown is
/// the step on which z reaches 0; it is a landing only when the land flag was
/// set and the descent speed did not exceed v_land_max.
inline TouchdownOutcome touchdown_outcome(const DroneState& before, const DroneState& after, const ControlCommand& cmd,
                                          const PadConfig& pad, const WorldParams& params = {}) {
  TouchdownOutcome out;
  if (!(before.position.z() > 0.0 && after.position.z() <= 0.0)) return out;
  const Vec3 pad_center = platform_pose(pad.motion, after.time);
  out.lateral_displacement =
      Vec2(after.position.x() - pad_center.x(), after.position.y() - pad_center.y()).norm();
  const double descent_speed = -after.velocity.z();
  out.kind = (cmd.land && descent_speed <= params.v_land_max + 1e-12) ? TouchdownOutcome::Kind::landed
                                                                       : TouchdownOutcome::Kind::crashed;
  return out;
}

}  // namespace monoland
