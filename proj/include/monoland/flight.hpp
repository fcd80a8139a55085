#pragma once

// One simulated flight: world stepping, camera observation, noise, position
// estimate and pad-motion tracking, advanced one tick at a time.

#include <monoland/optics.hpp>
#include <monoland/perception.hpp>
#include <monoland/world.hpp>

#include <cstdint>
#include <deque>
#include <optional>
#include <string_view>

namespace monoland {

/// Region outside of which an episode is abandoned, in the approach frame.
struct FlightBounds {
  double depth_min = -3.0;
  double depth_max = 25.0;
  double lateral_max = 12.0;
  double altitude_max = 10.0;

  bool contains(const RelativePosition& r) const {
    return r.depth >= depth_min && r.depth <= depth_max && std::abs(r.lateral) <= lateral_max &&
           r.altitude <= altitude_max;
  }
};

struct FlightConfig {
  WorldParams world;
  CameraIntrinsics camera;
  LandmarkConfig landmark;
  PadConfig pad;
  WindState wind;
  NoiseModel noise;
  FlightBounds bounds;
  double staleness_horizon = 1.0;
  std::size_t max_ticks = 600;

  void validate() const {
    camera.validate();
    landmark.validate();
    pad.validate();
    wind.validate(world);
    noise.validate();
    require(max_ticks >= 1, "tick cap must be >= 1");
  }
};

enum class FlightStatus { running, landed, crashed, out_of_bounds, timed_out };

inline std::string_view to_string(FlightStatus s) {
  switch (s) {
    case FlightStatus::running: return "running";
    case FlightStatus::landed: return "landed";
    case FlightStatus::crashed: return "crashed";
    case FlightStatus::out_of_bounds: return "out_of_bounds";
    case FlightStatus::timed_out: return "timed_out";
  }
  return "?";
}

/// Estimates the velocity the drone has to hold to stay fixed relative to the
/// pad, from visible estimates and the drone's own commanded displacement:
/// pad displacement minus wind drift = commanded displacement - change of the
/// relative position. A least-squares slope over a sliding window of samples.
class PadMotionTracker {
 public:
  explicit PadMotionTracker(std::size_t window = 20, std::size_t min_samples = 10)
      : window_(window), min_samples_(min_samples) {}

  /// `commanded` is the horizontal command in the approach frame applied
  /// over the interval that ended at time t.
  void advance(double t, const Vec2& commanded, double dt) {
    displacement_ += commanded * dt;
    time_ = t;
  }

  void observe(const PositionEstimate& est) {
    samples_.push_back({time_, displacement_ - Vec2(est.depth, est.lateral_offset)});
    if (samples_.size() > window_) samples_.pop_front();
  }

  bool ready() const { return samples_.size() >= min_samples_; }

  /// Approach-frame velocity; zero until enough samples are in.
  Vec2 velocity() const {
    if (!ready()) return Vec2::Zero();
    double tm = 0.0;
    Vec2 pm = Vec2::Zero();
    for (const auto& s : samples_) {
      tm += s.t;
      pm += s.p;
    }
    const double n = static_cast<double>(samples_.size());
    tm /= n;
    pm /= n;
    double stt = 0.0;
    Vec2 stp = Vec2::Zero();
    for (const auto& s : samples_) {
      stt += (s.t - tm) * (s.t - tm);
      stp += (s.t - tm) * (s.p - pm);
    }
    return stt > 0.0 ? Vec2(stp / stt) : Vec2(Vec2::Zero());
  }

 private:
  struct Sample {
    double t;
    Vec2 p;
  };
  std::size_t window_;
  std::size_t min_samples_;
  std::deque<Sample> samples_;
  Vec2 displacement_ = Vec2::Zero();
  double time_ = 0.0;
};

/// Everything recorded about one tick, after the world has advanced.
struct FlightStep {
  DroneState state;
  Vec3 pad_center = Vec3::Zero();
  RelativePosition truth;
  LandmarkObservation observation;
  std::optional<PositionEstimate> estimate;
  ColorBand color = ColorBand::A;  // band of the last visible observation
  ControlCommand command;
  TouchdownOutcome outcome;
  FlightStatus status = FlightStatus::running;
};

class Flight {
 public:
  Flight(const FlightConfig& config, const EstimatorModel& model, const DroneState& start, std::uint64_t noise_seed)
      : config_(config), model_(&model), rng_(noise_seed) {
    config_.validate();
    require(start.position.allFinite() && start.position.z() >= 0.0, "start position must be finite and above ground");
    current_.state = start;
    current_.state.yaw = wrap_angle(start.yaw);
    sense(ControlCommand{});
    current_.status = FlightStatus::running;
  }

  const FlightConfig& config() const { return config_; }
  const FlightStep& current() const { return current_; }
  const DroneState& state() const { return current_.state; }
  FlightStatus status() const { return current_.status; }
  bool finished() const { return current_.status != FlightStatus::running; }
  std::size_t ticks() const { return ticks_; }
  const PadMotionTracker& tracker() const { return tracker_; }

  /// Heading of the body frame relative to the approach frame.
  double relative_yaw() const { return wrap_angle(current_.state.yaw - config_.pad.facing); }

  /// Applies `command` for one tick. `dead_reckoning` is the part of the
  /// command that moves the drone relative to the pad; it propagates the
  /// estimate while the landmark is out of view.
  const FlightStep& advance(const ControlCommand& command, const ControlCommand& dead_reckoning) {
    require(!finished(), "flight already finished");
    const DroneState before = current_.state;
    current_.state = step(before, command, config_.wind, config_.world.dt, config_.world);
    current_.command = command;
    current_.outcome = touchdown_outcome(before, current_.state, command, config_.pad, config_.world);
    ++ticks_;

    const Vec3 commanded = rotate_z(command.v_cmd, wrap_angle(before.yaw - config_.pad.facing));
    tracker_.advance(current_.state.time, Vec2(commanded.x(), commanded.y()), config_.world.dt);
    sense(dead_reckoning);

    if (current_.outcome.touched_down())
      current_.status = current_.outcome.landed() ? FlightStatus::landed : FlightStatus::crashed;
    else if (!config_.bounds.contains(current_.truth))
      current_.status = FlightStatus::out_of_bounds;
    else if (ticks_ >= config_.max_ticks)
      current_.status = FlightStatus::timed_out;
    return current_;
  }

 private:
  void sense(const ControlCommand& dead_reckoning) {
    const DroneState& s = current_.state;
    current_.pad_center = platform_pose(config_.pad.motion, s.time);
    current_.truth = relative_to_pad(s.position, current_.pad_center, config_.pad.facing);
    LandmarkObservation obs = project_landmark(s, config_.camera, config_.landmark, config_.pad);
    current_.observation = corrupt(obs, config_.noise, config_.landmark, rng_);
    if (current_.observation.visible || current_.estimate) {
      EstimateContext ctx;
      ctx.yaw = s.yaw;
      ctx.facing = config_.pad.facing;
      ctx.last_command = dead_reckoning;
      ctx.staleness_horizon = config_.staleness_horizon;
      current_.estimate = monoland::estimate(current_.observation, *model_, current_.estimate, config_.world.dt, ctx);
      if (current_.observation.visible) {
        tracker_.observe(*current_.estimate);
        current_.color = current_.observation.color_band;
      }
    }
  }

  FlightConfig config_;
  const EstimatorModel* model_;
  Rng rng_;
  FlightStep current_;
  PadMotionTracker tracker_;
  std::size_t ticks_ = 0;
};

}  // namespace monoland
