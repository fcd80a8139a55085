#pragma once

// Measurement noise, self-supervised fitting of the altitude and depth
// estimators, and fusion of an observation into a pad-relative estimate.
//
// Both estimators are piecewise-multilinear tables over observation features:
//
//   inverse diameter   s   = 1 / D1
//   view cosine        c   = cos(theta), the ellipse ratio
//   depression sine    e   = sine of the centroid ray's angle below horizontal
//
//   altitude = Q (s, e)
//   depth    = Q'(s, c, e)
//
// Range scales with s, so altitude and depth are multilinear in these features
// for a level camera; the tables recover them without knowing the focal length
// times landmark size, the landmark height or its inclination.

#include <monoland/binary_io.hpp>
#include <monoland/grid_table.hpp>
#include <monoland/optics.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <vector>

namespace monoland {

using Rng = std::mt19937_64;

struct NoiseModel {
  double sigma_diameter_px = 0.0;
  double sigma_angle = 0.0;
  double sigma_centroid_px = 0.0;
  double dropout_prob = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    require(sigma_diameter_px >= 0.0 && sigma_angle >= 0.0 && sigma_centroid_px >= 0.0, "noise sigmas must be >= 0");
    require(dropout_prob >= 0.0 && dropout_prob <= 1.0, "dropout probability must be within [0, 1]");
  }
};

/// Perturbs a visible observation. Draws a fixed number of variates per call
/// so the stream position does not depend on the outcome.
inline LandmarkObservation corrupt(const LandmarkObservation& obs, const NoiseModel& nm, const LandmarkConfig& lm,
                                   Rng& rng) {
  if (!obs.visible) return obs;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double u = unit(rng);
  const double n_diameter = gauss(rng);
  const double n_angle = gauss(rng);
  const double n_cx = gauss(rng);
  const double n_cy = gauss(rng);
  if (u < nm.dropout_prob) return LandmarkObservation::invisible(Visibility::dropout);

  LandmarkObservation out = obs;
  if (nm.sigma_diameter_px > 0.0)
    out.apparent_diameter_px = std::max(1e-3, obs.apparent_diameter_px + nm.sigma_diameter_px * n_diameter);
  if (nm.sigma_angle > 0.0) {
    out.viewing_angle = std::clamp(obs.viewing_angle + nm.sigma_angle * n_angle, 0.0, kPi / 2.0);
    out.ellipse_ratio = std::max(std::cos(out.viewing_angle), 1e-9);
    out.color_band = color_band(out.viewing_angle, lm);
  }
  if (nm.sigma_centroid_px > 0.0) out.centroid_px += nm.sigma_centroid_px * Vec2(n_cx, n_cy);
  return out;
}

struct ObservationFeatures {
  double inverse_diameter = 0.0;
  double view_cosine = 0.0;
  double depression_sine = 0.0;
  double ray_heading = 0.0;  // world yaw of the camera-to-landmark ray
};

inline ObservationFeatures observation_features(const LandmarkObservation& obs, const CameraIntrinsics& cam,
                                                double yaw) {
  const CameraFrame frame = CameraFrame::from(yaw, cam.mount_pitch);
  const double xr = (obs.centroid_px.x() - cam.cx()) / cam.focal_px;
  const double yd = (obs.centroid_px.y() - cam.cy()) / cam.focal_px;
  const Vec3 dir = frame.forward + xr * frame.right + yd * frame.down;
  ObservationFeatures f;
  f.inverse_diameter = 1.0 / obs.apparent_diameter_px;
  f.view_cosine = obs.ellipse_ratio;
  f.depression_sine = -dir.z() / dir.norm();
  f.ray_heading = std::atan2(dir.y(), dir.x());
  return f;
}

class InsufficientData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NoPriorEstimate : public std::runtime_error {
 public:
  NoPriorEstimate() : std::runtime_error("landmark invisible and no prior estimate") {}
};

/// Fitted realization of the altitude and depth estimators.
struct EstimatorModel {
  static constexpr std::uint16_t kVersion = 1;

  CameraIntrinsics camera;
  double landmark_offset = 1.0;
  GridTable<2> altitude_table;
  GridTable<3> depth_table;
  std::uint64_t training_sample_count = 0;
  double altitude_residual_rms = 0.0;
  double depth_residual_rms = 0.0;
  std::size_t degenerate_cells = 0;

  double fit_residual_rms() const { return altitude_residual_rms; }

  struct Query {
    double altitude = 0.0;
    double depth = 0.0;
    bool extrapolated = false;
  };

  Query query(const ObservationFeatures& f) const {
    const GridTable<2>::Point pa{f.inverse_diameter, f.depression_sine};
    const GridTable<3>::Point pd{f.inverse_diameter, f.view_cosine, f.depression_sine};
    Query q;
    q.altitude = altitude_table(pa);
    q.depth = depth_table(pd);
    q.extrapolated = !altitude_table.in_hull(pa) || !depth_table.in_hull(pd);
    return q;
  }

  std::vector<std::uint8_t> to_bytes() const;
  static EstimatorModel from_bytes(std::vector<std::uint8_t> bytes);
  void save(const std::string& path) const;
  static EstimatorModel load(const std::string& path);
};

namespace detail {

template <std::size_t N>
void write_table(ByteWriter& w, const GridTable<N>& t) {
  w.u8(static_cast<std::uint8_t>(N));
  for (const GridAxis& a : t.axes()) {
    w.f64(a.lo);
    w.f64(a.hi);
    w.u32(static_cast<std::uint32_t>(a.knots));
  }
  w.u32(static_cast<std::uint32_t>(t.size()));
  for (double c : t.coefficients()) w.f64(c);
}

template <std::size_t N>
GridTable<N> read_table(ByteReader& r) {
  if (r.u8() != N) throw FormatError("table dimension mismatch");
  std::array<GridAxis, N> axes{};
  for (GridAxis& a : axes) {
    a.lo = r.f64();
    a.hi = r.f64();
    a.knots = r.u32();
    if (a.knots < 2 || a.knots > 4096) throw FormatError("bad knot count");
  }
  GridTable<N> t(axes);
  if (r.u32() != t.size()) throw FormatError("coefficient count mismatch");
  for (double& c : t.coefficients()) c = r.f64();
  return t;
}

}  // namespace detail

inline std::vector<std::uint8_t> EstimatorModel::to_bytes() const {
  ByteWriter w;
  w.magic("LLEM");
  w.u16(kVersion);
  w.f64(camera.focal_px);
  w.u32(static_cast<std::uint32_t>(camera.image_width));
  w.u32(static_cast<std::uint32_t>(camera.image_height));
  w.f64(camera.mount_pitch);
  w.f64(landmark_offset);
  detail::write_table(w, altitude_table);
  detail::write_table(w, depth_table);
  w.f64(altitude_residual_rms);
  w.f64(depth_residual_rms);
  w.u64(training_sample_count);
  w.u64(degenerate_cells);
  return w.bytes();
}

inline EstimatorModel EstimatorModel::from_bytes(std::vector<std::uint8_t> bytes) {
  ByteReader r(std::move(bytes));
  r.expect_magic("LLEM");
  if (const auto v = r.u16(); v != kVersion) throw FormatError("unsupported estimator version " + std::to_string(v));
  EstimatorModel m;
  m.camera.focal_px = r.f64();
  m.camera.image_width = static_cast<int>(r.u32());
  m.camera.image_height = static_cast<int>(r.u32());
  m.camera.mount_pitch = r.f64();
  m.landmark_offset = r.f64();
  m.altitude_table = detail::read_table<2>(r);
  m.depth_table = detail::read_table<3>(r);
  m.altitude_residual_rms = r.f64();
  m.depth_residual_rms = r.f64();
  m.training_sample_count = r.u64();
  m.degenerate_cells = r.u64();
  if (!r.at_end()) throw FormatError("trailing bytes in estimator file");
  return m;
}

inline void EstimatorModel::save(const std::string& path) const { ByteWriter::write_file(path, to_bytes()); }

inline EstimatorModel EstimatorModel::load(const std::string& path) {
  return from_bytes(ByteReader::read_file(path));
}

/// Ground-truth-labelled observation produced by the simulator.
struct TrainingSample {
  LandmarkObservation observation;
  DroneState drone;
  double altitude = 0.0;
  double depth = 0.0;
  double lateral = 0.0;
};

/// Region of start poses used for self-supervised collection.
struct PoseHull {
  double depth_min = 1.0;
  double depth_max = 20.0;
  double altitude_min = 0.5;
  double altitude_max = 10.0;
  double bearing_max = deg_to_rad(35.0);
};

struct SensorSetup {
  CameraIntrinsics camera;
  LandmarkConfig landmark;
  PadConfig pad;
  std::optional<NoiseModel> noise;
};

using PoseSampler = std::function<DroneState(Rng&)>;

/// Uniform sampler over a hull: depth along the approach axis, bearing from
/// the pad, altitude. The drone faces the pad along -facing.
inline PoseSampler hull_sampler(const PoseHull& hull, const PadConfig& pad) {
  return [hull, pad](Rng& rng) {
    std::uniform_real_distribution<double> depth(hull.depth_min, hull.depth_max);
    std::uniform_real_distribution<double> alt(hull.altitude_min, hull.altitude_max);
    std::uniform_real_distribution<double> bearing(-hull.bearing_max, hull.bearing_max);
    const double d = depth(rng);
    const double b = bearing(rng);
    const double z = alt(rng);
    const Vec2 rel = rotate_2d(Vec2(d, d * std::tan(b)), pad.facing);
    const Vec3 c = platform_pose(pad.motion, 0.0);
    DroneState s;
    s.position = Vec3(c.x() + rel.x(), c.y() + rel.y(), z);
    s.yaw = wrap_angle(pad.facing + kPi);
    return s;
  };
}

inline std::vector<TrainingSample> collect_training_set(const SensorSetup& setup, const PoseSampler& sampler,
                                                        std::size_t n, std::uint64_t seed,
                                                        std::size_t max_tries_per_sample = 10000) {
  require(n >= 1, "training set size must be >= 1");
  Rng rng(seed);
  std::vector<TrainingSample> out;
  out.reserve(n);
  while (out.size() < n) {
    std::size_t tries = 0;
    for (;;) {
      if (++tries > max_tries_per_sample)
        throw std::runtime_error("pose sampler produced no visible pose within the try budget");
      const DroneState drone = sampler(rng);
      LandmarkObservation obs = project_landmark(drone, setup.camera, setup.landmark, setup.pad);
      if (!obs.visible) continue;
      if (setup.noise) {
        obs = corrupt(obs, *setup.noise, setup.landmark, rng);
        if (!obs.visible) continue;
      }
      const RelativePosition rel =
          relative_to_pad(drone.position, platform_pose(setup.pad.motion, drone.time), setup.pad.facing);
      out.push_back({obs, drone, rel.altitude, rel.depth, rel.lateral});
      break;
    }
  }
  return out;
}

struct FitOptions {
  std::size_t knots = 32;
  double smoothing = 1e-3;
  bool strict = false;
  std::size_t min_samples = 50;
  std::size_t min_distinct = 5;
};

inline EstimatorModel fit_estimators(const std::vector<TrainingSample>& samples, const CameraIntrinsics& camera,
                                     double landmark_offset, const FitOptions& options = {}) {
  if (samples.size() < options.min_samples)
    throw InsufficientData("need at least " + std::to_string(options.min_samples) + " samples");
  std::set<double> diameters;
  std::set<double> angles;
  for (const auto& s : samples) {
    if (!s.observation.visible) throw InvalidInput("training samples must be visible observations");
    diameters.insert(std::round(s.observation.apparent_diameter_px * 1e9));
    angles.insert(std::round(s.observation.viewing_angle * 1e9));
  }
  if (diameters.size() < options.min_distinct || angles.size() < options.min_distinct)
    throw InsufficientData("samples must span at least " + std::to_string(options.min_distinct) +
                           " distinct diameters and viewing angles");

  std::vector<GridTable<2>::Point> xa;
  std::vector<GridTable<3>::Point> xd;
  std::vector<double> ya;
  std::vector<double> yd;
  xa.reserve(samples.size());
  xd.reserve(samples.size());
  std::array<double, 3> lo{1e300, 1e300, 1e300};
  std::array<double, 3> hi{-1e300, -1e300, -1e300};
  for (const auto& s : samples) {
    const ObservationFeatures f = observation_features(s.observation, camera, s.drone.yaw);
    const std::array<double, 3> v{f.inverse_diameter, f.view_cosine, f.depression_sine};
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], v[a]);
      hi[a] = std::max(hi[a], v[a]);
    }
    xa.push_back({v[0], v[2]});
    xd.push_back({v[0], v[1], v[2]});
    ya.push_back(s.altitude);
    yd.push_back(s.depth);
  }
  for (int a = 0; a < 3; ++a)
    if (!(hi[a] > lo[a])) throw InsufficientData("training features span an empty range");

  auto axis = [&](int a) { return GridAxis{lo[a], hi[a], options.knots}; };
  EstimatorModel model;
  model.camera = camera;
  model.landmark_offset = landmark_offset;
  model.altitude_table = GridTable<2>({axis(0), axis(2)});
  model.depth_table = GridTable<3>({axis(0), axis(1), axis(2)});
  const auto ra = model.altitude_table.fit(xa, ya, options.smoothing, options.strict);
  const auto rd = model.depth_table.fit(xd, yd, options.smoothing, options.strict);
  model.altitude_residual_rms = ra.residual_rms;
  model.depth_residual_rms = rd.residual_rms;
  model.training_sample_count = samples.size();
  model.degenerate_cells = ra.degenerate_cells + rd.degenerate_cells;
  return model;
}

/// Pad-relative position estimate in the approach frame.
struct PositionEstimate {
  double altitude = 0.0;
  double depth = 0.0;
  double lateral_offset = 0.0;
  double confidence = 0.0;
  double stale_for = 0.0;
  bool extrapolated = false;

  bool operator==(const PositionEstimate&) const = default;
};

struct EstimateContext {
  double yaw = 0.0;     // drone heading, from the autopilot attitude
  double facing = 0.0;  // approach axis of the pad
  ControlCommand last_command;
  double staleness_horizon = 1.0;
};

/// Visible: read the tables. Invisible: dead-reckon the previous estimate by
/// the last commanded velocity and decay confidence linearly to zero at the
/// staleness horizon.
inline PositionEstimate estimate(const LandmarkObservation& obs, const EstimatorModel& model,
                                 const std::optional<PositionEstimate>& prev, double dt, const EstimateContext& ctx) {
  if (obs.visible) {
    const ObservationFeatures f = observation_features(obs, model.camera, ctx.yaw);
    const auto q = model.query(f);
    PositionEstimate e;
    e.altitude = std::max(0.0, q.altitude);
    e.depth = q.depth;
    e.lateral_offset = (q.depth + model.landmark_offset) * std::tan(wrap_angle(f.ray_heading - ctx.facing));
    e.confidence = 1.0;
    e.stale_for = 0.0;
    e.extrapolated = q.extrapolated;
    return e;
  }
  if (!prev) throw NoPriorEstimate();
  const Vec3 v = rotate_z(ctx.last_command.v_cmd, ctx.yaw - ctx.facing);
  PositionEstimate e = *prev;
  e.depth += v.x() * dt;
  e.lateral_offset += v.y() * dt;
  e.altitude = std::max(0.0, e.altitude + v.z() * dt);
  e.stale_for += dt;
  e.confidence = ctx.staleness_horizon > 0.0 ? std::max(0.0, 1.0 - e.stale_for / ctx.staleness_horizon) : 0.0;
  return e;
}

}  // namespace monoland
