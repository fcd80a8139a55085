#pragma once

// Experiment scenarios, per-episode metrics, suite runs and report emission.

#include <monoland/agent/landing.hpp>
#include <monoland/binary_io.hpp>

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace monoland::harness {

using agent::PolicySnapshot;
using agent::Trajectory;
using nlohmann::json;

enum class SuiteKind { static_pad, dynamic_pad };

struct ScenarioConfig {
  int id = 0;
  SuiteKind kind = SuiteKind::static_pad;
  double distance = 5.0;     // m, horizontal from the pad center
  double bearing_deg = 0.0;  // from the approach axis
  double altitude = 2.5;     // m
  MotionPattern motion;
  WindState wind;
  NoiseModel noise;
  std::uint64_t seed = 0;

  void validate() const {
    require(distance > 0.0, "start distance must be > 0");
    require(bearing_deg >= -90.0 && bearing_deg <= 90.0, "bearing must be within [-90, 90] degrees");
    require(altitude > 0.0, "start altitude must be > 0");
    motion.validate();
  }

  std::string motion_type() const {
    switch (motion.kind) {
      case MotionKind::fixed: return "static";
      case MotionKind::linear: return "linear";
      case MotionKind::rotational: return "rotational";
    }
    return "?";
  }

  /// Speed in report units: m/s for linear, deg/s for rotational.
  double report_speed() const { return motion.kind == MotionKind::rotational ? rad_to_deg(motion.speed) : motion.speed; }
};

/// Noise applied to every scenario unless a config overrides it.
inline NoiseModel default_scenario_noise() {
  NoiseModel n;
  n.sigma_diameter_px = 0.5;
  n.sigma_angle = 0.005;
  n.sigma_centroid_px = 0.5;
  return n;
}

/// The five named cases followed by the full 3 x 3 grid of distances
/// {5, 10, 15} m and bearings {0, 15, 30} degrees.
inline std::vector<ScenarioConfig> scenario1_grid(const PadConfig& pad = {}) {
  std::vector<std::pair<double, double>> cases{{5, 0}, {10, 15}, {15, 30}, {5, 30}, {10, 0}};
  for (double d : {5.0, 10.0, 15.0})
    for (double b : {0.0, 15.0, 30.0}) cases.emplace_back(d, b);
  std::vector<ScenarioConfig> out;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    ScenarioConfig s;
    s.id = static_cast<int>(i + 1);
    s.kind = SuiteKind::static_pad;
    s.distance = cases[i].first;
    s.bearing_deg = cases[i].second;
    s.motion = pad.motion;
    s.noise = default_scenario_noise();
    s.seed = 1000 + 10 * static_cast<std::uint64_t>(i);
    out.push_back(s);
  }
  return out;
}

/// Linear 0.5 and 1.0 m/s, rotational 5 and 10 deg/s, linear 1.5 m/s, all
/// starting 5 m out on the approach axis.
inline std::vector<ScenarioConfig> scenario2_set(const PadConfig& pad = {}, double rotation_radius = 3.0) {
  struct Case {
    MotionKind kind;
    double speed;
  };
  const Case cases[] = {{MotionKind::linear, 0.5},
                        {MotionKind::linear, 1.0},
                        {MotionKind::rotational, deg_to_rad(5.0)},
                        {MotionKind::rotational, deg_to_rad(10.0)},
                        {MotionKind::linear, 1.5}};
  std::vector<ScenarioConfig> out;
  int id = 1;
  for (const Case& c : cases) {
    ScenarioConfig s;
    s.id = id;
    s.kind = SuiteKind::dynamic_pad;
    s.distance = 5.0;
    s.motion = c.kind == MotionKind::linear ? agent::receding_motion(pad, c.speed)
                                            : agent::circling_motion(pad, c.speed, rotation_radius);
    s.noise = default_scenario_noise();
    s.seed = 2000 + 10 * static_cast<std::uint64_t>(id);
    out.push_back(s);
    ++id;
  }
  return out;
}

inline FlightConfig flight_config_for(const ScenarioConfig& s, FlightConfig base) {
  base.pad.motion = s.motion;
  base.wind = s.wind;
  base.noise = s.noise;
  base.noise.seed = s.seed;
  return base;
}

inline DroneState start_state_for(const ScenarioConfig& s, const PadConfig& pad) {
  const double b = deg_to_rad(s.bearing_deg);
  return agent::start_pose(pad, s.distance * std::cos(b), s.distance * std::sin(b), s.altitude);
}

struct MetricsRecord {
  int test_case = 0;
  SuiteKind kind = SuiteKind::static_pad;
  double distance_m = 0.0;
  double angle_deg = 0.0;
  std::string motion_type = "static";
  double speed = 0.0;
  double altitude_error_cm = 0.0;
  double lateral_displacement_cm = 0.0;
  double time_to_land_s = 0.0;
  std::optional<double> tracking_error_cm;
  std::optional<double> time_to_stabilize_s;
  int successes = 0;
  int runs = 0;

  bool success() const { return runs > 0 && successes == runs; }
  double success_rate() const { return runs > 0 ? static_cast<double>(successes) / runs : 0.0; }
  bool operator==(const MetricsRecord&) const = default;
};

struct MetricOptions {
  double capture_radius = 1.0;      // m, start of the tracking window
  double stabilize_radius = 0.1;    // m
  double stabilize_dwell = 2.0;     // s
};

inline double horizontal_error(const FlightStep& s) { return std::hypot(s.truth.depth, s.truth.lateral); }

/// Landed on the pad: touchdown with the land flag at a safe descent speed,
/// inside the pad radius.
inline bool landed_on_pad(const Trajectory& t, const PadConfig& pad) {
  return t.status() == FlightStatus::landed && t.last().outcome.lateral_displacement <= pad.radius;
}

/// Mean |estimated - true| altitude over every tick with an estimate, in m.
inline double altitude_error(const Trajectory& t) {
  double sum = 0.0;
  std::size_t n = 0;
  auto add = [&](const FlightStep& s) {
    if (!s.estimate) return;
    sum += std::abs(s.estimate->altitude - s.truth.altitude);
    ++n;
  };
  add(t.initial);
  for (const auto& s : t.steps) add(s.flight);
  return n ? sum / static_cast<double>(n) : 0.0;
}

/// Horizontal distance to the pad center at touchdown, or at the end of the
/// episode when there was none, in m.
inline double final_displacement(const Trajectory& t) {
  const FlightStep& last = t.last();
  return last.outcome.touched_down() ? last.outcome.lateral_displacement : horizontal_error(last);
}

/// Time-mean horizontal distance between the drone's ground projection and
/// the pad center from the first tick inside the capture radius until the end.
/// Over the whole episode if the drone never got that close. In m.
inline double tracking_error(const Trajectory& t, const MetricOptions& opt = {}) {
  std::vector<double> e;
  e.reserve(t.steps.size() + 1);
  e.push_back(horizontal_error(t.initial));
  for (const auto& s : t.steps) e.push_back(horizontal_error(s.flight));
  std::size_t start = 0;
  while (start < e.size() && e[start] >= opt.capture_radius) ++start;
  if (start == e.size()) start = 0;
  double sum = 0.0;
  for (std::size_t i = start; i < e.size(); ++i) sum += e[i];
  return sum / static_cast<double>(e.size() - start);
}

/// First time from which the horizontal error stays below the radius for the
/// whole dwell; empty if that never happens within the episode.
inline std::optional<double> time_to_stabilize(const Trajectory& t, const MetricOptions& opt = {}) {
  std::vector<std::pair<double, double>> e;
  e.emplace_back(t.initial.state.time, horizontal_error(t.initial));
  for (const auto& s : t.steps) e.emplace_back(s.flight.state.time, horizontal_error(s.flight));
  std::optional<double> run_start;
  for (const auto& [time, err] : e) {
    if (err < opt.stabilize_radius) {
      if (!run_start) run_start = time;
      if (time - *run_start >= opt.stabilize_dwell - 1e-9) return run_start;
    } else {
      run_start.reset();
    }
  }
  return std::nullopt;
}

/// Metrics of a single episode. Dynamic-only fields stay empty for static
/// scenarios.
inline MetricsRecord compute_metrics(const ScenarioConfig& s, const Trajectory& t, const PadConfig& pad,
                                     const MetricOptions& opt = {}) {
  MetricsRecord r;
  r.test_case = s.id;
  r.kind = s.kind;
  r.distance_m = s.distance;
  r.angle_deg = s.bearing_deg;
  r.motion_type = s.motion_type();
  r.speed = s.report_speed();
  r.altitude_error_cm = 100.0 * altitude_error(t);
  r.lateral_displacement_cm = 100.0 * final_displacement(t);
  r.time_to_land_s = t.last().state.time;
  if (s.kind == SuiteKind::dynamic_pad) {
    r.tracking_error_cm = 100.0 * tracking_error(t, opt);
    r.time_to_stabilize_s = time_to_stabilize(t, opt);
  }
  r.runs = 1;
  r.successes = landed_on_pad(t, pad) ? 1 : 0;
  return r;
}

/// Mean of numeric fields over runs; optional fields average the runs that
/// have them and stay empty if none do. Counts add up.
inline MetricsRecord aggregate(const std::vector<MetricsRecord>& runs) {
  require(!runs.empty(), "nothing to aggregate");
  MetricsRecord out = runs.front();
  const double n = static_cast<double>(runs.size());
  double alt = 0.0, lat = 0.0, time = 0.0, track = 0.0, stab = 0.0;
  int ntrack = 0, nstab = 0, succ = 0, total = 0;
  for (const auto& r : runs) {
    alt += r.altitude_error_cm;
    lat += r.lateral_displacement_cm;
    time += r.time_to_land_s;
    if (r.tracking_error_cm) {
      track += *r.tracking_error_cm;
      ++ntrack;
    }
    if (r.time_to_stabilize_s) {
      stab += *r.time_to_stabilize_s;
      ++nstab;
    }
    succ += r.successes;
    total += r.runs;
  }
  out.altitude_error_cm = alt / n;
  out.lateral_displacement_cm = lat / n;
  out.time_to_land_s = time / n;
  out.tracking_error_cm = ntrack ? std::optional<double>(track / ntrack) : std::nullopt;
  out.time_to_stabilize_s = nstab ? std::optional<double>(stab / nstab) : std::nullopt;
  out.successes = succ;
  out.runs = total;
  return out;
}

struct EpisodeRun {
  ScenarioConfig scenario;
  std::uint64_t seed = 0;
  std::size_t policy_index = 0;
  Trajectory trajectory;
  MetricsRecord metrics;
};

struct SuiteResult {
  std::vector<MetricsRecord> records;  // one per scenario, mean over policies and repeats
  std::vector<EpisodeRun> runs;        // every episode, in execution order
};

/// Greedy rollouts of every policy on every scenario, `repeats` times each
/// with seeds scenario.seed + r.
inline SuiteResult run_suite(const std::vector<ScenarioConfig>& configs, const std::vector<PolicySnapshot>& policies,
                             const EstimatorModel& model, const FlightConfig& base, std::size_t repeats = 5,
                             bool keep_trajectories = true, const MetricOptions& opt = {}) {
  require(!policies.empty(), "run_suite needs at least one policy");
  require(repeats >= 1, "repeats must be >= 1");
  SuiteResult result;
  for (const auto& sc : configs) {
    sc.validate();
    std::vector<MetricsRecord> per_run;
    for (std::size_t p = 0; p < policies.size(); ++p) {
      for (std::size_t r = 0; r < repeats; ++r) {
        ScenarioConfig s = sc;
        s.seed = sc.seed + r;
        const FlightConfig fc = flight_config_for(s, base);
        Trajectory t = agent::rollout(policies[p], fc, model, start_state_for(s, fc.pad), s.seed);
        MetricsRecord m = compute_metrics(s, t, fc.pad, opt);
        per_run.push_back(m);
        EpisodeRun run{s, s.seed, p, {}, m};
        if (keep_trajectories) run.trajectory = std::move(t);
        result.runs.push_back(std::move(run));
      }
    }
    result.records.push_back(aggregate(per_run));
  }
  return result;
}

// ---- reports ---------------------------------------------------------------

inline constexpr const char* kStaticHeader =
    "test_case,distance_m,angle_deg,altitude_error_cm,lateral_displacement_cm,time_to_land_s,success";
inline constexpr const char* kDynamicHeader =
    "test_case,motion_type,speed,tracking_error_cm,landing_displacement_cm,time_to_stabilize_s,success";

enum class ReportFormat { csv, json, md };

inline ReportFormat report_format_from(const std::string& s) {
  if (s == "csv") return ReportFormat::csv;
  if (s == "json") return ReportFormat::json;
  if (s == "md") return ReportFormat::md;
  throw InvalidInput("unknown report format: " + s);
}

inline std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string success_cell(const MetricsRecord& r) {
  return std::to_string(r.successes) + "/" + std::to_string(r.runs);
}

inline json to_json(const MetricsRecord& r) {
  json j;
  j["test_case"] = r.test_case;
  j["kind"] = r.kind == SuiteKind::static_pad ? "static" : "dynamic";
  j["distance_m"] = r.distance_m;
  j["angle_deg"] = r.angle_deg;
  j["motion_type"] = r.motion_type;
  j["speed"] = r.speed;
  j["altitude_error_cm"] = r.altitude_error_cm;
  j["lateral_displacement_cm"] = r.lateral_displacement_cm;
  j["time_to_land_s"] = r.time_to_land_s;
  if (r.kind == SuiteKind::dynamic_pad) {
    j["tracking_error_cm"] = r.tracking_error_cm ? json(*r.tracking_error_cm) : json(nullptr);
    j["time_to_stabilize_s"] = r.time_to_stabilize_s ? json(*r.time_to_stabilize_s) : json(nullptr);
  }
  j["successes"] = r.successes;
  j["runs"] = r.runs;
  return j;
}

inline MetricsRecord record_from_json(const json& j) {
  MetricsRecord r;
  r.test_case = j.at("test_case").get<int>();
  const std::string kind = j.at("kind").get<std::string>();
  if (kind != "static" && kind != "dynamic") throw FormatError("unknown record kind: " + kind);
  r.kind = kind == "static" ? SuiteKind::static_pad : SuiteKind::dynamic_pad;
  r.distance_m = j.at("distance_m").get<double>();
  r.angle_deg = j.at("angle_deg").get<double>();
  r.motion_type = j.at("motion_type").get<std::string>();
  r.speed = j.at("speed").get<double>();
  r.altitude_error_cm = j.at("altitude_error_cm").get<double>();
  r.lateral_displacement_cm = j.at("lateral_displacement_cm").get<double>();
  r.time_to_land_s = j.at("time_to_land_s").get<double>();
  if (j.contains("tracking_error_cm") && !j["tracking_error_cm"].is_null())
    r.tracking_error_cm = j["tracking_error_cm"].get<double>();
  if (j.contains("time_to_stabilize_s") && !j["time_to_stabilize_s"].is_null())
    r.time_to_stabilize_s = j["time_to_stabilize_s"].get<double>();
  r.successes = j.at("successes").get<int>();
  r.runs = j.at("runs").get<int>();
  return r;
}

inline std::vector<MetricsRecord> records_from_json(const std::string& text) {
  const json j = json::parse(text);
  std::vector<MetricsRecord> out;
  for (const auto& r : j.at("records")) out.push_back(record_from_json(r));
  return out;
}

/// Records of one suite kind. Mixed kinds are rejected.
inline std::string emit_report(const std::vector<MetricsRecord>& records, ReportFormat format) {
  const SuiteKind kind = records.empty() ? SuiteKind::static_pad : records.front().kind;
  for (const auto& r : records) require(r.kind == kind, "report records must share one suite kind");
  const bool dynamic = kind == SuiteKind::dynamic_pad;
  auto opt_cell = [](const std::optional<double>& v) { return v ? fixed(*v) : std::string("NA"); };

  if (format == ReportFormat::json) {
    json j;
    j["kind"] = dynamic ? "dynamic" : "static";
    j["records"] = json::array();
    for (const auto& r : records) j["records"].push_back(to_json(r));
    return j.dump(2) + "\n";
  }

  std::ostringstream out;
  if (format == ReportFormat::csv) {
    out << (dynamic ? kDynamicHeader : kStaticHeader) << '\n';
    for (const auto& r : records) {
      if (dynamic)
        out << r.test_case << ',' << r.motion_type << ',' << fixed(r.speed, 1) << ',' << opt_cell(r.tracking_error_cm)
            << ',' << fixed(r.lateral_displacement_cm) << ',' << opt_cell(r.time_to_stabilize_s) << ','
            << success_cell(r) << '\n';
      else
        out << r.test_case << ',' << fixed(r.distance_m, 1) << ',' << fixed(r.angle_deg, 1) << ','
            << fixed(r.altitude_error_cm) << ',' << fixed(r.lateral_displacement_cm) << ',' << fixed(r.time_to_land_s)
            << ',' << success_cell(r) << '\n';
    }
    return out.str();
  }

  if (dynamic) {
    out << "| Test Case | Motion Type | Speed | Tracking Error (cm) | Landing Displacement (cm) | Time to "
           "Stabilize (s) | Success |\n";
    out << "|---|---|---|---|---|---|---|\n";
    for (const auto& r : records) {
      const std::string unit = r.motion_type == "rotational" ? " deg/s" : " m/s";
      out << "| " << r.test_case << " | " << r.motion_type << " | " << fixed(r.speed, 1) << unit << " | "
          << opt_cell(r.tracking_error_cm) << " | " << fixed(r.lateral_displacement_cm) << " | "
          << opt_cell(r.time_to_stabilize_s) << " | " << success_cell(r) << " |\n";
    }
  } else {
    out << "| Test Case | Distance (m) | Angle (deg) | Altitude Error (cm) | Lateral Displacement (cm) | Time to "
           "Land (s) | Success |\n";
    out << "|---|---|---|---|---|---|---|\n";
    for (const auto& r : records)
      out << "| " << r.test_case << " | " << fixed(r.distance_m, 1) << " | " << fixed(r.angle_deg, 1) << " | "
          << fixed(r.altitude_error_cm) << " | " << fixed(r.lateral_displacement_cm) << " | "
          << fixed(r.time_to_land_s) << " | " << success_cell(r) << " |\n";
  }
  return out.str();
}

// ---- trajectory logs -------------------------------------------------------

inline json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

inline json command_json(const ControlCommand& c) {
  return {{"v", vec_json(c.v_cmd)}, {"yaw_rate", c.yaw_rate}, {"land", c.land}};
}

inline json observation_json(const LandmarkObservation& o) {
  json j;
  j["visible"] = o.visible;
  j["cause"] = std::string(to_string(o.cause));
  if (o.visible) {
    j["diameter_px"] = o.apparent_diameter_px;
    j["theta"] = o.viewing_angle;
    j["ellipse_ratio"] = o.ellipse_ratio;
    j["color"] = std::string(to_string(o.color_band));
    j["centroid_px"] = json::array({o.centroid_px.x(), o.centroid_px.y()});
  } else {
    j["diameter_px"] = nullptr;
    j["theta"] = nullptr;
    j["ellipse_ratio"] = nullptr;
    j["color"] = nullptr;
    j["centroid_px"] = nullptr;
  }
  return j;
}

inline json estimate_json(const std::optional<PositionEstimate>& e) {
  if (!e) return nullptr;
  return {{"altitude", e->altitude},     {"depth", e->depth},         {"lateral", e->lateral_offset},
          {"confidence", e->confidence}, {"stale_for", e->stale_for}, {"extrapolated", e->extrapolated}};
}

inline json flight_step_json(const FlightStep& s) {
  json j;
  j["t"] = s.state.time;
  j["position"] = vec_json(s.state.position);
  j["velocity"] = vec_json(s.state.velocity);
  j["yaw"] = s.state.yaw;
  j["pad"] = vec_json(s.pad_center);
  j["truth"] = {{"depth", s.truth.depth}, {"lateral", s.truth.lateral}, {"altitude", s.truth.altitude}};
  j["observation"] = observation_json(s.observation);
  j["estimate"] = estimate_json(s.estimate);
  const char* kind = s.outcome.landed() ? "landed" : s.outcome.touched_down() ? "crashed" : "airborne";
  j["outcome"] = {{"kind", kind}, {"lateral_displacement", s.outcome.lateral_displacement}};
  j["status"] = std::string(to_string(s.status));
  return j;
}

inline json scenario_json(const ScenarioConfig& s) {
  return {{"id", s.id},
          {"kind", s.kind == SuiteKind::static_pad ? "static" : "dynamic"},
          {"distance_m", s.distance},
          {"bearing_deg", s.bearing_deg},
          {"altitude_m", s.altitude},
          {"motion_type", s.motion_type()},
          {"speed", s.motion.speed},
          {"wind", json::array({s.wind.velocity.x(), s.wind.velocity.y()})},
          {"noise",
           {{"sigma_diameter_px", s.noise.sigma_diameter_px},
            {"sigma_angle", s.noise.sigma_angle},
            {"sigma_centroid_px", s.noise.sigma_centroid_px},
            {"dropout_prob", s.noise.dropout_prob}}}};
}

/// One JSON document per episode: scenario, seed and per-step records.
inline json trajectory_json(const ScenarioConfig& s, std::uint64_t seed, const Trajectory& t) {
  json j;
  j["scenario"] = scenario_json(s);
  j["seed"] = seed;
  j["initial"] = flight_step_json(t.initial);
  j["steps"] = json::array();
  for (const auto& st : t.steps) {
    json row = flight_step_json(st.flight);
    row["action"] = st.action ? json(*st.action) : json(nullptr);
    row["command"] = command_json(st.flight.command);
    row["ai_command"] = command_json(st.ai_command);
    row["human_command"] = command_json(st.human_command);
    row["alpha"] = st.alpha;
    row["conflict"] = st.conflict;
    row["reward"] = st.reward;
    j["steps"].push_back(std::move(row));
  }
  j["status"] = std::string(to_string(t.status()));
  return j;
}

inline Vec3 vec_from_json(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

inline FlightStatus status_from(const std::string& s) {
  for (FlightStatus st : {FlightStatus::running, FlightStatus::landed, FlightStatus::crashed,
                          FlightStatus::out_of_bounds, FlightStatus::timed_out})
    if (to_string(st) == s) return st;
  throw FormatError("unknown flight status: " + s);
}

/// The parts of a logged step that metrics read: state, truth, estimate,
/// visibility, touchdown outcome and status.
inline FlightStep flight_step_from_json(const json& j) {
  FlightStep s;
  s.state.time = j.at("t").get<double>();
  s.state.position = vec_from_json(j.at("position"));
  s.state.velocity = vec_from_json(j.at("velocity"));
  s.state.yaw = j.at("yaw").get<double>();
  s.pad_center = vec_from_json(j.at("pad"));
  s.truth.depth = j.at("truth").at("depth").get<double>();
  s.truth.lateral = j.at("truth").at("lateral").get<double>();
  s.truth.altitude = j.at("truth").at("altitude").get<double>();
  s.observation.visible = j.at("observation").at("visible").get<bool>();
  if (const json& e = j.at("estimate"); !e.is_null()) {
    PositionEstimate est;
    est.altitude = e.at("altitude").get<double>();
    est.depth = e.at("depth").get<double>();
    est.lateral_offset = e.at("lateral").get<double>();
    est.confidence = e.at("confidence").get<double>();
    est.stale_for = e.at("stale_for").get<double>();
    est.extrapolated = e.at("extrapolated").get<bool>();
    s.estimate = est;
  }
  const std::string kind = j.at("outcome").at("kind").get<std::string>();
  s.outcome.kind = kind == "landed"    ? TouchdownOutcome::Kind::landed
                   : kind == "crashed" ? TouchdownOutcome::Kind::crashed
                                       : TouchdownOutcome::Kind::airborne;
  s.outcome.lateral_displacement = j.at("outcome").at("lateral_displacement").get<double>();
  s.status = status_from(j.at("status").get<std::string>());
  return s;
}

/// Trajectory back from a log written by trajectory_json(), for recomputing
/// metrics offline.
inline Trajectory trajectory_from_json(const json& j) {
  Trajectory t;
  t.initial = flight_step_from_json(j.at("initial"));
  for (const auto& row : j.at("steps")) {
    agent::TrajectoryStep st;
    st.flight = flight_step_from_json(row);
    if (!row.at("action").is_null()) st.action = row.at("action").get<std::size_t>();
    st.alpha = row.at("alpha").get<double>();
    st.conflict = row.at("conflict").get<double>();
    st.reward = row.at("reward").get<double>();
    t.steps.push_back(std::move(st));
  }
  return t;
}

/// Learning curve CSV: episode,return,epsilon
inline std::string learning_curve_csv(const std::vector<agent::EpisodeStat>& curve) {
  std::ostringstream out;
  out << "episode,return,epsilon\n";
  for (const auto& e : curve) out << e.episode << ',' << fixed(e.episode_return, 6) << ',' << fixed(e.epsilon, 6) << '\n';
  return out.str();
}

}  // namespace monoland::harness
