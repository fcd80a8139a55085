#pragma once

// Run configuration: one JSON document with a section per module. Every key
// is optional and falls back to the built-in default; unknown keys are errors
// so typos don't silently run the defaults.

#include <monoland/harness.hpp>
#include <monoland/shared.hpp>

#include <nlohmann/json.hpp>

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace monoland {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EstimatorConfig {
  std::size_t samples = 50000;
  std::uint64_t seed = 1;
  PoseHull hull;
  FitOptions fit;
};

struct TrainingConfig {
  std::size_t episodes = 50000;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  agent::QLearningParams params;
  agent::BinScheme bins;
  agent::ActionSpec actions;
  agent::RewardSpec rewards;
  agent::StartDistribution starts;
};

struct HarnessConfig {
  std::size_t repeats = 5;
  double rotation_radius = 3.0;  // m, circling platform
  harness::MetricOptions metrics;
};

struct BridgeConfig {
  std::string bind = "127.0.0.1:8765";
  double tick_rate_hz = 20.0;
  double command_staleness = 0.5;  // s
  std::size_t start_scenario = 1;  // static scenario id used when start names none
};

inline FlightConfig default_flight_config() {
  FlightConfig f;
  f.noise = harness::default_scenario_noise();
  return f;
}

struct Config {
  FlightConfig flight = default_flight_config();
  EstimatorConfig estimator;
  TrainingConfig training;
  shared::BlendConfig blend;
  shared::PilotModel pilot;
  HarnessConfig harness;
  BridgeConfig bridge;
  std::uint64_t seed = 0;  // added to every scenario seed

  SensorSetup sensor_setup() const { return {flight.camera, flight.landmark, flight.pad, std::nullopt}; }

  void validate() const {
    flight.validate();
    training.bins.validate();
    training.actions.validate(flight.world);
    training.rewards.validate();
    blend.validate();
    require(!training.seeds.empty(), "training needs at least one seed");
    require(training.episodes >= 1, "training episodes must be >= 1");
    require(harness.repeats >= 1, "repeats must be >= 1");
    require(bridge.tick_rate_hz > 0.0, "tick rate must be > 0");
  }
};

namespace config_detail {

using nlohmann::json;

// Reads keys of one section into fields, tracking which keys were consumed.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + " must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(path_ + "." + key + ": " + e.what());
    }
  }

  void deg(const char* key, double& radians) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    double d = 0.0;
    get(key, d);
    radians = deg_to_rad(d);
  }

  void vec2(const char* key, Vec2& v) {
    std::vector<double> a{v.x(), v.y()};
    get(key, a);
    if (a.size() != 2) throw ConfigError(path_ + "." + key + " needs 2 numbers");
    v = Vec2(a[0], a[1]);
  }

  void vec3(const char* key, Vec3& v) {
    std::vector<double> a{v.x(), v.y(), v.z()};
    get(key, a);
    if (a.size() != 3) throw ConfigError(path_ + "." + key + " needs 3 numbers");
    v = Vec3(a[0], a[1], a[2]);
  }

  bool has(const char* key) const { return j_.contains(key); }

  Section sub(const char* key) {
    seen_.insert(key);
    static const json empty = json::object();
    return Section(j_.contains(key) ? j_.at(key) : empty, path_ + "." + key);
  }

  void done() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError("unknown config key " + path_ + "." + k);
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace config_detail

inline Config config_from_json(const nlohmann::json& doc) {
  using config_detail::Section;
  Config c;
  Section root(doc, "config");
  root.get("seed", c.seed);

  {
    Section s = root.sub("world");
    s.get("v_max", c.flight.world.v_max);
    s.get("wind_max", c.flight.world.wind_max);
    s.get("v_land_max", c.flight.world.v_land_max);
    s.get("dt", c.flight.world.dt);
    s.get("yaw_rate_max", c.flight.world.yaw_rate_max);
    s.done();
  }
  {
    Section s = root.sub("camera");
    s.get("focal_px", c.flight.camera.focal_px);
    s.get("image_width", c.flight.camera.image_width);
    s.get("image_height", c.flight.camera.image_height);
    s.deg("mount_pitch_deg", c.flight.camera.mount_pitch);
    s.done();
  }
  {
    Section s = root.sub("landmark");
    s.get("offset_from_pad", c.flight.landmark.offset_from_pad);
    s.get("height", c.flight.landmark.height);
    s.deg("inclination_deg", c.flight.landmark.inclination);
    s.get("diameter", c.flight.landmark.diameter);
    if (s.has("band_edges_deg")) {
      std::vector<double> edges;
      s.get("band_edges_deg", edges);
      if (edges.size() != 2) throw ConfigError("config.landmark.band_edges_deg needs 2 numbers");
      c.flight.landmark.band_edges = {deg_to_rad(edges[0]), deg_to_rad(edges[1])};
    } else {
      s.get("band_edges_deg", c.flight.landmark.band_edges);  // marks the key as known
    }
    s.done();
  }
  {
    Section s = root.sub("pad");
    s.get("radius", c.flight.pad.radius);
    s.deg("facing_deg", c.flight.pad.facing);
    s.vec3("start", c.flight.pad.motion.start);
    s.done();
  }
  {
    Section s = root.sub("noise");
    s.get("sigma_diameter_px", c.flight.noise.sigma_diameter_px);
    s.get("sigma_angle", c.flight.noise.sigma_angle);
    s.get("sigma_centroid_px", c.flight.noise.sigma_centroid_px);
    s.get("dropout_prob", c.flight.noise.dropout_prob);
    s.done();
  }
  {
    Section s = root.sub("wind");
    s.vec2("velocity", c.flight.wind.velocity);
    s.get("gust_amplitude", c.flight.wind.gust_amplitude);
    s.get("gust_period", c.flight.wind.gust_period);
    s.done();
  }
  {
    Section s = root.sub("flight");
    s.get("depth_min", c.flight.bounds.depth_min);
    s.get("depth_max", c.flight.bounds.depth_max);
    s.get("lateral_max", c.flight.bounds.lateral_max);
    s.get("altitude_max", c.flight.bounds.altitude_max);
    s.get("staleness_horizon", c.flight.staleness_horizon);
    s.get("max_ticks", c.flight.max_ticks);
    s.done();
  }
  {
    Section s = root.sub("estimator");
    s.get("samples", c.estimator.samples);
    s.get("seed", c.estimator.seed);
    s.get("knots", c.estimator.fit.knots);
    s.get("smoothing", c.estimator.fit.smoothing);
    s.get("depth_min", c.estimator.hull.depth_min);
    s.get("depth_max", c.estimator.hull.depth_max);
    s.get("altitude_min", c.estimator.hull.altitude_min);
    s.get("altitude_max", c.estimator.hull.altitude_max);
    s.deg("bearing_max_deg", c.estimator.hull.bearing_max);
    s.done();
  }
  {
    Section s = root.sub("rl");
    TrainingConfig& t = c.training;
    s.get("episodes", t.episodes);
    s.get("seeds", t.seeds);
    s.get("alpha", t.params.alpha);
    s.get("gamma", t.params.gamma);
    s.get("epsilon_start", t.params.epsilon_start);
    s.get("epsilon_end", t.params.epsilon_end);
    s.get("decay_fraction", t.params.decay_fraction);
    s.get("max_steps", t.params.max_steps);
    {
      Section b = s.sub("bins");
      b.get("altitude_edges", t.bins.altitude_edges);
      b.get("depth_edges", t.bins.depth_edges);
      b.get("lateral_edges", t.bins.lateral_edges);
      b.get("confidence_threshold", t.bins.confidence_threshold);
      b.done();
    }
    {
      Section a = s.sub("actions");
      a.get("speed", t.actions.speed);
      a.get("land_descent", t.actions.land_descent);
      a.get("land_gain", t.actions.land_gain);
      a.get("hold_ticks", t.actions.hold_ticks);
      a.done();
    }
    {
      Section r = s.sub("rewards");
      r.get("w_progress", t.rewards.w_progress);
      r.get("w_time", t.rewards.w_time);
      r.get("land_bonus", t.rewards.land_bonus);
      r.get("land_scale", t.rewards.land_scale);
      r.get("crash", t.rewards.crash);
      r.get("out_of_bounds", t.rewards.out_of_bounds);
      r.get("progress_clip", t.rewards.progress_clip);
      r.done();
    }
    {
      Section st = s.sub("starts");
      st.get("distance_min", t.starts.distance_min);
      st.get("distance_max", t.starts.distance_max);
      st.deg("bearing_max_deg", t.starts.bearing_max);
      st.get("altitude", t.starts.altitude);
      st.get("jitter", t.starts.jitter);
      st.get("moving_fraction", t.starts.moving_fraction);
      st.get("linear_speed_max", t.starts.linear_speed_max);
      st.deg("rotation_rate_max_deg", t.starts.rotation_rate_max);
      st.get("rotation_radius", t.starts.rotation_radius);
      st.done();
    }
    s.done();
  }
  {
    Section s = root.sub("blend");
    s.get("alpha_max", c.blend.alpha_max);
    s.get("idle_passthrough", c.blend.idle_passthrough);
    s.get("land_conflict_max", c.blend.land_conflict_max);
    s.get("land_descent_max", c.blend.land_descent_max);
    s.done();
  }
  {
    Section s = root.sub("pilot");
    std::string kind(shared::to_string(c.pilot.kind));
    s.get("kind", kind);
    c.pilot.kind = shared::pilot_kind_from(kind);
    s.get("noise_scale", c.pilot.noise_scale);
    s.get("lateral_bias", c.pilot.lateral_bias);
    s.get("gain", c.pilot.gain);
    s.get("vertical_gain", c.pilot.vertical_gain);
    s.get("speed_max", c.pilot.speed_max);
    s.get("cruise_altitude", c.pilot.cruise_altitude);
    s.get("land_radius", c.pilot.land_radius);
    s.get("descent", c.pilot.descent);
    s.done();
  }
  {
    Section s = root.sub("harness");
    s.get("repeats", c.harness.repeats);
    s.get("rotation_radius", c.harness.rotation_radius);
    s.get("capture_radius", c.harness.metrics.capture_radius);
    s.get("stabilize_radius", c.harness.metrics.stabilize_radius);
    s.get("stabilize_dwell", c.harness.metrics.stabilize_dwell);
    s.done();
  }
  {
    Section s = root.sub("bridge");
    s.get("bind", c.bridge.bind);
    s.get("tick_rate_hz", c.bridge.tick_rate_hz);
    s.get("command_staleness", c.bridge.command_staleness);
    s.get("start_scenario", c.bridge.start_scenario);
    s.done();
  }
  root.done();
  c.validate();
  return c;
}

inline Config parse_config(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text, nullptr, true, true);  // comments allowed
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    return config_from_json(doc);
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
}

inline Config load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config " + path);
  std::ostringstream s;
  s << f.rdbuf();
  return parse_config(s.str());
}

/// Static and dynamic scenario lists under a config: its pad, noise and wind,
/// seeds offset by the config seed.
inline std::vector<harness::ScenarioConfig> scenarios_for(const Config& c, harness::SuiteKind kind) {
  auto list = kind == harness::SuiteKind::static_pad ? harness::scenario1_grid(c.flight.pad)
                                                     : harness::scenario2_set(c.flight.pad, c.harness.rotation_radius);
  for (auto& s : list) {
    s.noise = c.flight.noise;
    s.wind = c.flight.wind;
    s.seed += c.seed;
  }
  return list;
}

}  // namespace monoland
