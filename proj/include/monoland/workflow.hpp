#pragma once

// The fit / train / eval / demo workflows behind the command-line tool, with
// their on-disk layout under one output directory.

#include <monoland/config.hpp>
#include <monoland/harness.hpp>
#include <monoland/shared.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace monoland::workflow {

namespace fs = std::filesystem;

inline fs::path estimator_path(const fs::path& out) { return out / "estimator.llem"; }
inline fs::path policy_path(const fs::path& out, std::uint64_t seed) {
  return out / ("policy_seed" + std::to_string(seed) + ".llqp");
}
inline fs::path curve_path(const fs::path& out, std::uint64_t seed) {
  return out / ("learning_curve_seed" + std::to_string(seed) + ".csv");
}

inline std::string suite_name(harness::SuiteKind k) { return k == harness::SuiteKind::static_pad ? "static" : "dynamic"; }

inline harness::SuiteKind suite_from(const std::string& s) {
  if (s == "static") return harness::SuiteKind::static_pad;
  if (s == "dynamic") return harness::SuiteKind::dynamic_pad;
  throw InvalidInput("scenario must be static or dynamic, got " + s);
}

inline void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << text;
}

inline std::string read_text(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

/// Offsets every seeded stream by `seed`: estimator sampling, training and
/// scenario seeds.
inline Config with_seed(Config c, std::uint64_t seed) {
  c.seed += seed;
  c.estimator.seed += seed;
  for (auto& s : c.training.seeds) s += seed;
  return c;
}

inline EstimatorModel fit_estimator(const Config& c) {
  const SensorSetup setup = c.sensor_setup();
  const auto samples = collect_training_set(setup, hull_sampler(c.estimator.hull, setup.pad), c.estimator.samples,
                                            c.estimator.seed);
  return fit_estimators(samples, setup.camera, setup.landmark.offset_from_pad, c.estimator.fit);
}

inline agent::TrainedPolicy train_one(const Config& c, const EstimatorModel& model, std::uint64_t seed) {
  agent::LandingEnv env(c.flight, model, c.training.bins, c.training.actions, c.training.rewards, c.training.starts);
  return agent::train_policy(env, c.training.params, c.training.episodes, seed);
}

/// Trains one policy per configured seed and writes policies and curves.
inline std::vector<agent::PolicySnapshot> train_all(const Config& c, const EstimatorModel& model, const fs::path& out) {
  fs::create_directories(out);
  std::vector<agent::PolicySnapshot> policies;
  for (std::uint64_t seed : c.training.seeds) {
    agent::TrainedPolicy t = train_one(c, model, seed);
    t.policy.save(policy_path(out, seed).string());
    write_text(curve_path(out, seed), harness::learning_curve_csv(t.curve));
    policies.push_back(std::move(t.policy));
  }
  return policies;
}

inline std::vector<agent::PolicySnapshot> load_policies(const Config& c, const fs::path& dir) {
  std::vector<agent::PolicySnapshot> out;
  for (std::uint64_t seed : c.training.seeds) out.push_back(agent::PolicySnapshot::load(policy_path(dir, seed).string()));
  return out;
}

struct EvalOutput {
  harness::SuiteResult result;
  std::vector<fs::path> files;
};

/// Runs a suite and writes report_<suite>.{csv,json,md}; with
/// `trajectories`, also one JSON log per episode under trajectories/.
inline EvalOutput evaluate(const Config& c, harness::SuiteKind kind, const std::vector<agent::PolicySnapshot>& policies,
                           const EstimatorModel& model, const fs::path& out, bool trajectories) {
  EvalOutput o;
  const auto scenarios = scenarios_for(c, kind);
  o.result = harness::run_suite(scenarios, policies, model, c.flight, c.harness.repeats, trajectories, c.harness.metrics);
  const std::string name = suite_name(kind);
  for (auto [fmt, ext] : {std::pair{harness::ReportFormat::csv, ".csv"}, std::pair{harness::ReportFormat::json, ".json"},
                          std::pair{harness::ReportFormat::md, ".md"}}) {
    const fs::path p = out / ("report_" + name + ext);
    write_text(p, harness::emit_report(o.result.records, fmt));
    o.files.push_back(p);
  }
  if (trajectories) {
    for (const auto& run : o.result.runs) {
      const std::uint64_t repeat = run.seed - scenarios[static_cast<std::size_t>(run.scenario.id - 1)].seed;
      char buf[96];
      std::snprintf(buf, sizeof buf, "%s_case%02d_policy%zu_rep%llu.json", name.c_str(), run.scenario.id,
                    run.policy_index, static_cast<unsigned long long>(repeat));
      const fs::path p = out / "trajectories" / buf;
      write_text(p, harness::trajectory_json(run.scenario, run.seed, run.trajectory).dump(1) + "\n");
      o.files.push_back(p);
    }
  }
  return o;
}

struct DemoOutput {
  agent::Trajectory trajectory;
  harness::MetricsRecord metrics;
  std::vector<shared::CommandLogEntry> log;
};

/// A shared-control episode with the configured scripted pilot flying
/// against the first policy. The pilot's commands are recorded as a log.
inline DemoOutput demo_pilot(const Config& c, const harness::ScenarioConfig& s, const agent::PolicySnapshot& policy,
                             const EstimatorModel& model) {
  const FlightConfig fc = harness::flight_config_for(s, c.flight);
  shared::SharedEpisode ep(policy, fc, model, harness::start_state_for(s, fc.pad), s.seed, c.blend);
  Rng rng(s.seed ^ 0x9E3779B97F4A7C15ull);
  DemoOutput o;
  o.trajectory = shared::run_shared(ep, [&](const Flight& f) {
    const ControlCommand h = shared::pilot_command(c.pilot, f.state(), f.current().pad_center, f.config().wind,
                                                   f.state().time, rng, f.config().world);
    o.log.push_back({f.state().time, h});
    return h;
  });
  o.metrics = harness::compute_metrics(s, o.trajectory, fc.pad, c.harness.metrics);
  return o;
}

}  // namespace monoland::workflow
