// monoland: fit estimators, train policies, run the experiment suites,
// render reports, serve live sessions, fly a scripted pilot.

#include <monoland/bridge/server.hpp>
#include <monoland/config.hpp>
#include <monoland/workflow.hpp>

#include <CLI11.hpp>

#include <csignal>
#include <cstdio>
#include <iostream>

using namespace monoland;
namespace fs = std::filesystem;

namespace {

std::atomic<bridge::Server*> g_server{nullptr};

void on_signal(int) {
  if (auto* s = g_server.load()) s->stop();
}

EstimatorModel load_estimator(const fs::path& dir, const std::string& override_path) {
  return EstimatorModel::load(override_path.empty() ? workflow::estimator_path(dir).string() : override_path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monocular landmark landing: simulator, estimators, RL agent, shared autonomy"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "offset added to every seed");
  app.add_option("--out", out_dir, "output directory");

  auto* fit = app.add_subcommand("fit-estimators", "fit the altitude and depth estimators");

  auto* train = app.add_subcommand("train", "train one policy per configured seed");
  std::string estimator_in;
  train->add_option("--estimator", estimator_in, "estimator file (default <out>/estimator.llem)");
  std::size_t episodes = 0;
  train->add_option("--episodes", episodes, "override the episode count");

  auto* eval = app.add_subcommand("eval", "run a scenario suite with the trained policies");
  std::string suite = "static";
  eval->add_option("--scenario", suite, "static or dynamic")->check(CLI::IsMember({"static", "dynamic"}));
  std::string models_dir;
  eval->add_option("--models", models_dir, "directory with estimator and policies (default <out>)");
  bool trajectories = false;
  eval->add_flag("--trajectories", trajectories, "write one JSON log per episode");

  auto* report = app.add_subcommand("report", "render a JSON report in another format");
  std::string report_in;
  std::string format = "md";
  report->add_option("input", report_in, "report JSON")->required()->check(CLI::ExistingFile);
  report->add_option("--format", format, "csv, json or md")->check(CLI::IsMember({"csv", "json", "md"}));

  auto* serve = app.add_subcommand("serve", "run the live session server");
  std::string bind;
  serve->add_option("--bind", bind, "host:port (default from config or MONOLAND_BIND)");
  serve->add_option("--models", models_dir, "directory with estimator and policies (default <out>)");

  auto* demo = app.add_subcommand("demo-pilot", "fly a scripted pilot with the AI co-pilot");
  std::string pilot_kind;
  demo->add_option("--pilot", pilot_kind, "ideal, noisy, wind_compensating, adversarial_drift or idle");
  std::string demo_suite = "static";
  demo->add_option("--scenario", demo_suite, "static or dynamic")->check(CLI::IsMember({"static", "dynamic"}));
  std::size_t demo_case = 1;
  demo->add_option("--case", demo_case, "scenario id");
  double alpha_max = -1.0;
  demo->add_option("--alpha-max", alpha_max, "AI authority cap")->check(CLI::Range(0.0, 1.0));
  demo->add_option("--models", models_dir, "directory with estimator and policies (default <out>)");

  CLI11_PARSE(app, argc, argv);

  try {
    Config cfg = config_path.empty() ? Config{} : load_config(config_path);
    cfg = workflow::with_seed(cfg, seed);
    const fs::path out(out_dir);
    const fs::path models = models_dir.empty() ? out : fs::path(models_dir);

    if (*fit) {
      const EstimatorModel m = workflow::fit_estimator(cfg);
      fs::create_directories(out);
      m.save(workflow::estimator_path(out).string());
      std::printf("estimator: %llu samples, altitude rms %.4f m, depth rms %.4f m -> %s\n",
                  static_cast<unsigned long long>(m.training_sample_count), m.altitude_residual_rms,
                  m.depth_residual_rms, workflow::estimator_path(out).c_str());
    } else if (*train) {
      if (episodes > 0) cfg.training.episodes = episodes;
      const EstimatorModel m = load_estimator(out, estimator_in);
      const auto policies = workflow::train_all(cfg, m, out);
      for (std::size_t i = 0; i < policies.size(); ++i)
        std::printf("policy seed %llu -> %s\n", static_cast<unsigned long long>(cfg.training.seeds[i]),
                    workflow::policy_path(out, cfg.training.seeds[i]).c_str());
    } else if (*eval) {
      const EstimatorModel m = load_estimator(models, "");
      const auto policies = workflow::load_policies(cfg, models);
      const auto o = workflow::evaluate(cfg, workflow::suite_from(suite), policies, m, out, trajectories);
      std::cout << harness::emit_report(o.result.records, harness::ReportFormat::md);
      int ok = 0, n = 0;
      for (const auto& r : o.result.records) {
        ok += r.successes;
        n += r.runs;
      }
      std::printf("success %d/%d\n", ok, n);
    } else if (*report) {
      const auto records = harness::records_from_json(workflow::read_text(report_in));
      std::cout << harness::emit_report(records, harness::report_format_from(format));
    } else if (*serve) {
      bridge::apply_env_overrides(cfg.bridge);
      if (!bind.empty()) cfg.bridge.bind = bind;
      bridge::SessionAssets assets;
      assets.estimator = std::make_shared<const EstimatorModel>(load_estimator(models, ""));
      assets.policies = std::make_shared<const std::vector<agent::PolicySnapshot>>(workflow::load_policies(cfg, models));
      bridge::Server server(cfg, assets);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::printf("listening on port %u at %.1f Hz\n", server.port(), cfg.bridge.tick_rate_hz);
      std::fflush(stdout);
      server.run();
      g_server = nullptr;
    } else if (*demo) {
      if (!pilot_kind.empty()) cfg.pilot.kind = shared::pilot_kind_from(pilot_kind);
      if (alpha_max >= 0.0) cfg.blend.alpha_max = alpha_max;
      const EstimatorModel m = load_estimator(models, "");
      const auto policies = workflow::load_policies(cfg, models);
      const auto list = scenarios_for(cfg, workflow::suite_from(demo_suite));
      if (demo_case < 1 || demo_case > list.size()) throw InvalidInput("scenario id out of range");
      const auto& s = list[demo_case - 1];
      const auto o = workflow::demo_pilot(cfg, s, policies.front(), m);
      const std::string stem = "demo_" + demo_suite + "_case" + std::to_string(demo_case) + "_" +
                               std::string(shared::to_string(cfg.pilot.kind));
      workflow::write_text(out / (stem + "_commands.csv"), shared::command_log_csv(o.log));
      workflow::write_text(out / (stem + "_trajectory.json"),
                           harness::trajectory_json(s, s.seed, o.trajectory).dump(1) + "\n");
      std::printf("%s: %s, lateral %.2f cm, %.2f s\n", stem.c_str(), std::string(to_string(o.trajectory.status())).c_str(),
                  o.metrics.lateral_displacement_cm, o.metrics.time_to_land_s);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
