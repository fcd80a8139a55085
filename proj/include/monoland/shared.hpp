#pragma once

// Shared autonomy: scripted pilots, an autoregressive intent predictor over
// the pilot's own command history, conflict scoring and command blending.

#include <monoland/agent/landing.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <fstream>
#include <iomanip>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace monoland::shared {

using agent::Autopilot;
using agent::PolicySnapshot;
using agent::Trajectory;
using agent::TrajectoryStep;

enum class PilotKind { ideal, noisy, wind_compensating, adversarial_drift, idle };

inline std::string_view to_string(PilotKind k) {
  switch (k) {
    case PilotKind::ideal: return "ideal";
    case PilotKind::noisy: return "noisy";
    case PilotKind::wind_compensating: return "wind_compensating";
    case PilotKind::adversarial_drift: return "adversarial_drift";
    case PilotKind::idle: return "idle";
  }
  return "?";
}

inline PilotKind pilot_kind_from(std::string_view s) {
  for (PilotKind k : {PilotKind::ideal, PilotKind::noisy, PilotKind::wind_compensating, PilotKind::adversarial_drift,
                      PilotKind::idle})
    if (to_string(k) == s) return k;
  throw InvalidInput("unknown pilot kind: " + std::string(s));
}

/// Scripted stand-in for the human. Sees the true state, the pad and the wind.
/// Guidance: fly toward the pad at `cruise_altitude`, capped at `speed_max`;
/// once within `land_radius` descend at `descent` with the land flag set.
struct PilotModel {
  PilotKind kind = PilotKind::ideal;
  double noise_scale = 0.3;    // m/s, noisy pilot
  double lateral_bias = 0.5;   // m/s, adversarial drift along body y
  double gain = 0.8;           // 1/s, horizontal
  double vertical_gain = 0.8;  // 1/s
  double speed_max = 1.0;      // m/s, horizontal
  double cruise_altitude = 1.0;
  double land_radius = 0.3;
  double descent = 0.4;

  bool operator==(const PilotModel&) const = default;
};

/// `rng` is only drawn from by the noisy pilot.
inline ControlCommand pilot_command(const PilotModel& m, const DroneState& s, const Vec3& pad_center,
                                    const WindState& wind, double t, Rng& rng, const WorldParams& world = {}) {
  ControlCommand c;
  if (m.kind == PilotKind::idle) return c;
  Vec2 e(pad_center.x() - s.position.x(), pad_center.y() - s.position.y());
  Vec2 vh = m.gain * e;
  if (vh.norm() > m.speed_max) vh *= m.speed_max / vh.norm();
  double vz = 0.0;
  if (e.norm() < m.land_radius) {
    vz = -m.descent;
    c.land = true;
  } else {
    vz = std::clamp(m.vertical_gain * (m.cruise_altitude - s.position.z()), -m.speed_max, m.speed_max);
  }
  if (m.kind == PilotKind::wind_compensating) vh -= wind.drift(t);
  Vec3 body = rotate_z(Vec3(vh.x(), vh.y(), vz), -s.yaw);
  if (m.kind == PilotKind::noisy) {
    std::normal_distribution<double> g(0.0, 1.0);
    for (int i = 0; i < 3; ++i) body[i] += m.noise_scale * g(rng);
  }
  if (m.kind == PilotKind::adversarial_drift) body.y() += m.lateral_bias;
  c.v_cmd = body;
  return c.clamped(world);
}

/// Per-axis autoregressive predictor of the next command over the last
/// `order` commands plus a bias. Axes: vx, vy, vz, yaw_rate.
struct IntentModel {
  static constexpr std::size_t kAxes = 4;
  std::size_t order = 10;
  std::array<std::vector<double>, kAxes> coefficients{};  // order weights (oldest first) then bias
  bool trained = false;
  double error_ema = 0.0;

  static std::array<double, kAxes> axes_of(const ControlCommand& c) {
    return {c.v_cmd.x(), c.v_cmd.y(), c.v_cmd.z(), c.yaw_rate};
  }

  /// Prediction from exactly `order` most recent commands, oldest first.
  ControlCommand predict(std::span<const ControlCommand> recent, const WorldParams& world = {}) const {
    require(trained, "intent model is not trained");
    require(recent.size() == order, "intent prediction needs exactly `order` commands");
    std::array<double, kAxes> out{};
    for (std::size_t a = 0; a < kAxes; ++a) {
      double v = coefficients[a][order];
      for (std::size_t i = 0; i < order; ++i) v += coefficients[a][i] * axes_of(recent[i])[a];
      out[a] = v;
    }
    ControlCommand c;
    c.v_cmd = Vec3(out[0], out[1], out[2]);
    c.yaw_rate = out[3];
    c.land = recent.back().land;
    return c.clamped(world);
  }
};

struct IntentFitOptions {
  std::size_t order = 10;
  std::size_t min_steps = 200;
  double holdout_fraction = 0.2;
  double ridge = 1e-8;
  double ema_rate = 0.1;
};

/// Self-supervised fit: each window of `order` commands is labelled by the
/// command that followed it in the same log. The tail of each sequence is
/// held out to report the one-step error EMA.
inline IntentModel fit_intent(const std::vector<std::vector<ControlCommand>>& history,
                              const IntentFitOptions& opt = {}) {
  std::size_t total = 0;
  for (const auto& seq : history) total += seq.size();
  if (total < opt.min_steps)
    throw InsufficientData("intent fit needs at least " + std::to_string(opt.min_steps) + " command steps");

  struct Row {
    const std::vector<ControlCommand>* seq;
    std::size_t next;
  };
  std::vector<Row> train;
  std::vector<Row> test;
  for (const auto& seq : history) {
    if (seq.size() <= opt.order) continue;
    const std::size_t rows = seq.size() - opt.order;
    const std::size_t held = static_cast<std::size_t>(std::floor(opt.holdout_fraction * static_cast<double>(rows)));
    for (std::size_t r = 0; r < rows; ++r) (r < rows - held ? train : test).push_back({&seq, r + opt.order});
  }
  if (train.size() < opt.order + 1) throw InsufficientData("intent fit has too few training windows");

  IntentModel m;
  m.order = opt.order;
  const Eigen::Index p = static_cast<Eigen::Index>(opt.order + 1);
  for (std::size_t a = 0; a < IntentModel::kAxes; ++a) {
    Eigen::MatrixXd ata = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd atb = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd x(p);
    for (const Row& row : train) {
      for (std::size_t i = 0; i < opt.order; ++i)
        x[static_cast<Eigen::Index>(i)] = IntentModel::axes_of((*row.seq)[row.next - opt.order + i])[a];
      x[p - 1] = 1.0;
      ata.noalias() += x * x.transpose();
      atb += x * IntentModel::axes_of((*row.seq)[row.next])[a];
    }
    ata.diagonal().array() += opt.ridge * std::max(1.0, ata.diagonal().maxCoeff());
    const Eigen::VectorXd w = ata.ldlt().solve(atb);
    m.coefficients[a].assign(w.data(), w.data() + w.size());
  }
  m.trained = true;

  bool first = true;
  for (const Row& row : test) {
    const std::span<const ControlCommand> recent(row.seq->data() + (row.next - opt.order), opt.order);
    const ControlCommand pred = m.predict(recent);
    const auto pa = IntentModel::axes_of(pred);
    const auto ta = IntentModel::axes_of((*row.seq)[row.next]);
    double sq = 0.0;
    for (std::size_t a = 0; a < IntentModel::kAxes; ++a) sq += (pa[a] - ta[a]) * (pa[a] - ta[a]);
    const double err = std::sqrt(sq);
    m.error_ema = first ? err : (1.0 - opt.ema_rate) * m.error_ema + opt.ema_rate * err;
    first = false;
  }
  return m;
}

/// Online use of a fitted model over the live command stream.
class IntentTracker {
 public:
  explicit IntentTracker(std::optional<IntentModel> model = std::nullopt) : model_(std::move(model)) {}

  void push(const ControlCommand& c) {
    recent_.push_back(c);
    if (model_ && recent_.size() > model_->order) recent_.pop_front();
    if (!model_ && recent_.size() > 1) recent_.pop_front();
  }

  /// Predicted next human command; the last command when no model is set or
  /// the history is still short; nothing before the first command.
  std::optional<ControlCommand> predict() const {
    if (recent_.empty()) return std::nullopt;
    if (!model_ || recent_.size() < model_->order) return recent_.back();
    const std::vector<ControlCommand> window(recent_.begin(), recent_.end());
    return model_->predict(window);
  }

 private:
  std::optional<IntentModel> model_;
  std::deque<ControlCommand> recent_;
};

inline bool is_idle(const ControlCommand& c) { return c.v_cmd.isZero(0.0) && c.yaw_rate == 0.0 && !c.land; }

/// 0 for a zero human velocity; otherwise (1 - cos(human, ai)) / 2, raised
/// to 1 when the AI velocity also opposes the predicted next human command.
inline double conflict(const ControlCommand& human, const ControlCommand& ai,
                       const std::optional<ControlCommand>& predicted = std::nullopt) {
  const double hn = human.v_cmd.norm();
  if (hn == 0.0) return 0.0;
  const double an = ai.v_cmd.norm();
  const double cosine = an == 0.0 ? 0.0 : human.v_cmd.dot(ai.v_cmd) / (hn * an);
  double c = std::clamp((1.0 - cosine) / 2.0, 0.0, 1.0);
  // rounding in the cosine leaves exact opposition an ulp short of 1
  if (c > 1.0 - 1e-12) c = 1.0;
  if (c < 1e-12) c = 0.0;
  if (predicted && ai.v_cmd.dot(predicted->v_cmd) < 0.0) c = 1.0;
  return c;
}

struct BlendConfig {
  double alpha_max = 0.6;
  bool idle_passthrough = true;    // an idle pilot hands full authority to the AI
  double land_conflict_max = 0.2;  // AI land flag passes through below this conflict
  double land_descent_max = 0.4;   // descent limit on a blended landing command

  void validate() const {
    require(alpha_max >= 0.0 && alpha_max <= 1.0, "alpha_max must be within [0, 1]");
    require(land_descent_max > 0.0, "landing descent limit must be > 0");
  }

  bool operator==(const BlendConfig&) const = default;
};

struct BlendedCommand {
  ControlCommand command;
  double alpha = 0.0;
  double conflict = 0.0;
};

/// alpha = alpha_max (1 - conflict); command = alpha ai + (1 - alpha) human.
/// With `idle_passthrough` an idle pilot yields alpha = 1 while alpha_max > 0.
/// The AI land flag needs some AI weight: at alpha 0 the output is the human
/// command exactly.
inline BlendedCommand blend(const ControlCommand& human, const ControlCommand& ai, double conflict_value,
                            const BlendConfig& cfg = {}, const WorldParams& world = {}) {
  BlendedCommand b;
  b.conflict = std::clamp(conflict_value, 0.0, 1.0);
  b.alpha = cfg.alpha_max * (1.0 - b.conflict);
  if (cfg.idle_passthrough && cfg.alpha_max > 0.0 && is_idle(human)) b.alpha = 1.0;
  const double a = b.alpha;
  ControlCommand c;
  c.v_cmd = a * ai.v_cmd + (1.0 - a) * human.v_cmd;
  c.yaw_rate = a * ai.yaw_rate + (1.0 - a) * human.yaw_rate;
  c.land = human.land || (a > 0.0 && ai.land && b.conflict < cfg.land_conflict_max);
  if (c.land && a > 0.0 && a < 1.0) c.v_cmd.z() = std::max(c.v_cmd.z(), -cfg.land_descent_max);
  b.command = c.clamped(world);
  return b;
}

/// One shared-control episode advanced tick by tick: the AI proposes, the
/// human command is blended in, the world steps. Used by headless runs and
/// by live bridge sessions alike.
class SharedEpisode {
 public:
  SharedEpisode(const PolicySnapshot& policy, const FlightConfig& config, const EstimatorModel& model,
                const DroneState& start, std::uint64_t noise_seed, BlendConfig blend = {},
                std::optional<IntentModel> intent = std::nullopt, agent::RewardSpec rewards = {})
      : flight_(config, model, start, noise_seed),
        autopilot_(policy),
        blend_(blend),
        intent_(std::move(intent)),
        rewards_(rewards) {
    blend_.validate();
    trajectory_.initial = flight_.current();
  }

  const Flight& flight() const { return flight_; }
  bool finished() const { return flight_.finished(); }
  const Trajectory& trajectory() const { return trajectory_; }
  const BlendConfig& blend_config() const { return blend_; }
  void set_alpha_max(double a) {
    require(a >= 0.0 && a <= 1.0, "alpha_max must be within [0, 1]");
    blend_.alpha_max = a;
  }

  const TrajectoryStep& tick(const ControlCommand& human) {
    require(!finished(), "episode already finished");
    const WorldParams& world = flight_.config().world;
    require(human.within_bounds(world), "command out of bounds");
    const std::optional<PositionEstimate> prev = flight_.current().estimate;
    const Autopilot::Decision d = autopilot_.decide(flight_);
    const double c = conflict(human, d.command.command, intent_.predict());
    const BlendedCommand b = blend(human, d.command.command, c, blend_, world);

    // Pad-relative part of the applied command, for dead reckoning.
    const Vec3 ff = d.command.command.v_cmd - d.command.relative.v_cmd;
    ControlCommand relative = b.command;
    relative.v_cmd = b.alpha * d.command.relative.v_cmd + (1.0 - b.alpha) * (human.v_cmd - ff);

    const FlightStep& now = flight_.advance(b.command, relative);
    intent_.push(human);

    TrajectoryStep ts;
    ts.flight = now;
    ts.action = d.action;
    ts.ai_command = d.command.command;
    ts.human_command = human;
    ts.alpha = b.alpha;
    ts.conflict = b.conflict;
    ts.reward = agent::reward(prev, now.estimate, d.action.value_or(0), now.status, now.outcome.lateral_displacement,
                              rewards_);
    trajectory_.steps.push_back(std::move(ts));
    return trajectory_.steps.back();
  }

 private:
  Flight flight_;
  Autopilot autopilot_;
  BlendConfig blend_;
  IntentTracker intent_;
  agent::RewardSpec rewards_;
  Trajectory trajectory_;
};

/// Zero-order hold over timestamped commands: the latest command at or
/// before t, or zero once it is older than `staleness`.
class CommandHold {
 public:
  explicit CommandHold(double staleness = 0.5) : staleness_(staleness) {}

  void push(double t, const ControlCommand& c) {
    require(entries_.empty() || t >= entries_.back().t, "command times must be non-decreasing");
    entries_.push_back({t, c});
  }

  ControlCommand at(double t) const {
    auto it = std::upper_bound(entries_.begin(), entries_.end(), t,
                               [](double v, const Entry& e) { return v < e.t; });
    if (it == entries_.begin()) return {};
    --it;
    if (t - it->t > staleness_ + 1e-12) return {};
    return it->c;
  }

  std::size_t size() const { return entries_.size(); }

 private:
  struct Entry {
    double t;
    ControlCommand c;
  };
  double staleness_;
  std::vector<Entry> entries_;
};

struct CommandLogEntry {
  double t = 0.0;
  ControlCommand command;
  bool operator==(const CommandLogEntry&) const = default;
};

inline CommandHold hold_from_log(const std::vector<CommandLogEntry>& log, double staleness = 0.5) {
  CommandHold h(staleness);
  for (const auto& e : log) h.push(e.t, e.command);
  return h;
}

/// Drives an episode to its end. The human command at each tick is the held
/// command at the tick's start time.
template <typename HumanSource>
Trajectory run_shared(SharedEpisode& episode, HumanSource&& human) {
  while (!episode.finished()) episode.tick(human(episode.flight()));
  return episode.trajectory();
}

/// Command log CSV: t,vx,vy,vz,yaw_rate,land
inline std::string command_log_csv(const std::vector<CommandLogEntry>& log) {
  std::ostringstream out;
  out << "t,vx,vy,vz,yaw_rate,land\n";
  out << std::setprecision(17);
  for (const auto& e : log)
    out << e.t << ',' << e.command.v_cmd.x() << ',' << e.command.v_cmd.y() << ',' << e.command.v_cmd.z() << ','
        << e.command.yaw_rate << ',' << (e.command.land ? 1 : 0) << '\n';
  return out.str();
}

inline std::vector<CommandLogEntry> parse_command_log(std::string_view text) {
  std::vector<CommandLogEntry> out;
  std::istringstream in{std::string(text)};
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line != "t,vx,vy,vz,yaw_rate,land") throw FormatError("command log header mismatch");
      continue;
    }
    std::istringstream row(line);
    std::string cell;
    std::vector<double> v;
    while (std::getline(row, cell, ',')) {
      try {
        std::size_t used = 0;
        v.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw FormatError("bad number in command log: " + cell);
      } catch (const std::logic_error&) {
        throw FormatError("bad number in command log: " + cell);
      }
    }
    if (v.size() != 6) throw FormatError("command log row needs 6 fields");
    CommandLogEntry e;
    e.t = v[0];
    e.command.v_cmd = Vec3(v[1], v[2], v[3]);
    e.command.yaw_rate = v[4];
    e.command.land = v[5] != 0.0;
    out.push_back(e);
  }
  return out;
}

inline void write_command_log(const std::string& path, const std::vector<CommandLogEntry>& log) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path);
  f << command_log_csv(log);
}

inline std::vector<CommandLogEntry> read_command_log(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::ostringstream s;
  s << f.rdbuf();
  return parse_command_log(s.str());
}

}  // namespace monoland::shared
