#include "support/fixtures.hpp"

#include <monoland/harness.hpp>

#include <gtest/gtest.h>

#include <sstream>

using namespace monoland;
using namespace monoland::harness;

namespace {

// Trajectory whose horizontal error at each (time, error) pair is `error`,
// all along the approach axis.
agent::Trajectory synthetic(const std::vector<std::pair<double, double>>& samples) {
  auto make = [](double t, double e) {
    FlightStep s;
    s.state.time = t;
    s.truth.depth = e;
    s.truth.altitude = 1.0;
    s.state.position = Vec3(e, 0.0, 1.0);
    return s;
  };
  agent::Trajectory tr;
  tr.initial = make(samples.front().first, samples.front().second);
  for (std::size_t i = 1; i < samples.size(); ++i) {
    agent::TrajectoryStep st;
    st.flight = make(samples[i].first, samples[i].second);
    tr.steps.push_back(st);
  }
  return tr;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

MetricsRecord sample_record(int id) {
  MetricsRecord r;
  r.test_case = id;
  r.distance_m = 5.0 * id;
  r.angle_deg = 15.0;
  r.altitude_error_cm = 1.234;
  r.lateral_displacement_cm = 3.0 + id;
  r.time_to_land_s = 12.5;
  r.successes = 14;
  r.runs = 15;
  return r;
}

}  // namespace

TEST(Scenarios, StaticGrid) {
  const auto g = scenario1_grid();
  ASSERT_EQ(g.size(), 14u);
  EXPECT_EQ(g[0].distance, 5.0);
  EXPECT_EQ(g[0].bearing_deg, 0.0);
  EXPECT_EQ(g[2].distance, 15.0);
  EXPECT_EQ(g[2].bearing_deg, 30.0);
  EXPECT_EQ(g[13].distance, 15.0);
  EXPECT_EQ(g[13].bearing_deg, 30.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_EQ(g[i].id, static_cast<int>(i + 1));
    EXPECT_EQ(g[i].seed, 1000u + 10u * i);
    EXPECT_EQ(g[i].altitude, 2.5);
    EXPECT_EQ(g[i].motion_type(), "static");
  }
}

TEST(Scenarios, DynamicSet) {
  const auto d = scenario2_set();
  ASSERT_EQ(d.size(), 5u);
  EXPECT_EQ(d[1].motion_type(), "linear");
  EXPECT_EQ(d[1].report_speed(), 1.0);
  EXPECT_EQ(d[3].motion_type(), "rotational");
  EXPECT_NEAR(d[3].report_speed(), 10.0, 1e-12);
  EXPECT_EQ(d[4].report_speed(), 1.5);
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(d[i].seed, 2000u + 10u * (i + 1));
}

TEST(Scenarios, StartStateOnTheBearing) {
  ScenarioConfig s;
  s.distance = 10.0;
  s.bearing_deg = 30.0;
  const PadConfig pad;
  const DroneState st = start_state_for(s, pad);
  const RelativePosition r = relative_to_pad(st.position, Vec3::Zero(), pad.facing);
  EXPECT_NEAR(r.depth, 10.0 * std::cos(kPi / 6), 1e-12);
  EXPECT_NEAR(r.lateral, 5.0, 1e-12);
  EXPECT_NEAR(st.position.z(), 2.5, 1e-12);
}

TEST(Metrics, TrackingWindowStartsAtCapture) {
  const auto t = synthetic({{0.0, 3.0}, {0.05, 2.0}, {0.1, 0.8}, {0.15, 0.4}, {0.2, 0.2}});
  EXPECT_NEAR(tracking_error(t), (0.8 + 0.4 + 0.2) / 3.0, 1e-15);
  const auto never = synthetic({{0.0, 3.0}, {0.05, 2.0}});
  EXPECT_NEAR(tracking_error(never), 2.5, 1e-15);
}

TEST(Metrics, TimeToStabilize) {
  std::vector<std::pair<double, double>> s;
  for (int i = 0; i <= 100; ++i) s.emplace_back(0.05 * i, i < 20 ? 1.0 : (i == 30 ? 0.2 : 0.05));
  // Below 0.1 m from t = 1.0, broken at 1.5, then from 1.55 for good.
  EXPECT_NEAR(*time_to_stabilize(synthetic(s)), 1.55, 1e-12);
  s.resize(60);
  EXPECT_FALSE(time_to_stabilize(synthetic(s)).has_value());
}

TEST(Metrics, AltitudeErrorAndDisplacement) {
  auto t = synthetic({{0.0, 3.0}, {0.05, 2.0}, {0.1, 1.0}});
  t.steps[0].flight.estimate = PositionEstimate{1.1, 0, 0, 1, 0, false};
  t.steps[1].flight.estimate = PositionEstimate{0.7, 0, 0, 1, 0, false};
  EXPECT_NEAR(altitude_error(t), 0.2, 1e-15);
  EXPECT_EQ(final_displacement(t), 1.0);
  t.steps[1].flight.outcome.kind = TouchdownOutcome::Kind::landed;
  t.steps[1].flight.outcome.lateral_displacement = 0.04;
  t.steps[1].flight.status = FlightStatus::landed;
  EXPECT_EQ(final_displacement(t), 0.04);
  PadConfig pad;
  EXPECT_TRUE(landed_on_pad(t, pad));
  t.steps[1].flight.outcome.lateral_displacement = pad.radius + 0.01;
  EXPECT_FALSE(landed_on_pad(t, pad));
}

TEST(Metrics, AggregateAveragesAndCounts) {
  MetricsRecord a = sample_record(1), b = sample_record(1);
  a.kind = b.kind = SuiteKind::dynamic_pad;
  a.tracking_error_cm = 10.0;
  a.successes = 1;
  a.runs = 1;
  b.lateral_displacement_cm = 6.0;
  b.successes = 0;
  b.runs = 1;
  const MetricsRecord m = aggregate({a, b});
  EXPECT_DOUBLE_EQ(m.lateral_displacement_cm, 5.0);
  EXPECT_EQ(*m.tracking_error_cm, 10.0);
  EXPECT_FALSE(m.time_to_stabilize_s.has_value());
  EXPECT_EQ(m.successes, 1);
  EXPECT_EQ(m.runs, 2);
  EXPECT_THROW(aggregate({}), InvalidInput);
}

TEST(Report, GoldenHeaders) {
  EXPECT_STREQ(kStaticHeader,
               "test_case,distance_m,angle_deg,altitude_error_cm,lateral_displacement_cm,time_to_land_s,success");
  EXPECT_STREQ(kDynamicHeader,
               "test_case,motion_type,speed,tracking_error_cm,landing_displacement_cm,time_to_stabilize_s,success");
}

TEST(Report, CsvOfOneRecord) {
  const auto l = lines(emit_report({sample_record(1)}, ReportFormat::csv));
  ASSERT_EQ(l.size(), 2u);
  EXPECT_EQ(l[0], kStaticHeader);
  EXPECT_EQ(l[1], "1,5.0,15.0,1.23,4.00,12.50,14/15");
}

TEST(Report, DynamicCsvWithMissingValues) {
  MetricsRecord r = sample_record(4);
  r.kind = SuiteKind::dynamic_pad;
  r.motion_type = "rotational";
  r.speed = 10.0;
  r.tracking_error_cm = 23.456;
  const auto l = lines(emit_report({r}, ReportFormat::csv));
  ASSERT_EQ(l.size(), 2u);
  EXPECT_EQ(l[1], "4,rotational,10.0,23.46,7.00,NA,14/15");
}

TEST(Report, MarkdownHasOneRowPerRecord) {
  std::vector<MetricsRecord> recs;
  for (int i = 1; i <= 5; ++i) recs.push_back(sample_record(i));
  const auto l = lines(emit_report(recs, ReportFormat::md));
  ASSERT_EQ(l.size(), 7u);
  EXPECT_EQ(l[1], "|---|---|---|---|---|---|---|");
  for (std::size_t i = 2; i < l.size(); ++i) EXPECT_EQ(l[i].rfind("| " + std::to_string(i - 1) + " |", 0), 0u);
}

TEST(Report, JsonRoundTrip) {
  std::vector<MetricsRecord> recs{sample_record(1), sample_record(2)};
  recs[1].lateral_displacement_cm = 0.1 + 0.2;
  EXPECT_EQ(records_from_json(emit_report(recs, ReportFormat::json)), recs);
  MetricsRecord d = sample_record(3);
  d.kind = SuiteKind::dynamic_pad;
  d.tracking_error_cm = 1.0 / 3.0;
  EXPECT_EQ(records_from_json(emit_report({d}, ReportFormat::json)), std::vector<MetricsRecord>{d});
}

TEST(Report, RejectsMixedKindsAndUnknownFormat) {
  MetricsRecord d = sample_record(2);
  d.kind = SuiteKind::dynamic_pad;
  EXPECT_THROW(emit_report({sample_record(1), d}, ReportFormat::csv), InvalidInput);
  EXPECT_THROW(report_format_from("xml"), InvalidInput);
}

TEST(Suite, SchemaAndDeterminism) {
  const auto configs = std::vector<ScenarioConfig>{fixture::static_case(1), fixture::static_case(4)};
  const std::vector<agent::PolicySnapshot> policies{fixture::quick_policy()};
  const FlightConfig base = fixture::config().flight;
  const SuiteResult a = run_suite(configs, policies, fixture::estimator(), base, 2);
  const SuiteResult b = run_suite(configs, policies, fixture::estimator(), base, 2, false);
  ASSERT_EQ(a.records.size(), 2u);
  ASSERT_EQ(a.runs.size(), 4u);
  EXPECT_EQ(a.records, b.records);
  EXPECT_EQ(a.records[0].runs, 2);
  EXPECT_EQ(a.runs[1].seed, configs[0].seed + 1);
  EXPECT_TRUE(b.runs[0].trajectory.steps.empty());
  EXPECT_FALSE(a.runs[0].trajectory.steps.empty());
  const auto l = lines(emit_report(a.records, ReportFormat::csv));
  ASSERT_EQ(l.size(), 3u);
  EXPECT_EQ(l[0], kStaticHeader);
}

TEST(TrajectoryLog, MetricsRecomputeBitIdentical) {
  const auto s = scenario2_set()[1];
  const FlightConfig fc = flight_config_for(s, fixture::config().flight);
  const agent::Trajectory t =
      agent::rollout(fixture::quick_policy(), fc, fixture::estimator(), start_state_for(s, fc.pad), s.seed);
  const json j = trajectory_json(s, s.seed, t);
  const json reparsed = json::parse(j.dump());
  const agent::Trajectory back = trajectory_from_json(reparsed);
  ASSERT_EQ(back.steps.size(), t.steps.size());
  EXPECT_EQ(compute_metrics(s, back, fc.pad), compute_metrics(s, t, fc.pad));
  EXPECT_EQ(reparsed.at("seed").get<std::uint64_t>(), s.seed);
  EXPECT_EQ(reparsed.at("status").get<std::string>(), std::string(to_string(t.status())));
}

TEST(TrajectoryLog, UnknownStatusRejected) { EXPECT_THROW(status_from("hovering"), FormatError); }

TEST(LearningCurve, Csv) {
  std::vector<agent::EpisodeStat> c(2);
  c[0].episode = 0;
  c[0].episode_return = -1.5;
  c[0].epsilon = 1.0;
  c[1].episode = 1;
  c[1].episode_return = 2.0;
  c[1].epsilon = 0.5;
  EXPECT_EQ(learning_curve_csv(c), "episode,return,epsilon\n0,-1.500000,1.000000\n1,2.000000,0.500000\n");
}
