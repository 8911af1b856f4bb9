#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "beamsense/harness.hpp"

using namespace beamsense;

namespace {

ScenarioConfig small_config(ScenarioKind kind) {
  ScenarioConfig cfg;
  cfg.kind = kind;
  cfg.ttis = 140;
  cfg.repeats = 2;
  return cfg;
}

RepeatMetrics metrics(std::size_t repeat, double rate, std::optional<double> delay, double coverage) {
  RepeatMetrics m;
  m.repeat = repeat;
  m.sum_rate_mbps = rate;
  m.mean_delay_ms = delay;
  m.coverage = coverage;
  return m;
}

SweepResult single_point(ScenarioKind kind, std::vector<RepeatMetrics> reps) {
  SweepResult s;
  s.kind = kind;
  s.axis = SweepAxis::Error;
  s.points.push_back({17.11, aggregate(kind, std::move(reps))});
  return s;
}

std::string summary_text(const RunMetrics& m) {
  std::ostringstream out;
  write_summary_header(out);
  write_summary_rows(out, m, "none", "");
  return out.str();
}

}  // namespace

TEST(Statistics, StudentTQuantiles) {
  // Two-sided 95% critical values from standard tables.
  EXPECT_NEAR(student_t_quantile(0.975, 1), 12.7062, 1e-4);
  EXPECT_NEAR(student_t_quantile(0.975, 4), 2.7764, 1e-4);
  EXPECT_NEAR(student_t_quantile(0.975, 19), 2.0930, 1e-4);
}

TEST(Statistics, ConfidenceIntervalByHand) {
  const std::vector<double> v{1, 2, 3, 4, 5};
  const auto s = summarize(v);
  EXPECT_DOUBLE_EQ(s.mean, 3.0);
  ASSERT_TRUE(s.ci_half_width);
  // sample std = sqrt(2.5); t = 2.776445 for 4 dof.
  EXPECT_NEAR(*s.ci_half_width, 2.776445 * std::sqrt(2.5) / std::sqrt(5.0), 1e-6);
  EXPECT_EQ(s.n, 5u);
  const std::vector<double> one{7};
  EXPECT_FALSE(summarize(one).ci_half_width);
  const std::vector<double> same{2, 2, 2};
  EXPECT_EQ(*summarize(same).ci_half_width, 0.0);
}

TEST(Config, JsonRoundTripAndStrictKeys) {
  ScenarioConfig cfg;
  cfg.kind = ScenarioKind::UkMeansError;
  cfg.n_clusters = 4;
  cfg.error_rms_m = 3.62;
  cfg.uncertainty_radius_m = 5.0;
  cfg.dqn.network = "feedforward";
  cfg.population.n_groups = 4;
  const auto j = to_json(cfg);
  const auto back = scenario_from_json(j);
  EXPECT_EQ(to_json(back).dump(), j.dump());
  EXPECT_EQ(back.uncertainty_radius(), 5.0);

  auto bad = j;
  bad["unknown_knob"] = 1;
  EXPECT_THROW(scenario_from_json(bad), std::exception);
  auto bad_nested = j;
  bad_nested["dqn"]["lr"] = 0.1;
  EXPECT_THROW(scenario_from_json(bad_nested), std::exception);

  // Missing keys keep the base values.
  const auto partial = scenario_from_json(nlohmann::json{{"ttis", 77}});
  EXPECT_EQ(partial.ttis, 77u);
  EXPECT_EQ(partial.n_clusters, ScenarioConfig{}.n_clusters);
}

TEST(Config, DerivedQuantitiesAndValidation) {
  ScenarioConfig cfg;
  EXPECT_DOUBLE_EQ(cfg.uncertainty_radius(), 2.0 * 17.11);
  cfg.tile_beams = true;
  cfg.n_clusters = 4;
  EXPECT_DOUBLE_EQ(cfg.beam_width_rad(), std::numbers::pi / 2);
  EXPECT_NO_THROW(cfg.validate());
  cfg.n_clusters = 7;  // more clusters than UEs
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  EXPECT_EQ(parse_scenario("ukm-error"), ScenarioKind::UkMedoidsError);
  EXPECT_THROW(parse_scenario("x"), std::invalid_argument);
  EXPECT_EQ(parse_axis("beam_width"), SweepAxis::BeamWidth);
}

TEST(Harness, ExactScenarioWithSeparatedGroupsIsFullyCovered) {
  auto cfg = small_config(ScenarioKind::KMeansExact);
  cfg.record_trace = true;
  const auto m = run_scenario(cfg);
  for (const auto& r : m.repeats) EXPECT_EQ(r.coverage, 1.0);
  for (const auto& t : m.traces[0])
    if (t.reclustered) EXPECT_EQ(t.coverage, 1.0) << t.tti;
}

TEST(Harness, ZeroLoad) {
  auto cfg = small_config(ScenarioKind::UkMedoidsError);
  cfg.load_mbps = 0.0;
  const auto m = run_scenario(cfg);
  EXPECT_EQ(m.sum_rate.mean, 0.0);
  EXPECT_FALSE(m.delay);
  for (const auto& r : m.repeats) {
    EXPECT_FALSE(r.mean_delay_ms);
    EXPECT_GT(r.coverage, 0.0);
  }
}

TEST(Harness, DeterministicOutputs) {
  auto cfg = small_config(ScenarioKind::UkMeansError);
  cfg.record_trace = true;
  const auto a = run_scenario(cfg), b = run_scenario(cfg);
  EXPECT_EQ(summary_text(a), summary_text(b));
  std::ostringstream ta, tb;
  write_tti_jsonl(ta, a);
  write_tti_jsonl(tb, b);
  EXPECT_EQ(ta.str(), tb.str());
  EXPECT_FALSE(ta.str().empty());
}

TEST(Harness, RepeatSeedsAreOffsetFromBase) {
  auto cfg = small_config(ScenarioKind::KMeansError);
  cfg.base_seed = 40;
  const auto m = run_scenario(cfg);
  EXPECT_EQ(m.repeats[0].seed, 40u);
  EXPECT_EQ(m.repeats[1].seed, 41u);
  // A lone repeat at the same seed reproduces the batch entry.
  EXPECT_EQ(run_repeat(cfg, 1).sum_rate_mbps, m.repeats[1].sum_rate_mbps);
}

TEST(Harness, ScenariosShareTrafficTraces) {
  std::vector<std::vector<std::vector<std::uint64_t>>> arrivals;
  for (ScenarioKind k : kAllScenarios) {
    auto cfg = small_config(k);
    cfg.repeats = 1;
    std::vector<TtiRecord> trace;
    run_repeat(cfg, 0, &trace);
    std::vector<std::vector<std::uint64_t>> a;
    for (const auto& t : trace) a.push_back(t.arrivals);
    arrivals.push_back(a);
  }
  for (std::size_t k = 1; k < arrivals.size(); ++k) EXPECT_EQ(arrivals[k], arrivals[0]) << k;
}

TEST(Harness, PacketConservation) {
  const auto m = run_scenario(small_config(ScenarioKind::UkMedoidsError));
  for (const auto& r : m.repeats) {
    EXPECT_LE(r.packets_served, r.packets_arrived);
    EXPECT_LE(r.bits_served, r.packets_arrived * 256);
    EXPECT_GT(r.packets_served, 0u);
  }
}

TEST(Sweep, TiledBeamsReachFullCoverageByFive) {
  ScenarioConfig cfg = small_config(ScenarioKind::KMeansExact);
  cfg.tile_beams = true;
  cfg.population.n_groups = 5;
  cfg.population.ues_per_group = 2;
  cfg.population.min_separation_deg = 60.0;
  cfg.dqn.max_ues = 10;  // a single beam serves everyone
  cfg.ttis = 50;
  const std::vector<double> ns{1, 2, 3, 4, 5};
  const auto s = sweep(cfg, SweepAxis::Beams, ns);
  ASSERT_EQ(s.points.size(), 5u);
  bool reached = false;
  for (const auto& p : s.points) reached = reached || p.metrics.coverage.mean == 1.0;
  EXPECT_TRUE(reached);
  EXPECT_EQ(s.points.back().metrics.coverage.mean, 1.0);
  EXPECT_EQ(s.points.front().metrics.coverage.mean, 1.0);  // one 360 degree beam
}

TEST(Sweep, DelayNonDecreasingInLoad) {
  ScenarioConfig cfg = small_config(ScenarioKind::KMeansExact);
  cfg.ttis = 700;
  const std::vector<double> loads{2, 6, 10};
  const auto s = sweep(cfg, SweepAxis::Load, loads);
  for (std::size_t i = 1; i < s.points.size(); ++i)
    EXPECT_GE(s.points[i].metrics.delay->mean, s.points[i - 1].metrics.delay->mean) << loads[i];
}

TEST(Sweep, ApplyAxis) {
  ScenarioConfig cfg;
  EXPECT_EQ(apply_axis(cfg, SweepAxis::Load, 3.0).load_mbps, 3.0);
  EXPECT_EQ(apply_axis(cfg, SweepAxis::Error, 3.62).error_rms_m, 3.62);
  EXPECT_EQ(apply_axis(cfg, SweepAxis::Beams, 4.0).n_clusters, 4u);
  EXPECT_EQ(apply_axis(cfg, SweepAxis::BeamWidth, 45.0).beam_width_deg, 45.0);
}

TEST(Compare, IdenticalRunsGiveZeroDifferences) {
  std::vector<SweepResult> rs;
  for (ScenarioKind k : kAllScenarios)
    rs.push_back(single_point(k, {metrics(0, 5, 1.0, 0.9), metrics(1, 6, 2.0, 0.8)}));
  const auto rep = compare_scenarios(rs);
  EXPECT_TRUE(rep.all_satisfied);
  EXPECT_EQ(rep.rows.size(), 4u * 3u);  // three adjacent pairs plus exact vs K, three metrics
  for (const auto& row : rep.rows) {
    EXPECT_EQ(row.difference.mean, 0.0);
    EXPECT_FALSE(row.significant);
  }
}

TEST(Compare, KnownDifferences) {
  std::vector<SweepResult> rs{
      single_point(ScenarioKind::KMeansExact, {metrics(0, 10, 1.0, 1.0), metrics(1, 12, 1.0, 1.0)}),
      single_point(ScenarioKind::KMeansError, {metrics(0, 7, 3.0, 0.5), metrics(1, 8, 2.0, 0.7)}),
  };
  const auto rep = compare_scenarios(rs);
  ASSERT_EQ(rep.rows.size(), 3u);
  EXPECT_EQ(rep.rows[0].metric, "sum_rate");
  EXPECT_DOUBLE_EQ(rep.rows[0].difference.mean, 3.5);  // (3 + 4) / 2
  EXPECT_DOUBLE_EQ(rep.rows[1].difference.mean, 0.4);  // (0.5 + 0.3) / 2
  EXPECT_DOUBLE_EQ(rep.rows[2].difference.mean, 1.5);  // worse - better delay
  EXPECT_EQ(rep.rows[0].better, ScenarioKind::KMeansExact);
  EXPECT_TRUE(rep.all_satisfied);

  rs[1] = single_point(ScenarioKind::KMeansError, {metrics(0, 11, 1.0, 1.0), metrics(1, 13, 1.0, 1.0)});
  EXPECT_FALSE(compare_scenarios(rs).all_satisfied);
  rs[1].points[0].value = 3.62;
  EXPECT_THROW(compare_scenarios(rs), std::invalid_argument);
}

TEST(Output, SummaryCsvRoundTrip) {
  const auto m = run_scenario(small_config(ScenarioKind::UkMedoidsError));
  std::stringstream ss;
  write_summary_header(ss);
  write_summary_rows(ss, m, "error", "17.11");
  const auto back = read_summary_csv(ss);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].kind, ScenarioKind::UkMedoidsError);
  EXPECT_EQ(back[0].axis, SweepAxis::Error);
  ASSERT_EQ(back[0].points.size(), 1u);
  const auto& r = back[0].points[0].metrics.repeats;
  ASSERT_EQ(r.size(), m.repeats.size());
  for (std::size_t k = 0; k < r.size(); ++k) {
    EXPECT_EQ(r[k].sum_rate_mbps, m.repeats[k].sum_rate_mbps);
    EXPECT_EQ(r[k].mean_delay_ms, m.repeats[k].mean_delay_ms);
    EXPECT_EQ(r[k].coverage, m.repeats[k].coverage);
  }
  std::istringstream bad("a,b\n");
  EXPECT_THROW(read_summary_csv(bad), std::runtime_error);
}
