#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "beamsense/clustering.hpp"
#include "beamsense/radio.hpp"
#include "beamsense/scheduler.hpp"
#include "json.hpp"

namespace beamsense {

enum class ScenarioKind {
  KMeansError,     // K-means on observed positions
  UkMeansError,    // UK-means on uncertain observed positions
  UkMedoidsError,  // UK-medoids on uncertain observed positions
  KMeansExact,     // K-means on true positions
};

inline constexpr ScenarioKind kAllScenarios[] = {ScenarioKind::KMeansError, ScenarioKind::UkMeansError,
                                                 ScenarioKind::UkMedoidsError, ScenarioKind::KMeansExact};

std::string to_string(ScenarioKind k);  // k-error, uk-error, ukm-error, k-exact
ScenarioKind parse_scenario(const std::string& s);

/// UEs arranged in angular hotspots around the gNB.
struct PopulationConfig {
  std::size_t n_groups = 3;
  std::size_t ues_per_group = 2;
  std::size_t urllc_per_group = 1;
  double range_min_m = 30.0;
  double range_max_m = 90.0;
  double group_spread_m = 5.0;  // UEs stay within this radius of the group center
  double min_separation_deg = 60.0;
  double speed_min_mps = 1.0;
  double speed_max_mps = 3.0;
  std::size_t waypoints = 4;

  std::size_t n_ues() const { return n_groups * ues_per_group; }
  void validate() const;
};

struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::UkMedoidsError;
  std::size_t n_clusters = 3;
  double beam_width_deg = 60.0;
  // When set, beam width is 360 / n_clusters degrees.
  bool tile_beams = false;
  double error_rms_m = 17.11;
  // Uncertainty radius handed to UK methods: explicit, or factor * RMS error.
  std::optional<double> uncertainty_radius_m;
  double uncertainty_factor = 2.0;
  double load_mbps = 4.0;
  std::vector<double> loads_mbps = {2.0, 3.0, 4.0, 5.0, 6.0};
  std::size_t ttis = 1400;
  std::size_t recluster_period = 10;
  std::size_t repeats = 5;
  std::uint64_t base_seed = 1;
  std::size_t rbgs = 8;
  bool record_trace = false;

  PopulationConfig population;
  ChannelModel channel;
  DqnConfig dqn;
  ClusteringOptions clustering;

  double uncertainty_radius() const;
  double beam_width_rad() const;
  void validate() const;
};

nlohmann::json to_json(const ScenarioConfig& cfg);
/// Missing keys keep their defaults; unknown keys are rejected.
ScenarioConfig scenario_from_json(const nlohmann::json& j, ScenarioConfig base = {});
ScenarioConfig load_config(const std::filesystem::path& path);

/// Sample mean with a two-sided 95% Student-t interval.
struct MetricSummary {
  double mean = 0.0;
  std::optional<double> ci_half_width;  // absent for fewer than two values
  std::size_t n = 0;
};

double student_t_quantile(double p, double dof);
MetricSummary summarize(std::span<const double> values);

struct TtiRecord {
  std::size_t repeat = 0;
  std::uint64_t tti = 0;
  bool reclustered = false;
  double coverage = 0.0;  // from the most recent clustering
  std::vector<std::uint64_t> arrivals;  // per UE
  std::uint64_t served_bits = 0;
  std::uint64_t queued_packets = 0;
};

struct RepeatMetrics {
  std::size_t repeat = 0;
  std::uint64_t seed = 0;
  double sum_rate_mbps = 0.0;
  // Mean over served packets plus packets still queued at the end, the
  // latter at their age. Absent when nothing arrived.
  std::optional<double> mean_delay_ms;
  double coverage = 0.0;  // mean over clustering events
  std::uint64_t packets_arrived = 0;
  std::uint64_t packets_served = 0;
  std::uint64_t bits_served = 0;
};

struct RunMetrics {
  ScenarioKind kind = ScenarioKind::UkMedoidsError;
  std::vector<RepeatMetrics> repeats;
  MetricSummary sum_rate;
  std::optional<MetricSummary> delay;
  MetricSummary coverage;
  std::vector<std::vector<TtiRecord>> traces;  // per repeat, when recorded
};

/// One repeat; the seed is base_seed + repeat.
RepeatMetrics run_repeat(const ScenarioConfig& cfg, std::size_t repeat, std::vector<TtiRecord>* trace = nullptr);

/// All repeats (in parallel) and their aggregate.
RunMetrics run_scenario(const ScenarioConfig& cfg);

RunMetrics aggregate(ScenarioKind kind, std::vector<RepeatMetrics> repeats);

enum class SweepAxis { Load, Error, Beams, BeamWidth };

std::string to_string(SweepAxis a);
SweepAxis parse_axis(const std::string& s);
ScenarioConfig apply_axis(ScenarioConfig cfg, SweepAxis axis, double value);

struct SweepPoint {
  double value = 0.0;
  RunMetrics metrics;
};

struct SweepResult {
  ScenarioKind kind = ScenarioKind::UkMedoidsError;
  SweepAxis axis = SweepAxis::Load;
  std::vector<SweepPoint> points;
};

SweepResult sweep(const ScenarioConfig& cfg, SweepAxis axis, std::span<const double> values);

struct PairwiseComparison {
  double value = 0.0;
  std::string metric;  // sum_rate, coverage, delay
  ScenarioKind better = ScenarioKind::KMeansExact;
  ScenarioKind worse = ScenarioKind::KMeansError;
  // Paired per-repeat difference, signed so the expected direction is >= 0.
  MetricSummary difference;
  bool satisfied = false;    // difference.mean >= 0
  bool significant = false;  // lower 95% bound > 0
};

struct OrderingReport {
  SweepAxis axis = SweepAxis::Load;
  std::vector<PairwiseComparison> rows;
  bool all_satisfied = true;
};

/// Checks exact >= UK-medoids >= UK-means >= K-means on sum rate and
/// coverage, and the reverse on delay, for every adjacent pair present plus
/// exact vs K-means. Results must share axis, values and repeat counts.
OrderingReport compare_scenarios(std::span<const SweepResult> results);

// Output writers. Byte-identical for identical inputs.
void write_tti_jsonl(std::ostream& out, const RunMetrics& m);
/// scenario,axis,value,row,sum_rate_mbps,mean_delay_ms,coverage where row is
/// a repeat index, "mean" or "ci95".
void write_summary_header(std::ostream& out);
void write_summary_rows(std::ostream& out, const RunMetrics& m, const std::string& axis, const std::string& value);
void write_report_csv(std::ostream& out, const OrderingReport& r);

std::vector<SweepResult> read_summary_csv(std::istream& in);

}  // namespace beamsense
