#include "beamsense/harness.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <exception>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <set>
#include <stdexcept>

#include "beamsense/text_io.hpp"

namespace beamsense {

using nlohmann::json;

namespace {

// Independent random streams within one repeat.
enum Stream : std::uint64_t {
  kGeometryStream = 1,
  kTrafficStream = 2,
  kLocationNoiseStream = 3,
  kShadowingStream = 4,
  kAgentStreamBase = 100,
};

constexpr double deg_to_rad(double d) { return d * std::numbers::pi / 180.0; }

}  // namespace

std::string to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::KMeansError: return "k-error";
    case ScenarioKind::UkMeansError: return "uk-error";
    case ScenarioKind::UkMedoidsError: return "ukm-error";
    case ScenarioKind::KMeansExact: return "k-exact";
  }
  return "?";
}

ScenarioKind parse_scenario(const std::string& s) {
  for (ScenarioKind k : kAllScenarios)
    if (to_string(k) == s) return k;
  throw std::invalid_argument("unknown scenario '" + s + "' (expected k-error, uk-error, ukm-error or k-exact)");
}

void PopulationConfig::validate() const {
  if (n_groups == 0 || ues_per_group == 0) throw std::invalid_argument("population: groups and UEs must be positive");
  if (urllc_per_group > ues_per_group) throw std::invalid_argument("population: more URLLC UEs than group size");
  if (!(range_min_m > 0.0 && range_max_m >= range_min_m)) throw std::invalid_argument("population: bad range");
  if (!(group_spread_m >= 0.0 && group_spread_m < range_min_m))
    throw std::invalid_argument("population: spread must be in [0, range_min)");
  if (!(min_separation_deg >= 0.0 && min_separation_deg * static_cast<double>(n_groups) <= 360.0))
    throw std::invalid_argument("population: angular separation cannot be met");
  if (!(speed_min_mps >= 0.0 && speed_max_mps >= speed_min_mps)) throw std::invalid_argument("population: bad speeds");
}

double ScenarioConfig::uncertainty_radius() const {
  return uncertainty_radius_m ? *uncertainty_radius_m : uncertainty_factor * error_rms_m;
}

double ScenarioConfig::beam_width_rad() const {
  return tile_beams ? 2.0 * std::numbers::pi / static_cast<double>(n_clusters) : deg_to_rad(beam_width_deg);
}

void ScenarioConfig::validate() const {
  population.validate();
  dqn.validate();
  clustering.quadrature.validate();
  if (repeats < 1) throw std::invalid_argument("config: repeats must be >= 1");
  if (recluster_period < 1) throw std::invalid_argument("config: recluster period must be >= 1");
  if (ttis < 1) throw std::invalid_argument("config: ttis must be >= 1");
  if (rbgs < 1) throw std::invalid_argument("config: rbgs must be >= 1");
  if (n_clusters < 1 || n_clusters > population.n_ues())
    throw std::invalid_argument("config: n_clusters must be in [1, number of UEs]");
  if (!tile_beams && !(beam_width_deg > 0.0 && beam_width_deg <= 360.0))
    throw std::invalid_argument("config: beam width must be in (0, 360] degrees");
  if (!(error_rms_m >= 0.0)) throw std::invalid_argument("config: error RMS must be >= 0");
  if (!(uncertainty_radius() >= 0.0) || !std::isfinite(uncertainty_radius()))
    throw std::invalid_argument("config: uncertainty radius must be >= 0");
  if (!(load_mbps >= 0.0)) throw std::invalid_argument("config: load must be >= 0");
  if (population.n_ues() > dqn.max_ues)
    throw std::invalid_argument("config: dqn.max_ues is smaller than the UE population");
  if (clustering.max_iters < 1) throw std::invalid_argument("config: clustering max_iters must be >= 1");
}

// ---------------------------------------------------------------------------
// Config file

namespace {

class ObjectReader {
 public:
  ObjectReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j.is_object()) throw std::invalid_argument("config: '" + where_ + "' must be an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    used_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw std::invalid_argument("config: bad value for '" + where_ + key + "'");
    }
  }

  const json* sub(const char* key) {
    used_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) throw std::invalid_argument("config: unknown key '" + where_ + it.key() + "'");
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> used_;
};

}  // namespace

json to_json(const ScenarioConfig& c) {
  const auto& p = c.population;
  const auto& ch = c.channel;
  const auto& d = c.dqn;
  json j = {
      {"scenario", to_string(c.kind)},
      {"n_clusters", c.n_clusters},
      {"beam_width_deg", c.beam_width_deg},
      {"tile_beams", c.tile_beams},
      {"error_rms_m", c.error_rms_m},
      {"uncertainty_radius_m", c.uncertainty_radius_m ? json(*c.uncertainty_radius_m) : json(nullptr)},
      {"uncertainty_factor", c.uncertainty_factor},
      {"load_mbps", c.load_mbps},
      {"loads_mbps", c.loads_mbps},
      {"ttis", c.ttis},
      {"recluster_period", c.recluster_period},
      {"repeats", c.repeats},
      {"base_seed", c.base_seed},
      {"rbgs", c.rbgs},
      {"record_trace", c.record_trace},
      {"population",
       {{"n_groups", p.n_groups},
        {"ues_per_group", p.ues_per_group},
        {"urllc_per_group", p.urllc_per_group},
        {"range_min_m", p.range_min_m},
        {"range_max_m", p.range_max_m},
        {"group_spread_m", p.group_spread_m},
        {"min_separation_deg", p.min_separation_deg},
        {"speed_min_mps", p.speed_min_mps},
        {"speed_max_mps", p.speed_max_mps},
        {"waypoints", p.waypoints}}},
      {"channel",
       {{"tx_power_dbm", ch.tx_power_dbm},
        {"pl0_db", ch.pl0_db},
        {"d0_m", ch.d0_m},
        {"exponent", ch.exponent},
        {"beam_gain_db", ch.beam_gain_db},
        {"shadowing_sigma_db", ch.shadowing_sigma_db},
        {"noise_dbm", ch.noise_dbm},
        {"out_of_beam_sinr_db", ch.out_of_beam_sinr_db}}},
      {"dqn",
       {{"network", d.network},
        {"max_ues", d.max_ues},
        {"hidden", d.hidden},
        {"replay_capacity", d.replay_capacity},
        {"batch", d.batch},
        {"train_interval", d.train_interval},
        {"copy_interval", d.copy_interval},
        {"gamma", d.gamma},
        {"epsilon", d.epsilon},
        {"learning_rate", d.learning_rate},
        {"s_tar_db", d.s_tar_db},
        {"tau_tar_ms", d.tau_tar_ms},
        {"age_scale_ms", d.age_scale_ms},
        {"backlog_scale_bits", d.backlog_scale_bits}}},
      {"clustering",
       {{"max_iters", c.clustering.max_iters},
        {"radial_nodes", c.clustering.quadrature.radial_nodes},
        {"angular_nodes", c.clustering.quadrature.angular_nodes}}},
  };
  return j;
}

ScenarioConfig scenario_from_json(const json& j, ScenarioConfig c) {
  ObjectReader r(j, "");
  if (const json* s = r.sub("scenario")) {
    if (!s->is_string()) throw std::invalid_argument("config: 'scenario' must be a string");
    c.kind = parse_scenario(s->get<std::string>());
  }
  r.get("n_clusters", c.n_clusters);
  r.get("beam_width_deg", c.beam_width_deg);
  r.get("tile_beams", c.tile_beams);
  r.get("error_rms_m", c.error_rms_m);
  if (const json* u = r.sub("uncertainty_radius_m")) {
    if (u->is_null()) {
      c.uncertainty_radius_m.reset();
    } else if (u->is_number()) {
      c.uncertainty_radius_m = u->get<double>();
    } else {
      throw std::invalid_argument("config: 'uncertainty_radius_m' must be a number or null");
    }
  }
  r.get("uncertainty_factor", c.uncertainty_factor);
  r.get("load_mbps", c.load_mbps);
  r.get("loads_mbps", c.loads_mbps);
  r.get("ttis", c.ttis);
  r.get("recluster_period", c.recluster_period);
  r.get("repeats", c.repeats);
  r.get("base_seed", c.base_seed);
  r.get("rbgs", c.rbgs);
  r.get("record_trace", c.record_trace);
  if (const json* s = r.sub("population")) {
    ObjectReader p(*s, "population.");
    auto& q = c.population;
    p.get("n_groups", q.n_groups);
    p.get("ues_per_group", q.ues_per_group);
    p.get("urllc_per_group", q.urllc_per_group);
    p.get("range_min_m", q.range_min_m);
    p.get("range_max_m", q.range_max_m);
    p.get("group_spread_m", q.group_spread_m);
    p.get("min_separation_deg", q.min_separation_deg);
    p.get("speed_min_mps", q.speed_min_mps);
    p.get("speed_max_mps", q.speed_max_mps);
    p.get("waypoints", q.waypoints);
    p.finish();
  }
  if (const json* s = r.sub("channel")) {
    ObjectReader p(*s, "channel.");
    auto& q = c.channel;
    p.get("tx_power_dbm", q.tx_power_dbm);
    p.get("pl0_db", q.pl0_db);
    p.get("d0_m", q.d0_m);
    p.get("exponent", q.exponent);
    p.get("beam_gain_db", q.beam_gain_db);
    p.get("shadowing_sigma_db", q.shadowing_sigma_db);
    p.get("noise_dbm", q.noise_dbm);
    p.get("out_of_beam_sinr_db", q.out_of_beam_sinr_db);
    p.finish();
  }
  if (const json* s = r.sub("dqn")) {
    ObjectReader p(*s, "dqn.");
    auto& q = c.dqn;
    p.get("network", q.network);
    p.get("max_ues", q.max_ues);
    p.get("hidden", q.hidden);
    p.get("replay_capacity", q.replay_capacity);
    p.get("batch", q.batch);
    p.get("train_interval", q.train_interval);
    p.get("copy_interval", q.copy_interval);
    p.get("gamma", q.gamma);
    p.get("epsilon", q.epsilon);
    p.get("learning_rate", q.learning_rate);
    p.get("s_tar_db", q.s_tar_db);
    p.get("tau_tar_ms", q.tau_tar_ms);
    p.get("age_scale_ms", q.age_scale_ms);
    p.get("backlog_scale_bits", q.backlog_scale_bits);
    p.finish();
  }
  if (const json* s = r.sub("clustering")) {
    ObjectReader p(*s, "clustering.");
    p.get("max_iters", c.clustering.max_iters);
    p.get("radial_nodes", c.clustering.quadrature.radial_nodes);
    p.get("angular_nodes", c.clustering.quadrature.angular_nodes);
    p.finish();
  }
  r.finish();
  return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw std::invalid_argument("config " + path.string() + ": " + e.what());
  }
  return scenario_from_json(j);
}

// ---------------------------------------------------------------------------
// Statistics

double student_t_quantile(double p, double dof) {
  if (!(dof > 0.0) || !(p > 0.0 && p < 1.0)) throw std::invalid_argument("student_t_quantile: bad arguments");
  return boost::math::quantile(boost::math::students_t_distribution<double>(dof), p);
}

MetricSummary summarize(std::span<const double> values) {
  MetricSummary s;
  s.n = values.size();
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  if (s.n >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    const double sd = std::sqrt(ss / static_cast<double>(s.n - 1));
    s.ci_half_width = student_t_quantile(0.975, static_cast<double>(s.n - 1)) * sd / std::sqrt(static_cast<double>(s.n));
  }
  return s;
}

// ---------------------------------------------------------------------------
// Simulation

namespace {

std::vector<UeState> make_population(const PopulationConfig& pc, Rng& rng) {
  const double sep = deg_to_rad(pc.min_separation_deg);
  std::vector<double> az;
  bool placed = false;
  for (int attempt = 0; attempt < 10000 && !placed; ++attempt) {
    az.clear();
    for (std::size_t g = 0; g < pc.n_groups; ++g) az.push_back(uniform(rng, -std::numbers::pi, std::numbers::pi));
    placed = true;
    for (std::size_t a = 0; a < az.size() && placed; ++a)
      for (std::size_t b = a + 1; b < az.size() && placed; ++b)
        if (std::abs(wrap_angle(az[a] - az[b])) < sep) placed = false;
  }
  if (!placed) {
    // Dense packing: even spacing with a random rotation.
    const double rot = uniform(rng, -std::numbers::pi, std::numbers::pi);
    for (std::size_t g = 0; g < pc.n_groups; ++g)
      az[g] = wrap_angle(rot + 2.0 * std::numbers::pi * static_cast<double>(g) / static_cast<double>(pc.n_groups));
  }

  auto in_disk = [&](Vec2 c) {
    const double r = pc.group_spread_m * std::sqrt(uniform01(rng));
    const double t = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    return c + Vec2{r * std::cos(t), r * std::sin(t)};
  };

  std::vector<UeState> ues;
  for (std::size_t g = 0; g < pc.n_groups; ++g) {
    const double range = uniform(rng, pc.range_min_m, pc.range_max_m);
    const Vec2 center{range * std::cos(az[g]), range * std::sin(az[g])};
    for (std::size_t k = 0; k < pc.ues_per_group; ++k) {
      UeState ue;
      ue.id = ues.size();
      ue.traffic = k < pc.urllc_per_group ? TrafficClass::Urllc : TrafficClass::Embb;
      ue.trajectory.speed_mps = uniform(rng, pc.speed_min_mps, pc.speed_max_mps);
      for (std::size_t w = 0; w < std::max<std::size_t>(pc.waypoints, 1); ++w)
        ue.trajectory.waypoints.push_back(in_disk(center));
      ue.true_position = ue.trajectory.waypoints.front();
      ues.push_back(std::move(ue));
    }
  }
  return ues;
}

ClusteringResult cluster(const ScenarioConfig& cfg, std::span<const UeState> ues) {
  std::vector<Vec2> centers;
  std::vector<UncertainPoint> points;
  for (const auto& ue : ues) {
    centers.push_back(ue.observed.center);
    points.push_back(ue.observed);
  }
  switch (cfg.kind) {
    case ScenarioKind::KMeansError: return k_means(centers, cfg.n_clusters, cfg.clustering);
    case ScenarioKind::UkMeansError: return uk_means(points, cfg.n_clusters, cfg.clustering);
    case ScenarioKind::UkMedoidsError: return uk_medoids(points, cfg.n_clusters, cfg.clustering);
    case ScenarioKind::KMeansExact: {
      std::vector<Vec2> truth;
      for (const auto& ue : ues) truth.push_back(ue.true_position);
      return k_means(truth, cfg.n_clusters, cfg.clustering);
    }
  }
  throw std::logic_error("cluster: unknown scenario");
}

}  // namespace

RepeatMetrics run_repeat(const ScenarioConfig& cfg, std::size_t repeat, std::vector<TtiRecord>* trace) {
  cfg.validate();
  const std::uint64_t seed = cfg.base_seed + repeat;
  Rng geo_rng = make_rng(seed, kGeometryStream);
  Rng traffic_rng = make_rng(seed, kTrafficStream);
  Rng noise_rng = make_rng(seed, kLocationNoiseStream);
  Rng shadow_rng = make_rng(seed, kShadowingStream);

  std::vector<UeState> ues = make_population(cfg.population, geo_rng);
  const Vec2 gnb{0.0, 0.0};
  const double sigma_axis = cfg.error_rms_m / std::numbers::sqrt2;
  const double radius = cfg.uncertainty_radius();
  const double width = cfg.beam_width_rad();
  const CqiTable table;

  std::vector<DqnAgent> agents;
  for (std::size_t j = 0; j < cfg.n_clusters; ++j) agents.emplace_back(cfg.dqn, derive_seed(seed, kAgentStreamBase + j));

  std::vector<Beam> beams;
  std::vector<std::size_t> attach;
  std::vector<Vec2> truth(ues.size());
  double coverage_sum = 0.0, coverage_now = 0.0;
  std::size_t coverage_events = 0;
  long double delay_sum_tti = 0.0;
  std::uint64_t delay_count = 0;
  std::vector<std::vector<std::size_t>> granted(ues.size());

  SimClock clock;
  for (std::size_t t = 0; t < cfg.ttis; ++t, clock.advance()) {
    for (std::size_t u = 0; u < ues.size(); ++u) {
      ues[u].true_position = ues[u].trajectory.position_at(clock.now_seconds());
      truth[u] = ues[u].true_position;
    }

    const bool recluster = t % cfg.recluster_period == 0;
    if (recluster) {
      for (auto& ue : ues) {
        const double ex = standard_normal(noise_rng), ey = standard_normal(noise_rng);
        ue.observed = {ue.true_position + sigma_axis * Vec2{ex, ey}, radius};
      }
      ClusteringResult cr;
      try {
        cr = cluster(cfg, ues);
      } catch (const std::exception& e) {
        throw std::runtime_error(to_string(cfg.kind) + " repeat " + std::to_string(repeat) + " tti " +
                                 std::to_string(t) + ": " + e.what());
      }
      beams = form_beams(cr, gnb, width);
      attach = cr.assignments;
      coverage_now = coverage_rate(beams, truth, gnb);
      coverage_sum += coverage_now;
      ++coverage_events;
    }

    const std::vector<std::uint64_t> arrivals = step_traffic(ues, cfg.load_mbps, clock, traffic_rng);

    for (std::size_t u = 0; u < ues.size(); ++u) {
      auto& ue = ues[u];
      ue.sinr_db.resize(cfg.rbgs);
      ue.cqi.resize(cfg.rbgs);
      for (std::size_t r = 0; r < cfg.rbgs; ++r) {
        ue.sinr_db[r] = cfg.channel.sample_sinr_db(ue.true_position, beams[attach[u]], shadow_rng);
        ue.cqi[r] = table.cqi(ue.sinr_db[r]);
      }
      granted[u].clear();
    }

    for (std::size_t j = 0; j < beams.size(); ++j) {
      std::vector<UeState*> members;
      for (std::size_t u = 0; u < ues.size(); ++u)
        if (attach[u] == j) members.push_back(&ues[u]);
      const auto map = schedule_tti(agents[j], members, cfg.rbgs, table, clock);
      for (std::size_t r = 0; r < map.size(); ++r) granted[map[r]].push_back(r);
    }

    std::uint64_t served_bits = 0, queued = 0;
    for (std::size_t u = 0; u < ues.size(); ++u) {
      const TransmitResult tr = transmit(ues[u], granted[u], table, clock);
      served_bits += tr.bits;
      for (std::uint64_t d : tr.delays_tti) delay_sum_tti += d;
      delay_count += tr.delays_tti.size();
      queued += ues[u].queue.size();
    }
    if (trace) trace->push_back({repeat, clock.tti, recluster, coverage_now, arrivals, served_bits, queued});
  }

  RepeatMetrics m;
  m.repeat = repeat;
  m.seed = seed;
  for (const auto& ue : ues) {
    m.packets_arrived += ue.packets_arrived;
    m.packets_served += ue.packets_served;
    m.bits_served += ue.bits_served;
    for (const auto& p : ue.queue) {
      delay_sum_tti += clock.tti - p.arrival_tti;
      ++delay_count;
    }
  }
  m.sum_rate_mbps = static_cast<double>(m.bits_served) / (static_cast<double>(cfg.ttis) * kTtiSeconds) / 1e6;
  if (delay_count > 0) m.mean_delay_ms = static_cast<double>(delay_sum_tti / delay_count) * kTtiMs;
  m.coverage = coverage_sum / static_cast<double>(coverage_events);
  return m;
}

RunMetrics aggregate(ScenarioKind kind, std::vector<RepeatMetrics> repeats) {
  RunMetrics out;
  out.kind = kind;
  std::vector<double> rate, delay, cov;
  for (const auto& r : repeats) {
    rate.push_back(r.sum_rate_mbps);
    cov.push_back(r.coverage);
    if (r.mean_delay_ms) delay.push_back(*r.mean_delay_ms);
  }
  out.sum_rate = summarize(rate);
  out.coverage = summarize(cov);
  if (!delay.empty()) out.delay = summarize(delay);
  out.repeats = std::move(repeats);
  return out;
}

RunMetrics run_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  const auto n = static_cast<std::ptrdiff_t>(cfg.repeats);
  std::vector<RepeatMetrics> reps(cfg.repeats);
  std::vector<std::vector<TtiRecord>> traces(cfg.record_trace ? cfg.repeats : 0);
  std::vector<std::exception_ptr> errors(cfg.repeats);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t r = 0; r < n; ++r) {
    const auto k = static_cast<std::size_t>(r);
    try {
      reps[k] = run_repeat(cfg, k, cfg.record_trace ? &traces[k] : nullptr);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  RunMetrics m = aggregate(cfg.kind, std::move(reps));
  m.traces = std::move(traces);
  return m;
}

// ---------------------------------------------------------------------------
// Sweeps and comparison

std::string to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::Load: return "load";
    case SweepAxis::Error: return "error";
    case SweepAxis::Beams: return "beams";
    case SweepAxis::BeamWidth: return "beam_width";
  }
  return "?";
}

SweepAxis parse_axis(const std::string& s) {
  for (SweepAxis a : {SweepAxis::Load, SweepAxis::Error, SweepAxis::Beams, SweepAxis::BeamWidth})
    if (to_string(a) == s) return a;
  throw std::invalid_argument("unknown sweep axis '" + s + "' (expected load, error, beams or beam_width)");
}

ScenarioConfig apply_axis(ScenarioConfig cfg, SweepAxis axis, double value) {
  switch (axis) {
    case SweepAxis::Load: cfg.load_mbps = value; break;
    case SweepAxis::Error: cfg.error_rms_m = value; break;
    case SweepAxis::Beams:
      if (!(value >= 1.0) || value != std::floor(value)) throw std::invalid_argument("sweep: beam count must be a positive integer");
      cfg.n_clusters = static_cast<std::size_t>(value);
      break;
    case SweepAxis::BeamWidth: cfg.beam_width_deg = value; break;
  }
  return cfg;
}

SweepResult sweep(const ScenarioConfig& cfg, SweepAxis axis, std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("sweep: no values");
  SweepResult out{cfg.kind, axis, {}};
  for (double v : values) out.points.push_back({v, run_scenario(apply_axis(cfg, axis, v))});
  return out;
}

namespace {

// Position in the expected ranking, best first.
int rank(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::KMeansExact: return 0;
    case ScenarioKind::UkMedoidsError: return 1;
    case ScenarioKind::UkMeansError: return 2;
    case ScenarioKind::KMeansError: return 3;
  }
  return 4;
}

}  // namespace

OrderingReport compare_scenarios(std::span<const SweepResult> results) {
  OrderingReport rep;
  if (results.empty()) return rep;
  rep.axis = results.front().axis;
  std::map<int, const SweepResult*> by_rank;
  for (const auto& r : results) {
    if (r.axis != rep.axis) throw std::invalid_argument("compare_scenarios: mismatched sweep axes");
    if (r.points.size() != results.front().points.size())
      throw std::invalid_argument("compare_scenarios: mismatched sweep values");
    for (std::size_t i = 0; i < r.points.size(); ++i) {
      if (r.points[i].value != results.front().points[i].value)
        throw std::invalid_argument("compare_scenarios: mismatched sweep values");
      if (r.points[i].metrics.repeats.size() != results.front().points[i].metrics.repeats.size())
        throw std::invalid_argument("compare_scenarios: mismatched repeat counts");
    }
    if (!by_rank.emplace(rank(r.kind), &r).second)
      throw std::invalid_argument("compare_scenarios: scenario " + to_string(r.kind) + " given twice");
  }

  std::vector<std::pair<const SweepResult*, const SweepResult*>> pairs;
  for (auto it = by_rank.begin(); std::next(it) != by_rank.end(); ++it) pairs.emplace_back(it->second, std::next(it)->second);
  if (by_rank.size() > 2 && by_rank.count(0) && by_rank.count(3)) pairs.emplace_back(by_rank.at(0), by_rank.at(3));

  for (const auto& [better, worse] : pairs) {
    for (std::size_t i = 0; i < better->points.size(); ++i) {
      const auto& rb = better->points[i].metrics.repeats;
      const auto& rw = worse->points[i].metrics.repeats;
      auto add = [&](const char* metric, auto diff_of) {
        std::vector<double> diffs;
        for (std::size_t k = 0; k < rb.size(); ++k) {
          const std::optional<double> d = diff_of(rb[k], rw[k]);
          if (d) diffs.push_back(*d);
        }
        if (diffs.empty()) return;
        PairwiseComparison c;
        c.value = better->points[i].value;
        c.metric = metric;
        c.better = better->kind;
        c.worse = worse->kind;
        c.difference = summarize(diffs);
        c.satisfied = c.difference.mean >= 0.0;
        c.significant = c.difference.ci_half_width && c.difference.mean - *c.difference.ci_half_width > 0.0;
        rep.all_satisfied = rep.all_satisfied && c.satisfied;
        rep.rows.push_back(c);
      };
      add("sum_rate", [](const RepeatMetrics& b, const RepeatMetrics& w) -> std::optional<double> {
        return b.sum_rate_mbps - w.sum_rate_mbps;
      });
      add("coverage", [](const RepeatMetrics& b, const RepeatMetrics& w) -> std::optional<double> {
        return b.coverage - w.coverage;
      });
      add("delay", [](const RepeatMetrics& b, const RepeatMetrics& w) -> std::optional<double> {
        if (!b.mean_delay_ms || !w.mean_delay_ms) return std::nullopt;
        return *w.mean_delay_ms - *b.mean_delay_ms;
      });
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Output

void write_tti_jsonl(std::ostream& out, const RunMetrics& m) {
  for (const auto& trace : m.traces) {
    for (const auto& r : trace) {
      const json j = {{"scenario", to_string(m.kind)}, {"repeat", r.repeat},
                      {"tti", r.tti},                  {"reclustered", r.reclustered},
                      {"coverage", r.coverage},        {"arrivals", r.arrivals},
                      {"served_bits", r.served_bits},  {"queued_packets", r.queued_packets}};
      out << j.dump() << '\n';
    }
  }
}

void write_summary_header(std::ostream& out) {
  out << "scenario,axis,value,row,sum_rate_mbps,mean_delay_ms,coverage\n";
}

void write_summary_rows(std::ostream& out, const RunMetrics& m, const std::string& axis, const std::string& value) {
  const std::string head = to_string(m.kind) + ',' + axis + ',' + value + ',';
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  for (const auto& r : m.repeats) {
    out << head << r.repeat << ',' << format_double(r.sum_rate_mbps) << ',' << opt(r.mean_delay_ms) << ','
        << format_double(r.coverage) << '\n';
  }
  out << head << "mean," << format_double(m.sum_rate.mean) << ','
      << (m.delay ? format_double(m.delay->mean) : std::string()) << ',' << format_double(m.coverage.mean) << '\n';
  out << head << "ci95," << opt(m.sum_rate.ci_half_width) << ',' << (m.delay ? opt(m.delay->ci_half_width) : "")
      << ',' << opt(m.coverage.ci_half_width) << '\n';
}

void write_report_csv(std::ostream& out, const OrderingReport& r) {
  out << "axis,value,metric,better,worse,mean_difference,ci95,satisfied,significant\n";
  for (const auto& c : r.rows) {
    out << to_string(r.axis) << ',' << format_double(c.value) << ',' << c.metric << ',' << to_string(c.better) << ','
        << to_string(c.worse) << ',' << format_double(c.difference.mean) << ','
        << (c.difference.ci_half_width ? format_double(*c.difference.ci_half_width) : std::string()) << ','
        << (c.satisfied ? "yes" : "no") << ',' << (c.significant ? "yes" : "no") << '\n';
  }
}

std::vector<SweepResult> read_summary_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("summary CSV: empty input");
  if (split_csv_line(line) != std::vector<std::string>{"scenario", "axis", "value", "row", "sum_rate_mbps",
                                                      "mean_delay_ms", "coverage"})
    throw std::runtime_error("summary CSV: unexpected header");
  // scenario -> (axis, value-order, value -> repeats)
  struct Acc {
    std::string axis;
    std::vector<std::string> order;
    std::map<std::string, std::vector<RepeatMetrics>> reps;
  };
  std::map<int, std::pair<ScenarioKind, Acc>> acc;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != 7) throw std::runtime_error("summary CSV line " + std::to_string(lineno) + ": expected 7 fields");
    if (f[3] == "mean" || f[3] == "ci95") continue;
    const ScenarioKind kind = parse_scenario(f[0]);
    auto& [k, a] = acc.try_emplace(rank(kind), kind, Acc{}).first->second;
    if (a.axis.empty()) a.axis = f[1];
    if (a.axis != f[1]) throw std::runtime_error("summary CSV: mixed axes for " + f[0]);
    if (!a.reps.count(f[2])) a.order.push_back(f[2]);
    RepeatMetrics r;
    try {
      r.repeat = std::stoul(f[3]);
      r.sum_rate_mbps = parse_double(f[4]);
      if (!f[5].empty()) r.mean_delay_ms = parse_double(f[5]);
      r.coverage = parse_double(f[6]);
    } catch (const std::exception& e) {
      throw std::runtime_error("summary CSV line " + std::to_string(lineno) + ": " + e.what());
    }
    a.reps[f[2]].push_back(r);
  }
  std::vector<SweepResult> out;
  for (auto& [rk, entry] : acc) {
    auto& [kind, a] = entry;
    SweepResult s;
    s.kind = kind;
    s.axis = a.axis == "none" ? SweepAxis::Load : parse_axis(a.axis);
    for (const auto& v : a.order) {
      s.points.push_back({v.empty() ? 0.0 : parse_double(v), aggregate(kind, std::move(a.reps[v]))});
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace beamsense
