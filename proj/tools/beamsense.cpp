#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "beamsense/clustering.hpp"
#include "beamsense/harness.hpp"
#include "beamsense/localization.hpp"
#include "beamsense/text_io.hpp"
#include "beamsense/vision.hpp"

namespace fs = std::filesystem;
using namespace beamsense;

namespace {

// Flags shared by simulate and sweep; unset flags leave the config alone.
struct Overrides {
  std::string config;
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> repeats, ttis, beams, rbgs, period;
  std::optional<double> load, error, radius, width;
  std::string network;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", config, "JSON config file")->check(CLI::ExistingFile);
    app->add_option("--seed", seed, "base seed");
    app->add_option("--repeats", repeats, "independent repeats");
    app->add_option("--ttis", ttis, "TTIs per repeat");
    app->add_option("--beams", beams, "clusters / beams");
    app->add_option("--rbgs", rbgs, "RBGs per beam");
    app->add_option("--recluster", period, "recluster period in TTIs");
    app->add_option("--load", load, "traffic per UE, Mbps");
    app->add_option("--error", error, "localization RMS error, m");
    app->add_option("--radius", radius, "uncertainty radius for UK methods, m");
    app->add_option("--beam-width", width, "beam width, degrees");
    app->add_option("--qnet", network, "Q-network: lstm or feedforward");
  }

  ScenarioConfig resolve() const {
    ScenarioConfig c = config.empty() ? ScenarioConfig{} : load_config(config);
    if (!scenario.empty()) c.kind = parse_scenario(scenario);
    if (seed) c.base_seed = *seed;
    if (repeats) c.repeats = *repeats;
    if (ttis) c.ttis = *ttis;
    if (beams) c.n_clusters = *beams;
    if (rbgs) c.rbgs = *rbgs;
    if (period) c.recluster_period = *period;
    if (load) c.load_mbps = *load;
    if (error) c.error_rms_m = *error;
    if (radius) c.uncertainty_radius_m = *radius;
    if (width) c.beam_width_deg = *width;
    if (!network.empty()) c.dqn.network = network;
    c.validate();
    return c;
  }
};

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

void write_config(const fs::path& dir, const ScenarioConfig& cfg) {
  auto out = open_out(dir / "config.json");
  out << to_json(cfg).dump(2) << '\n';
}

std::string short_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

void print_summary(const RunMetrics& m) {
  auto ci = [](const std::optional<double>& h) { return h ? " +/- " + short_double(*h) : std::string(); };
  std::cout << to_string(m.kind) << ": sum rate " << short_double(m.sum_rate.mean) << ci(m.sum_rate.ci_half_width)
            << " Mbps, delay "
            << (m.delay ? short_double(m.delay->mean) + ci(m.delay->ci_half_width) + " ms" : std::string("n/a"))
            << ", coverage " << short_double(m.coverage.mean) << ci(m.coverage.ci_half_width) << '\n';
}

std::vector<UncertainPoint> read_points(std::istream& in) {
  std::vector<UncertainPoint> pts;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto f = split_csv_line(line);
    if (lineno == 1 && !f.empty() && f[0] == "x") continue;
    if (f.size() < 2 || f.size() > 3) throw std::runtime_error("points line " + std::to_string(lineno) + ": want x,y[,radius]");
    UncertainPoint p{{parse_double(f[0]), parse_double(f[1])}, f.size() == 3 ? parse_double(f[2]) : 0.0};
    p.validate();
    pts.push_back(p);
  }
  return pts;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"beamsense: clustering-driven mmWave beam management simulator"};
  app.require_subcommand(1);

  // simulate
  Overrides sim_o;
  std::string sim_out;
  bool sim_no_trace = false;
  auto* sim = app.add_subcommand("simulate", "run one scenario");
  sim_o.attach(sim);
  sim->add_option("-s,--scenario", sim_o.scenario, "k-error | uk-error | ukm-error | k-exact");
  sim->add_option("-o,--out", sim_out, "run directory")->required();
  sim->add_flag("--no-trace", sim_no_trace, "skip the per-TTI JSONL");

  // sweep
  Overrides sw_o;
  std::string sw_out, sw_axis = "load";
  std::vector<double> sw_values;
  std::vector<std::string> sw_scenarios;
  auto* sw = app.add_subcommand("sweep", "run scenarios over one parameter axis");
  sw_o.attach(sw);
  sw->add_option("-a,--axis", sw_axis, "load | error | beams | beam_width");
  sw->add_option("-v,--values", sw_values, "axis values (default: loads_mbps from the config for load)");
  sw->add_option("--scenarios", sw_scenarios, "subset of scenarios (default: all four)");
  sw->add_option("-o,--out", sw_out, "run directory")->required();

  // cluster
  std::string cl_points, cl_method = "ukm";
  std::size_t cl_n = 3;
  auto* cl = app.add_subcommand("cluster", "cluster a points file (x,y[,radius] CSV)");
  cl->add_option("points", cl_points, "points CSV")->required()->check(CLI::ExistingFile);
  cl->add_option("-m,--method", cl_method, "ukm | uk | k | kmedoids");
  cl->add_option("-n,--clusters", cl_n, "number of clusters");

  // features
  std::vector<std::string> ft_images;
  std::size_t ft_w = 0, ft_h = 0;
  auto* ft = app.add_subcommand("features", "count land-cover pixels in images (PPM, or raw RGB with --width/--height)");
  ft->add_option("images", ft_images, "image files")->required()->check(CLI::ExistingFile);
  ft->add_option("--width", ft_w, "raw image width");
  ft->add_option("--height", ft_h, "raw image height");

  // localize
  auto* loc = app.add_subcommand("localize", "train or evaluate the position regressor");
  loc->require_subcommand(1);
  std::string ls_out;
  std::uint64_t ls_seed = 1;
  TraceConfig ls_cfg;
  auto* ls = loc->add_subcommand("synth", "generate synthetic measurement traces");
  ls->add_option("-o,--out", ls_out, "output CSV")->required();
  ls->add_option("--seed", ls_seed, "trace seed");
  ls->add_option("--grid-step", ls_cfg.grid_step_m, "grid spacing, m");
  ls->add_option("--noise", ls_cfg.radio_noise_db, "radio measurement noise, dB");

  std::string lt_data, lt_model, lt_opt = "adam";
  int lt_features = 7;
  TrainConfig lt_cfg;
  double lt_split = 0.8;
  auto* lt = loc->add_subcommand("train", "train one model per region");
  lt->add_option("data", lt_data, "traces CSV")->required()->check(CLI::ExistingFile);
  lt->add_option("-o,--model", lt_model, "output model file")->required();
  lt->add_option("--features", lt_features, "4 (radio) or 7 (radio + pixels)")->check(CLI::IsMember({4, 7}));
  lt->add_option("--epochs", lt_cfg.epochs);
  lt->add_option("--batch", lt_cfg.batch_size);
  lt->add_option("--lr", lt_cfg.learning_rate);
  lt->add_option("--optimizer", lt_opt, "sgd | adam")->check(CLI::IsMember({"sgd", "adam"}));
  lt->add_option("--seed", lt_cfg.seed);
  lt->add_option("--train-fraction", lt_split, "held-out split; 1 trains on everything");

  std::string le_data, le_model;
  auto* le = loc->add_subcommand("eval", "report RMSE and MAE of a model on traces");
  le->add_option("data", le_data, "traces CSV")->required()->check(CLI::ExistingFile);
  le->add_option("-m,--model", le_model, "model file")->required()->check(CLI::ExistingFile);

  // report
  std::vector<std::string> rp_inputs;
  bool rp_strict = false;
  auto* rp = app.add_subcommand("report", "check the expected scenario ordering in summary CSVs");
  rp->add_option("inputs", rp_inputs, "summary.csv files")->required()->check(CLI::ExistingFile);
  rp->add_flag("--strict", rp_strict, "exit 1 when the ordering is violated");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) {
      ScenarioConfig cfg = sim_o.resolve();
      cfg.record_trace = !sim_no_trace;
      fs::create_directories(sim_out);
      write_config(sim_out, cfg);
      const RunMetrics m = run_scenario(cfg);
      auto summary = open_out(fs::path(sim_out) / "summary.csv");
      write_summary_header(summary);
      write_summary_rows(summary, m, "load", format_double(cfg.load_mbps));
      if (cfg.record_trace) {
        auto trace = open_out(fs::path(sim_out) / "tti.jsonl");
        write_tti_jsonl(trace, m);
      }
      print_summary(m);
    } else if (*sw) {
      ScenarioConfig cfg = sw_o.resolve();
      const SweepAxis axis = parse_axis(sw_axis);
      if (sw_values.empty()) {
        if (axis != SweepAxis::Load) throw std::invalid_argument("sweep: --values is required for this axis");
        sw_values = cfg.loads_mbps;
      }
      std::vector<ScenarioKind> kinds;
      for (const auto& s : sw_scenarios) kinds.push_back(parse_scenario(s));
      if (kinds.empty()) kinds.assign(std::begin(kAllScenarios), std::end(kAllScenarios));
      fs::create_directories(sw_out);
      write_config(sw_out, cfg);
      std::vector<SweepResult> results;
      auto summary = open_out(fs::path(sw_out) / "summary.csv");
      write_summary_header(summary);
      for (ScenarioKind k : kinds) {
        ScenarioConfig c = cfg;
        c.kind = k;
        results.push_back(sweep(c, axis, sw_values));
        for (const auto& p : results.back().points) {
          write_summary_rows(summary, p.metrics, to_string(axis), format_double(p.value));
          std::cout << to_string(axis) << '=' << format_double(p.value) << ' ';
          print_summary(p.metrics);
        }
      }
      const OrderingReport rep = compare_scenarios(results);
      auto report = open_out(fs::path(sw_out) / "report.csv");
      write_report_csv(report, rep);
      std::cout << "ordering " << (rep.all_satisfied ? "holds" : "violated") << '\n';
    } else if (*cl) {
      std::ifstream in(cl_points);
      const auto pts = read_points(in);
      std::vector<Vec2> centers;
      for (const auto& p : pts) centers.push_back(p.center);
      ClusteringResult r;
      if (cl_method == "ukm") r = uk_medoids(pts, cl_n);
      else if (cl_method == "uk") r = uk_means(pts, cl_n);
      else if (cl_method == "k") r = k_means(centers, cl_n);
      else if (cl_method == "kmedoids") r = k_medoids(centers, cl_n);
      else throw std::invalid_argument("unknown method '" + cl_method + "'");
      std::cout << "x,y,radius,cluster\n";
      for (std::size_t i = 0; i < pts.size(); ++i) {
        std::cout << format_double(pts[i].center.x) << ',' << format_double(pts[i].center.y) << ','
                  << format_double(pts[i].radius) << ',' << r.assignments[i] << '\n';
      }
      std::cerr << r.n_clusters() << " clusters, " << r.iterations << " iterations"
                << (r.converged ? "" : " (not converged)") << '\n';
    } else if (*ft) {
      std::cout << "image,grass,building,road,other\n";
      for (const auto& path : ft_images) {
        const RgbImage img = (ft_w || ft_h) ? read_raw_rgb(path, ft_w, ft_h) : read_ppm(fs::path(path));
        const PixelCounts c = count_features(img);
        std::cout << path << ',' << c.grass << ',' << c.building << ',' << c.road << ',' << c.other << '\n';
      }
    } else if (*ls) {
      const auto samples = generate_traces(ls_cfg, ls_seed);
      auto out = open_out(ls_out);
      write_samples_csv(out, samples);
      std::cout << samples.size() << " samples\n";
    } else if (*lt) {
      std::ifstream in(lt_data);
      auto samples = read_samples_csv(in);
      lt_cfg.features = lt_features == 4 ? FeatureSet::RadioOnly : FeatureSet::RadioAndPixels;
      lt_cfg.optimizer = lt_opt == "adam" ? Optimizer::Adam : Optimizer::Sgd;
      std::vector<LocalizationSample> train_set = samples, test_set;
      if (lt_split < 1.0) std::tie(train_set, test_set) = split_samples(samples, lt_split, lt_cfg.seed);
      const RegionalLocalizer model = train_regional(train_set, lt_cfg);
      save_localizer(lt_model, model);
      const auto tr = evaluate(model, train_set);
      std::cout << "train rmse " << format_double(tr.rmse) << " mae " << format_double(tr.mae) << '\n';
      if (!test_set.empty()) {
        const auto te = evaluate(model, test_set);
        std::cout << "test rmse " << format_double(te.rmse) << " mae " << format_double(te.mae) << '\n';
      }
    } else if (*le) {
      std::ifstream in(le_data);
      const auto samples = read_samples_csv(in);
      const auto e = evaluate(load_localizer(le_model), samples);
      std::cout << "rmse " << format_double(e.rmse) << " mae " << format_double(e.mae) << '\n';
    } else if (*rp) {
      std::vector<SweepResult> results;
      for (const auto& path : rp_inputs) {
        std::ifstream in(path);
        for (auto& r : read_summary_csv(in)) results.push_back(std::move(r));
      }
      const OrderingReport rep = compare_scenarios(results);
      write_report_csv(std::cout, rep);
      std::cerr << "ordering " << (rep.all_satisfied ? "holds" : "violated") << '\n';
      if (rp_strict && !rep.all_satisfied) return 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
