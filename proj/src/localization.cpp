#include "beamsense/localization.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "beamsense/text_io.hpp"

namespace beamsense {

std::size_t feature_count(FeatureSet set) { return set == FeatureSet::RadioOnly ? 4 : 7; }

Eigen::VectorXd select_features(const FeatureVector& f, FeatureSet set) {
  const auto all = f.as_array();
  Eigen::VectorXd x(static_cast<Eigen::Index>(feature_count(set)));
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = all[static_cast<std::size_t>(i)];
  return x;
}

Standardization Standardization::fit(const Eigen::MatrixXd& columns) {
  Standardization s;
  s.mean = columns.rowwise().mean();
  const Eigen::MatrixXd centered = columns.colwise() - s.mean;
  s.scale = (centered.array().square().rowwise().sum() / static_cast<double>(columns.cols())).sqrt().matrix();
  for (Eigen::Index i = 0; i < s.scale.size(); ++i)
    if (!(s.scale[i] > 1e-12)) s.scale[i] = 1.0;
  return s;
}

Eigen::MatrixXd Standardization::apply(const Eigen::MatrixXd& columns) const {
  return ((columns.colwise() - mean).array().colwise() / scale.array()).matrix();
}

Eigen::MatrixXd Standardization::invert(const Eigen::MatrixXd& columns) const {
  return ((columns.array().colwise() * scale.array()).matrix().colwise() + mean);
}

Vec2 LocalizationModel::predict(const FeatureVector& f) const {
  const Eigen::MatrixXd x = input_scaling.apply(select_features(f, features));
  const Eigen::MatrixXd y = target_scaling.invert(net.forward_batch(x));
  return {y(0, 0), y(1, 0)};
}

namespace {

struct Design {
  Eigen::MatrixXd x;
  Eigen::MatrixXd t;
};

Design design_matrix(const std::vector<LocalizationSample>& samples, FeatureSet set) {
  Design d{Eigen::MatrixXd(static_cast<Eigen::Index>(feature_count(set)), static_cast<Eigen::Index>(samples.size())),
           Eigen::MatrixXd(2, static_cast<Eigen::Index>(samples.size()))};
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto c = static_cast<Eigen::Index>(i);
    d.x.col(c) = select_features(samples[i].features, set);
    d.t(0, c) = samples[i].target.x;
    d.t(1, c) = samples[i].target.y;
  }
  return d;
}

struct AdamState {
  std::vector<DenseLayer> m, v;
  double beta1_pow = 1.0, beta2_pow = 1.0;
};

void sgd_update(Mlp& net, const MlpGradients& g, double lr) {
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    net.layers()[l].weights -= lr * g.layers[l].weights;
    net.layers()[l].bias -= lr * g.layers[l].bias;
  }
}

void adam_update(Mlp& net, const MlpGradients& g, double lr, AdamState& st) {
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  if (st.m.empty()) {
    for (const auto& layer : net.layers()) {
      st.m.push_back({Eigen::MatrixXd::Zero(layer.weights.rows(), layer.weights.cols()),
                      Eigen::VectorXd::Zero(layer.bias.size())});
    }
    st.v = st.m;
  }
  st.beta1_pow *= b1;
  st.beta2_pow *= b2;
  const double step = lr * std::sqrt(1.0 - st.beta2_pow) / (1.0 - st.beta1_pow);
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    auto& m = st.m[l];
    auto& v = st.v[l];
    m.weights = b1 * m.weights + (1 - b1) * g.layers[l].weights;
    m.bias = b1 * m.bias + (1 - b1) * g.layers[l].bias;
    v.weights = (b2 * v.weights.array() + (1 - b2) * g.layers[l].weights.array().square()).matrix();
    v.bias = (b2 * v.bias.array() + (1 - b2) * g.layers[l].bias.array().square()).matrix();
    net.layers()[l].weights.array() -= step * m.weights.array() / (v.weights.array().sqrt() + eps);
    net.layers()[l].bias.array() -= step * m.bias.array() / (v.bias.array().sqrt() + eps);
  }
}

}  // namespace

TrainResult train(LocalizationModel model, const std::vector<LocalizationSample>& samples, const TrainConfig& cfg) {
  if (samples.empty()) throw std::invalid_argument("train: no samples");
  if (cfg.batch_size == 0) throw std::invalid_argument("train: batch_size must be >= 1");
  if (feature_count(model.features) != model.net.input_width()) {
    throw std::invalid_argument("train: network input width does not match the feature set");
  }
  TrainResult res{std::move(model), {}};
  if (cfg.epochs == 0) return res;

  const Design raw = design_matrix(samples, res.model.features);
  const Eigen::MatrixXd x = res.model.input_scaling.apply(raw.x);
  const Eigen::MatrixXd t = res.model.target_scaling.apply(raw.t);
  const auto n = static_cast<std::size_t>(x.cols());

  Rng rng = make_rng(cfg.seed, 0x7261696EULL);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  AdamState adam;
  res.loss_history.reserve(cfg.epochs);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t len = std::min(cfg.batch_size, n - start);
      Eigen::MatrixXd bx(x.rows(), static_cast<Eigen::Index>(len));
      Eigen::MatrixXd bt(t.rows(), static_cast<Eigen::Index>(len));
      for (std::size_t k = 0; k < len; ++k) {
        bx.col(static_cast<Eigen::Index>(k)) = x.col(static_cast<Eigen::Index>(order[start + k]));
        bt.col(static_cast<Eigen::Index>(k)) = t.col(static_cast<Eigen::Index>(order[start + k]));
      }
      const MlpGradients g = res.model.net.gradients(bx, bt);
      if (!std::isfinite(g.loss)) {
        throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                 std::to_string(batches));
      }
      if (cfg.optimizer == Optimizer::Adam) {
        adam_update(res.model.net, g, cfg.learning_rate, adam);
      } else {
        sgd_update(res.model.net, g, cfg.learning_rate);
      }
      loss_sum += g.loss;
      ++batches;
    }
    res.loss_history.push_back(loss_sum / static_cast<double>(batches));
  }
  return res;
}

TrainResult train(const std::vector<LocalizationSample>& samples, const TrainConfig& cfg) {
  if (samples.empty()) throw std::invalid_argument("train: no samples");
  LocalizationModel model;
  model.features = cfg.features;
  model.net = Mlp::create(Mlp::default_widths(feature_count(cfg.features)), cfg.seed);
  const Design raw = design_matrix(samples, cfg.features);
  model.input_scaling = Standardization::fit(raw.x);
  model.target_scaling = Standardization::fit(raw.t);
  return train(std::move(model), samples, cfg);
}

LocalizationError position_errors(const std::vector<Vec2>& predicted, const std::vector<Vec2>& truth) {
  if (predicted.empty() || predicted.size() != truth.size()) {
    throw std::invalid_argument("position_errors: need equal, non-empty prediction and truth sets");
  }
  double sq = 0.0, abs_sum = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double e = distance(predicted[i], truth[i]);
    sq += e * e;
    abs_sum += e;
  }
  const double n = static_cast<double>(predicted.size());
  return {std::sqrt(sq / n), abs_sum / n};
}

LocalizationError evaluate(const LocalizationModel& model, const std::vector<LocalizationSample>& samples) {
  if (samples.empty()) throw std::invalid_argument("evaluate: empty sample set");
  std::vector<Vec2> pred, truth;
  for (const auto& s : samples) {
    pred.push_back(model.predict(s.features));
    truth.push_back(s.target);
  }
  return position_errors(pred, truth);
}

Vec2 RegionalLocalizer::predict(const LocalizationSample& s) const {
  const auto it = models.find(s.region);
  if (it == models.end()) throw std::out_of_range("RegionalLocalizer: no model for region " + std::to_string(s.region));
  return it->second.predict(s.features);
}

RegionalLocalizer train_regional(const std::vector<LocalizationSample>& samples, const TrainConfig& cfg) {
  std::map<int, std::vector<LocalizationSample>> by_region;
  for (const auto& s : samples) by_region[s.region].push_back(s);
  std::vector<int> ids;
  for (const auto& [id, _] : by_region) ids.push_back(id);
  std::vector<LocalizationModel> trained(ids.size());
  std::vector<std::string> errors(ids.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t k = 0; k < static_cast<std::int64_t>(ids.size()); ++k) {
    const auto i = static_cast<std::size_t>(k);
    TrainConfig region_cfg = cfg;
    region_cfg.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(ids[i]));
    try {
      trained[i] = train(by_region[ids[i]], region_cfg).model;
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  RegionalLocalizer loc;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!errors[i].empty()) throw std::runtime_error("region " + std::to_string(ids[i]) + ": " + errors[i]);
    loc.models.emplace(ids[i], std::move(trained[i]));
  }
  return loc;
}

LocalizationError evaluate(const RegionalLocalizer& loc, const std::vector<LocalizationSample>& samples) {
  if (samples.empty()) throw std::invalid_argument("evaluate: empty sample set");
  std::vector<Vec2> pred, truth;
  for (const auto& s : samples) {
    pred.push_back(loc.predict(s));
    truth.push_back(s.target);
  }
  return position_errors(pred, truth);
}

// ---------------------------------------------------------------------------

Scene trace_tile(const TraceConfig& cfg, Vec2 position, Rng& rng) {
  const double u = std::clamp(position.x / cfg.extent_m, 0.0, 1.0);
  const double v = std::clamp(position.y / cfg.extent_m, 0.0, 1.0);
  // Land-cover shares of the tile as smooth functions of position.
  const double grass = 0.10 + 0.35 * u;
  const double building = 0.05 + 0.30 * v;
  const double road = 0.05 + 0.15 * (0.5 + 0.5 * std::sin(3.0 * u + 2.0 * v));
  auto rows = [&](double share) {
    const int jitter = cfg.area_noise_rows > 0
                           ? static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(2 * cfg.area_noise_rows + 1))) -
                                 cfg.area_noise_rows
                           : 0;
    return std::clamp(static_cast<int>(std::lround(share * kSceneSize)) + jitter, 0, static_cast<int>(kSceneSize));
  };
  const int hg = rows(grass);
  const int hb = std::min(rows(building), static_cast<int>(kSceneSize) - hg);
  const int hr = std::min(rows(road), static_cast<int>(kSceneSize) - hg - hb);

  SceneSpec spec;
  auto band = [&](int y0, int h, PixelClass cls, int channel, int brightness) {
    SceneRegion r;
    r.x0 = 0;
    r.x1 = kSceneSize;
    r.y0 = static_cast<std::size_t>(y0);
    r.y1 = static_cast<std::size_t>(y0 + h);
    r.target = cls;
    r.base = canonical_color(cls);
    r.channel_jitter = channel;
    r.brightness_jitter = brightness;
    spec.regions.push_back(r);
  };
  band(0, hg, PixelClass::Grass, 4, 10);
  band(hg, hb, PixelClass::Building, 0, 10);
  band(hg + hb, hr, PixelClass::Road, 2, 8);
  return generate_scene(spec, rng());
}

std::vector<LocalizationSample> generate_traces(const TraceConfig& cfg, std::uint64_t seed) {
  if (!(cfg.extent_m > 0.0) || !(cfg.grid_step_m > 0.0)) throw std::invalid_argument("generate_traces: bad extent");
  Rng rng = make_rng(seed, 0x74726163ULL);
  std::vector<LocalizationSample> out;
  const auto steps = static_cast<int>(std::floor(cfg.extent_m / cfg.grid_step_m));
  const double half = 0.5 * cfg.extent_m;
  for (int iy = 0; iy < steps; ++iy) {
    for (int ix = 0; ix < steps; ++ix) {
      const Vec2 pos{(ix + 0.5) * cfg.grid_step_m, (iy + 0.5) * cfg.grid_step_m};
      const double d = std::max(1.0, distance(pos, cfg.gnb));
      // Radio measurements depend on range only, so they cannot resolve
      // position along an arc around the gNB.
      const double rsrp = -40.0 - 25.0 * std::log10(d) + cfg.radio_noise_db * standard_normal(rng);
      const double rssi = rsrp + 18.0 + cfg.radio_noise_db * standard_normal(rng);
      const double rsrq = 10.0 * std::log10(12.0 * 50.0) + rsrp - rssi;
      const double sinr = rsrp + 105.0 + cfg.radio_noise_db * standard_normal(rng);
      const Scene tile = trace_tile(cfg, pos, rng);
      LocalizationSample s;
      s.features = make_features(sinr, rsrp, rsrq, rssi, count_features(tile.image));
      s.target = pos;
      s.region = 1 + (pos.x >= half ? 1 : 0) + (pos.y >= half ? 2 : 0);
      out.push_back(s);
    }
  }
  return out;
}

std::pair<std::vector<LocalizationSample>, std::vector<LocalizationSample>> split_samples(
    const std::vector<LocalizationSample>& samples, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw std::invalid_argument("split_samples: fraction in (0,1)");
  std::map<int, std::vector<std::size_t>> by_region;
  for (std::size_t i = 0; i < samples.size(); ++i) by_region[samples[i].region].push_back(i);
  Rng rng = make_rng(seed, 0x73706C74ULL);
  std::pair<std::vector<LocalizationSample>, std::vector<LocalizationSample>> out;
  // Stratified by region so every regional model sees training data.
  for (auto& [region, idx] : by_region) {
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[uniform_index(rng, i)]);
    const auto n_train = static_cast<std::size_t>(std::lround(train_fraction * static_cast<double>(idx.size())));
    for (std::size_t k = 0; k < idx.size(); ++k) (k < n_train ? out.first : out.second).push_back(samples[idx[k]]);
  }
  return out;
}

void write_samples_csv(std::ostream& out, const std::vector<LocalizationSample>& samples) {
  out << "sinr,rsrp,rsrq,rssi,n_grass,n_building,n_road,x,y,region\n";
  for (const auto& s : samples) {
    for (double v : s.features.as_array()) out << format_double(v) << ',';
    out << format_double(s.target.x) << ',' << format_double(s.target.y) << ',' << s.region << '\n';
  }
}

std::vector<LocalizationSample> read_samples_csv(std::istream& in) {
  std::vector<LocalizationSample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.starts_with("sinr")) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 10) throw std::runtime_error("samples csv line " + std::to_string(line_no) + ": expected 10 fields");
    LocalizationSample s;
    s.features = {parse_double(f[0]), parse_double(f[1]), parse_double(f[2]), parse_double(f[3]),
                  parse_double(f[4]), parse_double(f[5]), parse_double(f[6])};
    s.target = {parse_double(f[7]), parse_double(f[8])};
    s.region = static_cast<int>(parse_double(f[9]));
    out.push_back(s);
  }
  return out;
}

namespace {

void write_scaling(std::ostream& out, std::string_view tag, const Standardization& s) {
  write_doubles(out, std::string(tag) + "_mean", std::span<const double>(s.mean.data(), static_cast<std::size_t>(s.mean.size())));
  write_doubles(out, std::string(tag) + "_scale", std::span<const double>(s.scale.data(), static_cast<std::size_t>(s.scale.size())));
}

Standardization read_scaling(std::istream& in, std::string_view tag) {
  const auto mean = read_doubles(in, std::string(tag) + "_mean");
  const auto scale = read_doubles(in, std::string(tag) + "_scale");
  if (mean.size() != scale.size()) throw std::runtime_error("localizer: scaling size mismatch");
  Standardization s;
  s.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
  s.scale = Eigen::Map<const Eigen::VectorXd>(scale.data(), static_cast<Eigen::Index>(scale.size()));
  return s;
}

constexpr std::string_view kLocalizerMagic = "beamsense-localizer";
constexpr int kLocalizerVersion = 1;

}  // namespace

void write_localizer(std::ostream& out, const RegionalLocalizer& loc) {
  out << kLocalizerMagic << ' ' << kLocalizerVersion << '\n' << "regions " << loc.models.size() << '\n';
  for (const auto& [id, m] : loc.models) {
    out << "region " << id << " features " << (m.features == FeatureSet::RadioOnly ? "radio" : "radio+pixels") << '\n';
    write_scaling(out, "input", m.input_scaling);
    write_scaling(out, "target", m.target_scaling);
    write_mlp(out, m.net);
  }
}

RegionalLocalizer read_localizer(std::istream& in) {
  expect_token(in, kLocalizerMagic);
  int version = 0;
  in >> version;
  if (version != kLocalizerVersion) throw std::runtime_error("localizer: unsupported version " + std::to_string(version));
  expect_token(in, "regions");
  std::size_t n = 0;
  in >> n;
  RegionalLocalizer loc;
  for (std::size_t k = 0; k < n; ++k) {
    expect_token(in, "region");
    int id = 0;
    in >> id;
    expect_token(in, "features");
    std::string fs;
    in >> fs;
    LocalizationModel m;
    if (fs == "radio") {
      m.features = FeatureSet::RadioOnly;
    } else if (fs == "radio+pixels") {
      m.features = FeatureSet::RadioAndPixels;
    } else {
      throw std::runtime_error("localizer: unknown feature set " + fs);
    }
    m.input_scaling = read_scaling(in, "input");
    m.target_scaling = read_scaling(in, "target");
    m.net = read_mlp(in);
    if (m.net.input_width() != feature_count(m.features)) throw std::runtime_error("localizer: width/feature mismatch");
    loc.models.emplace(id, std::move(m));
  }
  if (!in) throw std::runtime_error("localizer: truncated file");
  return loc;
}

void save_localizer(const std::filesystem::path& path, const RegionalLocalizer& loc) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_localizer: cannot open " + path.string());
  write_localizer(out, loc);
}

RegionalLocalizer load_localizer(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_localizer: cannot open " + path.string());
  return read_localizer(in);
}

}  // namespace beamsense
