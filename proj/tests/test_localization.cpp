#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "beamsense/localization.hpp"
#include "beamsense/random.hpp"

using namespace beamsense;

namespace {

// target = A x + b + noise on seven standard-normal features.
std::vector<LocalizationSample> linear_samples(std::size_t n, double noise, std::uint64_t seed) {
  Rng rng = make_rng(seed, 5);
  std::vector<LocalizationSample> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::array<double, 7> x{};
    for (auto& v : x) v = standard_normal(rng);
    LocalizationSample s;
    s.features = {x[0], x[1], x[2], x[3], x[4], x[5], x[6]};
    s.target = {3.0 * x[0] - 2.0 * x[4] + x[6] + 10.0 + noise * standard_normal(rng),
                -x[1] + 4.0 * x[5] + 0.5 * x[2] - 5.0 + noise * standard_normal(rng)};
    out.push_back(s);
  }
  return out;
}

// Euclidean RMSE of the ordinary least-squares fit with intercept.
double ols_rmse(const std::vector<LocalizationSample>& s) {
  Eigen::MatrixXd a(static_cast<Eigen::Index>(s.size()), 8);
  Eigen::MatrixXd t(static_cast<Eigen::Index>(s.size()), 2);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto f = s[i].features.as_array();
    const auto r = static_cast<Eigen::Index>(i);
    for (int k = 0; k < 7; ++k) a(r, k) = f[static_cast<std::size_t>(k)];
    a(r, 7) = 1.0;
    t(r, 0) = s[i].target.x;
    t(r, 1) = s[i].target.y;
  }
  const Eigen::MatrixXd coef = a.colPivHouseholderQr().solve(t);
  const Eigen::MatrixXd res = a * coef - t;
  return std::sqrt(res.squaredNorm() / static_cast<double>(s.size()));
}

}  // namespace

TEST(PositionErrors, SpotValues) {
  const auto one = position_errors({{3, 4}}, {{0, 0}});
  EXPECT_DOUBLE_EQ(one.rmse, 5.0);
  EXPECT_DOUBLE_EQ(one.mae, 5.0);
  const auto two = position_errors({{1, 1}, {10, 0}}, {{1, 1}, {0, 0}});
  EXPECT_DOUBLE_EQ(two.rmse, std::sqrt(50.0));
  EXPECT_DOUBLE_EQ(two.mae, 5.0);
  const auto zero = position_errors({{2, 3}, {4, 5}}, {{2, 3}, {4, 5}});
  EXPECT_EQ(zero.rmse, 0.0);
  EXPECT_EQ(zero.mae, 0.0);
  EXPECT_THROW(position_errors({}, {}), std::invalid_argument);
  EXPECT_THROW(position_errors({{0, 0}}, {}), std::invalid_argument);
}

TEST(PositionErrors, RmseNeverBelowMae) {
  Rng rng = make_rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Vec2> p, t;
    const auto n = 1 + uniform_index(rng, 20);
    for (std::size_t i = 0; i < n; ++i) {
      p.push_back({uniform(rng, -50, 50), uniform(rng, -50, 50)});
      t.push_back({uniform(rng, -50, 50), uniform(rng, -50, 50)});
    }
    const auto e = position_errors(p, t);
    EXPECT_GE(e.rmse, e.mae * (1 - 1e-15));
  }
}

TEST(Standardization, ZeroMeanUnitScaleAndInverse) {
  Eigen::MatrixXd x(2, 4);
  x << 1, 2, 3, 4, 5, 5, 5, 5;
  const auto s = Standardization::fit(x);
  const Eigen::MatrixXd z = s.apply(x);
  EXPECT_NEAR(z.row(0).mean(), 0.0, 1e-15);
  EXPECT_NEAR(z.row(0).squaredNorm() / 4.0, 1.0, 1e-14);
  EXPECT_EQ(s.scale(1), 1.0);  // constant row
  EXPECT_LT((s.invert(z) - x).norm(), 1e-13);
}

TEST(Features, SelectionWidths) {
  const FeatureVector f{1, 2, 3, 4, 5, 6, 7};
  EXPECT_EQ(select_features(f, FeatureSet::RadioOnly).size(), 4);
  EXPECT_EQ(select_features(f, FeatureSet::RadioAndPixels)(6), 7.0);
}

TEST(Training, ZeroEpochsLeavesModelUnchanged) {
  const auto data = linear_samples(40, 0.1, 1);
  TrainConfig cfg;
  cfg.epochs = 3;
  const auto first = train(data, cfg);
  cfg.epochs = 0;
  const auto again = train(first.model, data, cfg);
  EXPECT_TRUE(again.model.net == first.model.net);
  EXPECT_TRUE(again.loss_history.empty());
}

TEST(Training, DeterministicLossHistory) {
  const auto data = linear_samples(60, 0.1, 2);
  TrainConfig cfg;
  cfg.epochs = 5;
  const auto a = train(data, cfg), b = train(data, cfg);
  EXPECT_EQ(a.loss_history, b.loss_history);
  EXPECT_TRUE(a.model.net == b.model.net);
  cfg.seed = 2;
  EXPECT_NE(train(data, cfg).loss_history, a.loss_history);
}

TEST(Training, RejectsEmptyInput) {
  EXPECT_THROW(train({}, TrainConfig{}), std::invalid_argument);
  TrainConfig cfg;
  cfg.batch_size = 0;
  EXPECT_THROW(train(linear_samples(4, 0.1, 1), cfg), std::invalid_argument);
}

TEST(Training, ReachesLinearNoiseFloor) {
  const auto data = linear_samples(400, 0.5, 3);
  TrainConfig cfg;
  cfg.epochs = 300;
  const auto res = train(data, cfg);
  const double floor = ols_rmse(data);
  const auto err = evaluate(res.model, data);
  EXPECT_LT(err.rmse, 1.5 * floor) << "floor " << floor;
  EXPECT_GE(err.rmse, err.mae);
}

TEST(Traces, ShapeRegionsAndDeterminism) {
  TraceConfig cfg;
  const auto a = generate_traces(cfg, 4);
  ASSERT_EQ(a.size(), 400u);
  std::map<int, int> per_region;
  for (const auto& s : a) {
    ++per_region[s.region];
    const double px = s.features.n_grass + s.features.n_building + s.features.n_road;
    EXPECT_LE(px, 65536.0);
    EXPECT_GT(s.features.n_grass, 0.0);
  }
  EXPECT_EQ(per_region.size(), 4u);
  for (const auto& [r, n] : per_region) EXPECT_EQ(n, 100) << r;
  const auto b = generate_traces(cfg, 4);
  std::ostringstream sa, sb;
  write_samples_csv(sa, a);
  write_samples_csv(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
}

TEST(Traces, SplitIsStratifiedAndComplete) {
  const auto data = generate_traces(TraceConfig{}, 1);
  const auto [tr, te] = split_samples(data, 0.8, 7);
  EXPECT_EQ(tr.size(), 320u);
  EXPECT_EQ(te.size(), 80u);
  EXPECT_THROW(split_samples(data, 1.0, 7), std::invalid_argument);
}

TEST(Io, SamplesCsvRoundTrip) {
  const auto data = generate_traces(TraceConfig{.grid_step_m = 100.0}, 3);
  std::stringstream ss;
  write_samples_csv(ss, data);
  const auto back = read_samples_csv(ss);
  ASSERT_EQ(back.size(), data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    EXPECT_EQ(back[i].features.as_array(), data[i].features.as_array());
    EXPECT_EQ(back[i].target, data[i].target);
    EXPECT_EQ(back[i].region, data[i].region);
  }
  std::istringstream bad("1,2,3\n");
  EXPECT_THROW(read_samples_csv(bad), std::runtime_error);
}

TEST(Io, LocalizerRoundTripPredictsIdentically) {
  const auto data = generate_traces(TraceConfig{.grid_step_m = 50.0}, 5);
  TrainConfig cfg;
  cfg.epochs = 2;
  const auto loc = train_regional(data, cfg);
  EXPECT_EQ(loc.models.size(), 4u);
  const auto path = std::filesystem::temp_directory_path() / "beamsense_test_localizer.txt";
  save_localizer(path, loc);
  const auto back = load_localizer(path);
  std::filesystem::remove(path);
  for (const auto& s : data) EXPECT_EQ(loc.predict(s), back.predict(s));
  LocalizationSample stray = data.front();
  stray.region = 9;
  EXPECT_THROW(loc.predict(stray), std::out_of_range);
}
