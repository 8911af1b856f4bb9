#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <vector>

#include "beamsense/geometry.hpp"
#include "beamsense/mlp.hpp"
#include "beamsense/vision.hpp"

namespace beamsense {

struct LocalizationSample {
  FeatureVector features;
  Vec2 target;     // meters
  int region = 1;  // 1..4
};

enum class FeatureSet {
  RadioOnly,       // SINR, RSRP, RSRQ, RSSI
  RadioAndPixels,  // plus grass / building / road pixel counts
};

std::size_t feature_count(FeatureSet set);
Eigen::VectorXd select_features(const FeatureVector& f, FeatureSet set);

/// Per-dimension affine map to zero mean / unit variance. Constant columns
/// keep unit scale.
struct Standardization {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  static Standardization fit(const Eigen::MatrixXd& columns);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& columns) const;
  Eigen::MatrixXd invert(const Eigen::MatrixXd& columns) const;
};

/// A trained network together with its input and target scaling.
struct LocalizationModel {
  FeatureSet features = FeatureSet::RadioAndPixels;
  Mlp net;
  Standardization input_scaling;
  Standardization target_scaling;

  Vec2 predict(const FeatureVector& f) const;
};

enum class Optimizer { Sgd, Adam };

struct TrainConfig {
  std::size_t epochs = 500;
  std::size_t batch_size = 32;
  // Plain SGD at 1e-2 stalls near the mean on the trace data.
  double learning_rate = 1e-3;
  Optimizer optimizer = Optimizer::Adam;
  std::uint64_t seed = 1;
  FeatureSet features = FeatureSet::RadioAndPixels;
};

struct TrainResult {
  LocalizationModel model;
  // Mean squared error (standardized units) over each epoch's mini-batches.
  std::vector<double> loss_history;
};

/// Mini-batch training on MSE. Standardization is fit on `samples`.
/// Throws std::invalid_argument on empty input and std::runtime_error if the
/// loss becomes non-finite.
TrainResult train(const std::vector<LocalizationSample>& samples, const TrainConfig& cfg);

/// Continues training an existing network; epochs == 0 returns it unchanged.
TrainResult train(LocalizationModel model, const std::vector<LocalizationSample>& samples,
                  const TrainConfig& cfg);

struct LocalizationError {
  double rmse = 0.0;  // sqrt(mean squared Euclidean error)
  double mae = 0.0;   // mean Euclidean error
};

LocalizationError evaluate(const LocalizationModel& model, const std::vector<LocalizationSample>& samples);
LocalizationError position_errors(const std::vector<Vec2>& predicted, const std::vector<Vec2>& truth);

/// One model per region index.
struct RegionalLocalizer {
  std::map<int, LocalizationModel> models;

  Vec2 predict(const LocalizationSample& s) const;
};

/// Trains each region's model independently; regions run in parallel.
RegionalLocalizer train_regional(const std::vector<LocalizationSample>& samples, const TrainConfig& cfg);
LocalizationError evaluate(const RegionalLocalizer& loc, const std::vector<LocalizationSample>& samples);

struct TraceConfig {
  double extent_m = 400.0;  // square side; four quadrant regions
  double grid_step_m = 20.0;
  Vec2 gnb{-40.0, -40.0};
  double radio_noise_db = 1.5;
  int area_noise_rows = 3;  // +/- jitter of painted band heights, pixel rows
};

/// Measurement traces on a grid. Radio features depend on distance to the
/// gNB only; pixel counts come from a synthetic 256x256 tile whose land cover
/// varies with position.
std::vector<LocalizationSample> generate_traces(const TraceConfig& cfg, std::uint64_t seed);

/// Pixel tile for a position under the trace land-cover model.
Scene trace_tile(const TraceConfig& cfg, Vec2 position, Rng& rng);

/// Deterministic shuffle then split; `train_fraction` of samples go first.
std::pair<std::vector<LocalizationSample>, std::vector<LocalizationSample>> split_samples(
    const std::vector<LocalizationSample>& samples, double train_fraction, std::uint64_t seed);

// CSV: sinr,rsrp,rsrq,rssi,n_grass,n_building,n_road,x,y,region
void write_samples_csv(std::ostream& out, const std::vector<LocalizationSample>& samples);
std::vector<LocalizationSample> read_samples_csv(std::istream& in);

void save_localizer(const std::filesystem::path& path, const RegionalLocalizer& loc);
RegionalLocalizer load_localizer(const std::filesystem::path& path);
void write_localizer(std::ostream& out, const RegionalLocalizer& loc);
RegionalLocalizer read_localizer(std::istream& in);

}  // namespace beamsense
