#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace beamsense {

struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;     // out
};

struct MlpGradients {
  std::vector<DenseLayer> layers;
  double loss = 0.0;
};

/// Feed-forward regressor with logistic hidden layers and a linear output.
class Mlp {
 public:
  Mlp() = default;

  /// Glorot-uniform weights, zero biases.
  static Mlp create(const std::vector<std::size_t>& widths, std::uint64_t seed);
  /// n_inputs -> 128 -> 64 -> 32 -> 16 -> 2.
  static std::vector<std::size_t> default_widths(std::size_t n_inputs);

  std::size_t input_width() const;
  std::size_t output_width() const;
  std::vector<std::size_t> widths() const;
  std::size_t parameter_count() const;

  /// Throws std::invalid_argument on width mismatch.
  Eigen::VectorXd forward(const Eigen::VectorXd& x) const;
  /// Column-per-sample batch forward.
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& x) const;
  /// Outputs of every layer for one input; front() is the input itself.
  std::vector<Eigen::VectorXd> activations(const Eigen::VectorXd& x) const;

  /// Loss = mean over columns of ||y - t||^2, and its parameter gradients.
  MlpGradients gradients(const Eigen::MatrixXd& x, const Eigen::MatrixXd& targets) const;

  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  std::vector<double> flat_parameters() const;
  bool all_finite() const;

  friend bool operator==(const Mlp& a, const Mlp& b);

 private:
  std::vector<DenseLayer> layers_;
};

/// Largest per-parameter |analytic - numeric| / max(|analytic|, |numeric|, 1e-6)
/// with central differences of step `epsilon`.
double gradient_check(const Mlp& net, const Eigen::VectorXd& x, const Eigen::VectorXd& target,
                      double epsilon);

void write_mlp(std::ostream& out, const Mlp& net);
Mlp read_mlp(std::istream& in);

}  // namespace beamsense
