#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "beamsense/mlp.hpp"
#include "beamsense/random.hpp"

using namespace beamsense;

namespace {

// Scalar-loop forward pass, independent of the Eigen expressions in Mlp.
std::vector<double> reference_forward(const Mlp& net, const std::vector<double>& x) {
  std::vector<double> a = x;
  const auto& layers = net.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& w = layers[l].weights;
    std::vector<double> z(static_cast<std::size_t>(w.rows()));
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      double s = layers[l].bias(i);
      for (Eigen::Index j = 0; j < w.cols(); ++j) s += w(i, j) * a[static_cast<std::size_t>(j)];
      const bool hidden = l + 1 < layers.size();
      z[static_cast<std::size_t>(i)] = hidden ? 1.0 / (1.0 + std::exp(-s)) : s;
    }
    a = std::move(z);
  }
  return a;
}

Eigen::VectorXd random_vector(Rng& rng, Eigen::Index n, double scale = 1.0) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = scale * standard_normal(rng);
  return v;
}

}  // namespace

TEST(Mlp, DefaultWidths) {
  EXPECT_EQ(Mlp::default_widths(7), (std::vector<std::size_t>{7, 128, 64, 32, 16, 2}));
  const auto net = Mlp::create(Mlp::default_widths(7), 1);
  EXPECT_EQ(net.input_width(), 7u);
  EXPECT_EQ(net.output_width(), 2u);
  EXPECT_EQ(net.parameter_count(), 8u * 128 + 129u * 64 + 65u * 32 + 33u * 16 + 17u * 2);
  EXPECT_THROW(Mlp::create({3}, 1), std::invalid_argument);
  EXPECT_THROW(Mlp::create({3, 0, 2}, 1), std::invalid_argument);
}

TEST(Mlp, ZeroParametersGiveZeroOutput) {
  auto net = Mlp::create(Mlp::default_widths(7), 2);
  for (auto& l : net.layers()) {
    l.weights.setZero();
    l.bias.setZero();
  }
  Rng rng = make_rng(1);
  for (int i = 0; i < 10; ++i) EXPECT_TRUE(net.forward(random_vector(rng, 7, 100.0)).isZero(0.0));
}

TEST(Mlp, ForwardMatchesScalarReference) {
  Rng rng = make_rng(4);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto net = Mlp::create(Mlp::default_widths(7), seed);
    // Nonzero biases so they are exercised too.
    for (auto& l : net.layers()) l.bias = random_vector(rng, l.bias.size(), 0.3);
    const Eigen::VectorXd x = random_vector(rng, 7);
    const Eigen::VectorXd y = net.forward(x);
    const auto ref = reference_forward(net, std::vector<double>(x.data(), x.data() + x.size()));
    ASSERT_EQ(ref.size(), 2u);
    EXPECT_NEAR(y(0), ref[0], 1e-10);
    EXPECT_NEAR(y(1), ref[1], 1e-10);
  }
}

TEST(Mlp, BatchForwardMatchesPerSample) {
  Rng rng = make_rng(5);
  const auto net = Mlp::create({4, 8, 3}, 3);
  Eigen::MatrixXd x(4, 6);
  for (int c = 0; c < 6; ++c) x.col(c) = random_vector(rng, 4);
  const Eigen::MatrixXd y = net.forward_batch(x);
  for (int c = 0; c < 6; ++c) EXPECT_LT((y.col(c) - net.forward(x.col(c))).norm(), 1e-14);
}

TEST(Mlp, HiddenActivationsInUnitInterval) {
  Rng rng = make_rng(6);
  const auto net = Mlp::create(Mlp::default_widths(7), 6);
  const auto acts = net.activations(random_vector(rng, 7, 5.0));
  ASSERT_EQ(acts.size(), 6u);
  for (std::size_t l = 1; l + 1 < acts.size(); ++l) {
    EXPECT_GT(acts[l].minCoeff(), 0.0);
    EXPECT_LT(acts[l].maxCoeff(), 1.0);
  }
}

TEST(Mlp, RejectsWrongInputWidth) {
  const auto net = Mlp::create({3, 4, 2}, 1);
  EXPECT_THROW(net.forward(Eigen::VectorXd::Zero(4)), std::invalid_argument);
  EXPECT_THROW(net.gradients(Eigen::MatrixXd::Zero(3, 2), Eigen::MatrixXd::Zero(2, 3)), std::invalid_argument);
}

TEST(Mlp, GradientCheckAcrossSeeds) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng = make_rng(seed, 9);
    const auto net = Mlp::create({7, 12, 8, 2}, seed);
    const double dev = gradient_check(net, random_vector(rng, 7), random_vector(rng, 2), 1e-5);
    EXPECT_LT(dev, 1e-4) << "seed " << seed;
  }
}

TEST(Mlp, ZeroLossGivesZeroGradient) {
  Rng rng = make_rng(10);
  const auto net = Mlp::create({3, 5, 2}, 4);
  Eigen::MatrixXd x(3, 4);
  for (int c = 0; c < 4; ++c) x.col(c) = random_vector(rng, 3);
  const auto g = net.gradients(x, net.forward_batch(x));
  EXPECT_EQ(g.loss, 0.0);
  for (const auto& l : g.layers) {
    EXPECT_LT(l.weights.cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LT(l.bias.cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(Mlp, LossIsMeanSquaredNorm) {
  auto net = Mlp::create({1, 2}, 1);
  net.layers()[0].weights.setZero();
  net.layers()[0].bias.setZero();
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(1, 2);
  Eigen::MatrixXd t(2, 2);
  t << 3, 0, 4, 0;
  EXPECT_DOUBLE_EQ(net.gradients(x, t).loss, 12.5);
}

TEST(Mlp, SerializationRoundTrip) {
  const auto net = Mlp::create({7, 16, 2}, 11);
  std::stringstream ss;
  write_mlp(ss, net);
  const Mlp back = read_mlp(ss);
  EXPECT_TRUE(back == net);
  std::istringstream bad("1 7\n");
  EXPECT_THROW(read_mlp(bad), std::runtime_error);
}
