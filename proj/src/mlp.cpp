#include "beamsense/mlp.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "beamsense/random.hpp"
#include "beamsense/text_io.hpp"

namespace beamsense {

namespace {

Eigen::MatrixXd logistic(const Eigen::MatrixXd& z) {
  return (1.0 + (-z.array()).exp()).inverse().matrix();
}

}  // namespace

Mlp Mlp::create(const std::vector<std::size_t>& widths, std::uint64_t seed) {
  if (widths.size() < 2) throw std::invalid_argument("Mlp::create: need at least input and output widths");
  for (std::size_t w : widths)
    if (w == 0) throw std::invalid_argument("Mlp::create: zero layer width");
  Rng rng = make_rng(seed);
  Mlp net;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(widths[l]);
    const auto out = static_cast<Eigen::Index>(widths[l + 1]);
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    DenseLayer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd::Zero(out)};
    for (Eigen::Index c = 0; c < in; ++c)
      for (Eigen::Index r = 0; r < out; ++r) layer.weights(r, c) = uniform(rng, -limit, limit);
    net.layers_.push_back(std::move(layer));
  }
  return net;
}

std::vector<std::size_t> Mlp::default_widths(std::size_t n_inputs) { return {n_inputs, 128, 64, 32, 16, 2}; }

std::size_t Mlp::input_width() const {
  return layers_.empty() ? 0 : static_cast<std::size_t>(layers_.front().weights.cols());
}

std::size_t Mlp::output_width() const {
  return layers_.empty() ? 0 : static_cast<std::size_t>(layers_.back().weights.rows());
}

std::vector<std::size_t> Mlp::widths() const {
  std::vector<std::size_t> w;
  if (layers_.empty()) return w;
  w.push_back(input_width());
  for (const auto& l : layers_) w.push_back(static_cast<std::size_t>(l.weights.rows()));
  return w;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
  return n;
}

Eigen::MatrixXd Mlp::forward_batch(const Eigen::MatrixXd& x) const {
  if (static_cast<std::size_t>(x.rows()) != input_width()) {
    throw std::invalid_argument("Mlp::forward: input has " + std::to_string(x.rows()) + " rows, expected " +
                                std::to_string(input_width()));
  }
  Eigen::MatrixXd a = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd z = (layers_[l].weights * a).colwise() + layers_[l].bias;
    a = (l + 1 == layers_.size()) ? std::move(z) : logistic(z);
  }
  return a;
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& x) const { return forward_batch(x); }

std::vector<Eigen::VectorXd> Mlp::activations(const Eigen::VectorXd& x) const {
  if (static_cast<std::size_t>(x.size()) != input_width()) throw std::invalid_argument("Mlp::activations: width mismatch");
  std::vector<Eigen::VectorXd> out{x};
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::VectorXd z = layers_[l].weights * out.back() + layers_[l].bias;
    out.push_back(l + 1 == layers_.size() ? z : Eigen::VectorXd(logistic(z)));
  }
  return out;
}

MlpGradients Mlp::gradients(const Eigen::MatrixXd& x, const Eigen::MatrixXd& targets) const {
  if (static_cast<std::size_t>(x.rows()) != input_width() ||
      static_cast<std::size_t>(targets.rows()) != output_width() || x.cols() != targets.cols() || x.cols() == 0) {
    throw std::invalid_argument("Mlp::gradients: shape mismatch");
  }
  const double batch = static_cast<double>(x.cols());
  std::vector<Eigen::MatrixXd> acts{x};
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd z = (layers_[l].weights * acts.back()).colwise() + layers_[l].bias;
    acts.push_back(l + 1 == layers_.size() ? std::move(z) : logistic(z));
  }
  const Eigen::MatrixXd err = acts.back() - targets;

  MlpGradients g;
  g.loss = err.squaredNorm() / batch;
  g.layers.resize(layers_.size());
  Eigen::MatrixXd delta = (2.0 / batch) * err;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    g.layers[l].weights = delta * acts[l].transpose();
    g.layers[l].bias = delta.rowwise().sum();
    if (l > 0) {
      const Eigen::MatrixXd& a = acts[l];
      delta = ((layers_[l].weights.transpose() * delta).array() * a.array() * (1.0 - a.array())).matrix();
    }
  }
  return g;
}

std::vector<double> Mlp::flat_parameters() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const auto& l : layers_) {
    out.insert(out.end(), l.weights.data(), l.weights.data() + l.weights.size());
    out.insert(out.end(), l.bias.data(), l.bias.data() + l.bias.size());
  }
  return out;
}

bool Mlp::all_finite() const {
  for (const auto& l : layers_)
    if (!l.weights.allFinite() || !l.bias.allFinite()) return false;
  return true;
}

bool operator==(const Mlp& a, const Mlp& b) {
  if (a.layers_.size() != b.layers_.size()) return false;
  for (std::size_t l = 0; l < a.layers_.size(); ++l) {
    const auto& x = a.layers_[l];
    const auto& y = b.layers_[l];
    if (x.weights.rows() != y.weights.rows() || x.weights.cols() != y.weights.cols()) return false;
    if (x.weights != y.weights || x.bias != y.bias) return false;
  }
  return true;
}

double gradient_check(const Mlp& net, const Eigen::VectorXd& x, const Eigen::VectorXd& target, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("gradient_check: epsilon must be positive");
  const MlpGradients analytic = net.gradients(x, target);
  Mlp probe = net;
  auto loss = [&]() { return (probe.forward(x) - target).squaredNorm(); };
  double worst = 0.0;
  auto compare = [&](double& param, double a) {
    const double saved = param;
    param = saved + epsilon;
    const double up = loss();
    param = saved - epsilon;
    const double down = loss();
    param = saved;
    const double numeric = (up - down) / (2.0 * epsilon);
    const double scale = std::max({std::abs(a), std::abs(numeric), 1e-6});
    worst = std::max(worst, std::abs(a - numeric) / scale);
  };
  for (std::size_t l = 0; l < probe.layers().size(); ++l) {
    auto& layer = probe.layers()[l];
    for (Eigen::Index i = 0; i < layer.weights.size(); ++i)
      compare(layer.weights.data()[i], analytic.layers[l].weights.data()[i]);
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) compare(layer.bias[i], analytic.layers[l].bias[i]);
  }
  return worst;
}

void write_mlp(std::ostream& out, const Mlp& net) {
  const auto w = net.widths();
  out << "mlp " << w.size();
  for (std::size_t v : w) out << ' ' << v;
  out << '\n';
  for (const auto& layer : net.layers()) {
    write_doubles(out, "weights", std::span<const double>(layer.weights.data(), static_cast<std::size_t>(layer.weights.size())));
    write_doubles(out, "bias", std::span<const double>(layer.bias.data(), static_cast<std::size_t>(layer.bias.size())));
  }
}

Mlp read_mlp(std::istream& in) {
  expect_token(in, "mlp");
  std::size_t n = 0;
  in >> n;
  std::vector<std::size_t> w(n);
  for (auto& v : w) in >> v;
  if (!in || n < 2) throw std::runtime_error("read_mlp: malformed layer widths");
  Mlp net = Mlp::create(w, 0);
  for (auto& layer : net.layers()) {
    read_doubles(in, "weights", std::span<double>(layer.weights.data(), static_cast<std::size_t>(layer.weights.size())));
    read_doubles(in, "bias", std::span<double>(layer.bias.data(), static_cast<std::size_t>(layer.bias.size())));
  }
  if (!net.all_finite()) throw std::runtime_error("read_mlp: non-finite parameter");
  return net;
}

}  // namespace beamsense
