#include "beamsense/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <tuple>

namespace beamsense {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool canonical_less(const UncertainPoint& a, const UncertainPoint& b) {
  return std::tie(a.center.x, a.center.y, a.radius) < std::tie(b.center.x, b.center.y, b.radius);
}

}  // namespace

double expected_distance(const DiskNodes& a, const DiskNodes& b) {
  double total = 0.0;
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    const Vec2 pa = a.points[i];
    double row = 0.0;
    for (std::size_t j = 0; j < b.points.size(); ++j) {
      const double dx = pa.x - b.points[j].x;
      const double dy = pa.y - b.points[j].y;
      row += b.weights[j] * std::sqrt(dx * dx + dy * dy);
    }
    total += a.weights[i] * row;
  }
  return total;
}

namespace {

double ordered_expected_distance(const UncertainPoint& a, const DiskNodes& na,
                                 const UncertainPoint& b, const DiskNodes& nb) {
  return canonical_less(b, a) ? expected_distance(nb, na) : expected_distance(na, nb);
}

}  // namespace

void UncertainPoint::validate() const {
  if (!std::isfinite(center.x) || !std::isfinite(center.y)) {
    throw std::invalid_argument("UncertainPoint: center must be finite");
  }
  if (!std::isfinite(radius) || radius < 0.0) {
    throw std::invalid_argument("UncertainPoint: radius must be finite and >= 0, got " +
                                std::to_string(radius));
  }
}

void QuadratureSpec::validate() const {
  if (radial_nodes < 1 || angular_nodes < 1) {
    throw std::invalid_argument("QuadratureSpec: node counts must be >= 1");
  }
}

GaussLegendreRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  GaussLegendreRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Chebyshev-like initial guess, then Newton on P_n.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[static_cast<std::size_t>(i)] = -x;
    rule.nodes[static_cast<std::size_t>(n - 1 - i)] = x;
    rule.weights[static_cast<std::size_t>(i)] = w;
    rule.weights[static_cast<std::size_t>(n - 1 - i)] = w;
  }
  if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
  return rule;
}

DiskNodes disk_nodes(const UncertainPoint& p, const QuadratureSpec& q) {
  p.validate();
  q.validate();
  DiskNodes out;
  if (p.radius == 0.0) {
    out.points.push_back(p.center);
    out.weights.push_back(1.0);
    return out;
  }
  const GaussLegendreRule gl = gauss_legendre(q.radial_nodes);
  const double radius = p.radius;
  // Density r / (pi R^2) on [0,R] x [0,2pi); angular weight 2pi/N cancels pi.
  const double angular_weight = kTwoPi / q.angular_nodes;
  out.points.reserve(static_cast<std::size_t>(q.radial_nodes * q.angular_nodes));
  out.weights.reserve(out.points.capacity());
  for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
    const double r = 0.5 * radius * (gl.nodes[i] + 1.0);
    const double radial_weight = 0.5 * radius * gl.weights[i] * r / (std::numbers::pi * radius * radius);
    for (int k = 0; k < q.angular_nodes; ++k) {
      const double theta = angular_weight * k;
      out.points.push_back({p.center.x + r * std::cos(theta), p.center.y + r * std::sin(theta)});
      out.weights.push_back(radial_weight * angular_weight);
    }
  }
  return out;
}

double uncertain_distance(const UncertainPoint& a, const UncertainPoint& b, const QuadratureSpec& q) {
  const DiskNodes na = disk_nodes(a, q);
  const DiskNodes nb = disk_nodes(b, q);
  return ordered_expected_distance(a, na, b, nb);
}

McEstimate uncertain_distance_mc_estimate(const UncertainPoint& a, const UncertainPoint& b,
                                          std::uint64_t samples, std::uint64_t seed) {
  a.validate();
  b.validate();
  if (samples < 1) throw std::invalid_argument("uncertain_distance_mc: samples must be >= 1");
  if (a.radius == 0.0 && b.radius == 0.0) return {distance(a.center, b.center), 0.0};
  Rng rng = make_rng(seed);
  // Moments are accumulated about the center distance, which keeps the
  // shifted sums small enough that the one-pass variance stays accurate.
  const double shift = distance(a.center, b.center);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::uint64_t n = 0; n < samples; ++n) {
    const double d = distance(sample_point(a, rng), sample_point(b, rng)) - shift;
    sum += d;
    sum_sq += d * d;
  }
  const auto n = static_cast<double>(samples);
  const double mean = sum / n;
  const double var = samples > 1 ? std::max(0.0, (sum_sq - sum * mean) / (n - 1.0)) : 0.0;
  return {shift + mean, std::sqrt(var / n)};
}

Vec2 sample_point(const UncertainPoint& p, Rng& rng) {
  if (p.radius == 0.0) return p.center;
  const double r = p.radius * std::sqrt(uniform01(rng));
  const double theta = kTwoPi * uniform01(rng);
  return {p.center.x + r * std::cos(theta), p.center.y + r * std::sin(theta)};
}

Vec2 sample_point(const UncertainPoint& p, std::uint64_t seed) {
  p.validate();
  Rng rng = make_rng(seed);
  return sample_point(p, rng);
}

namespace {

template <bool Parallel>
DistanceMatrix fill_uncertain(std::span<const UncertainPoint> points, const QuadratureSpec& q) {
  q.validate();
  const std::size_t n = points.size();
  std::vector<DiskNodes> nodes;
  nodes.reserve(n);
  for (const auto& p : points) nodes.push_back(disk_nodes(p, q));

  DistanceMatrix m(n);
  const auto total = static_cast<std::int64_t>(m.packed().size());
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(static_cast<std::size_t>(total));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) pairs.emplace_back(i, j);

  std::span<double> out = m.packed();
  if constexpr (Parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t k = 0; k < total; ++k) {
      const auto [i, j] = pairs[static_cast<std::size_t>(k)];
      out[static_cast<std::size_t>(k)] = ordered_expected_distance(points[i], nodes[i], points[j], nodes[j]);
    }
  } else {
    for (std::int64_t k = 0; k < total; ++k) {
      const auto [i, j] = pairs[static_cast<std::size_t>(k)];
      out[static_cast<std::size_t>(k)] = ordered_expected_distance(points[i], nodes[i], points[j], nodes[j]);
    }
  }
  return m;
}

}  // namespace

DistanceMatrix uncertain_distance_matrix(std::span<const UncertainPoint> points, const QuadratureSpec& q) {
  return fill_uncertain<true>(points, q);
}

DistanceMatrix uncertain_distance_matrix_serial(std::span<const UncertainPoint> points,
                                                const QuadratureSpec& q) {
  return fill_uncertain<false>(points, q);
}

DistanceMatrix euclidean_distance_matrix(std::span<const Vec2> points) {
  const std::size_t n = points.size();
  DistanceMatrix m(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) m.at(i, j) = distance(points[i], points[j]);
  return m;
}

}  // namespace beamsense
