#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "beamsense/random.hpp"

namespace beamsense {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend constexpr bool operator==(Vec2 a, Vec2 b) = default;
};

inline double norm(Vec2 v) { return std::sqrt(v.x * v.x + v.y * v.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }

/// A 2-D position (meters) known only up to a uniform disk of the given radius.
/// radius == 0 is an exact position.
struct UncertainPoint {
  Vec2 center;
  double radius = 0.0;

  /// Throws std::invalid_argument on non-finite center or negative/non-finite radius.
  void validate() const;
};

/// Tensor-product rule over (r, theta) for one disk: Gauss-Legendre in r,
/// trapezoidal in theta.
struct QuadratureSpec {
  int radial_nodes = 16;
  int angular_nodes = 32;

  void validate() const;
};

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
GaussLegendreRule gauss_legendre(int n);

/// Weighted sample points of the uniform density on a disk. Weights sum to 1.
/// A zero-radius disk collapses to its center with weight 1.
struct DiskNodes {
  std::vector<Vec2> points;
  std::vector<double> weights;
};
DiskNodes disk_nodes(const UncertainPoint& p, const QuadratureSpec& q);

/// Weighted mean distance between two node sets, traversed a-major.
double expected_distance(const DiskNodes& a, const DiskNodes& b);

/// Expected Euclidean distance between two points each uniform on its disk,
/// by quadrature over (r1, theta1, r2, theta2). Bit-exact symmetric.
double uncertain_distance(const UncertainPoint& a, const UncertainPoint& b,
                          const QuadratureSpec& q = {});

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Monte Carlo estimate of the same expectation from `samples` paired draws.
McEstimate uncertain_distance_mc_estimate(const UncertainPoint& a, const UncertainPoint& b,
                                          std::uint64_t samples, std::uint64_t seed);

inline double uncertain_distance_mc(const UncertainPoint& a, const UncertainPoint& b,
                                    std::uint64_t samples, std::uint64_t seed) {
  return uncertain_distance_mc_estimate(a, b, samples, seed).mean;
}

/// Uniform draw from the disk (r = R*sqrt(u), theta = 2*pi*v).
Vec2 sample_point(const UncertainPoint& p, Rng& rng);
Vec2 sample_point(const UncertainPoint& p, std::uint64_t seed);

/// Symmetric matrix of pairwise distances, upper triangle (diagonal
/// included) stored packed. The diagonal is not zero for uncertain points.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  explicit DistanceMatrix(std::size_t n) : n_(n), values_(n * (n + 1) / 2, 0.0) {}

  std::size_t size() const { return n_; }

  double operator()(std::size_t i, std::size_t j) const { return values_[index(i, j)]; }
  double& at(std::size_t i, std::size_t j) { return values_[index(i, j)]; }

  std::span<const double> packed() const { return values_; }
  std::span<double> packed() { return values_; }

  // Packed offset for i <= j.
  std::size_t index(std::size_t i, std::size_t j) const {
    if (i > j) std::swap(i, j);
    return i * n_ - i * (i + 1) / 2 + j;
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> values_;
};

/// OpenMP-parallel fill of the uncertain-distance matrix.
DistanceMatrix uncertain_distance_matrix(std::span<const UncertainPoint> points,
                                         const QuadratureSpec& q = {});
/// Single-threaded reference of the same fill; results are bit-identical.
DistanceMatrix uncertain_distance_matrix_serial(std::span<const UncertainPoint> points,
                                                const QuadratureSpec& q = {});

DistanceMatrix euclidean_distance_matrix(std::span<const Vec2> points);

}  // namespace beamsense
