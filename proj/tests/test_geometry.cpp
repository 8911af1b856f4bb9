#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "beamsense/geometry.hpp"
#include "beamsense/random.hpp"

using namespace beamsense;

TEST(GaussLegendre, IntegratesPolynomialsUpToDegree2nMinus1) {
  for (int n : {1, 2, 5, 16}) {
    const auto rule = gauss_legendre(n);
    ASSERT_EQ(rule.nodes.size(), static_cast<std::size_t>(n));
    for (int k = 0; k <= 2 * n - 1; ++k) {
      double q = 0.0;
      for (int i = 0; i < n; ++i) q += rule.weights[i] * std::pow(rule.nodes[i], k);
      const double exact = k % 2 ? 0.0 : 2.0 / (k + 1);
      EXPECT_NEAR(q, exact, 1e-13) << "n=" << n << " k=" << k;
    }
  }
}

TEST(GaussLegendre, RejectsNonPositiveCount) { EXPECT_THROW(gauss_legendre(0), std::invalid_argument); }

TEST(DiskNodes, MomentsOfUniformDisk) {
  const UncertainPoint p{{3.0, -2.0}, 4.0};
  const DiskNodes d = disk_nodes(p, {});
  double w = 0.0, mx = 0.0, my = 0.0, r2 = 0.0;
  for (std::size_t i = 0; i < d.points.size(); ++i) {
    w += d.weights[i];
    mx += d.weights[i] * d.points[i].x;
    my += d.weights[i] * d.points[i].y;
    r2 += d.weights[i] * std::pow(distance(d.points[i], p.center), 2);
  }
  EXPECT_NEAR(w, 1.0, 1e-14);
  EXPECT_NEAR(mx, 3.0, 1e-12);
  EXPECT_NEAR(my, -2.0, 1e-12);
  // E|X - c|^2 = R^2 / 2 for the uniform disk.
  EXPECT_NEAR(r2, 8.0, 1e-12);
}

TEST(DiskNodes, ZeroRadiusIsSingleNode) {
  const DiskNodes d = disk_nodes({{1.0, 2.0}, 0.0}, {});
  ASSERT_EQ(d.points.size(), 1u);
  EXPECT_EQ(d.points[0], (Vec2{1.0, 2.0}));
  EXPECT_EQ(d.weights[0], 1.0);
}

TEST(UncertainDistance, CertainPointsGiveEuclidean) {
  EXPECT_EQ(uncertain_distance({{0, 0}, 0}, {{3, 4}, 0}), 5.0);
  Rng rng = make_rng(5);
  for (int i = 0; i < 100; ++i) {
    const Vec2 a{uniform(rng, -50, 50), uniform(rng, -50, 50)}, b{uniform(rng, -50, 50), uniform(rng, -50, 50)};
    EXPECT_NEAR(uncertain_distance({a, 0}, {b, 0}), distance(a, b), 1e-12);
  }
}

TEST(UncertainDistance, PointToDiskCenter) {
  // E|X| for X uniform on a disk of radius R is 2R/3.
  EXPECT_NEAR(uncertain_distance({{1, 1}, 0}, {{1, 1}, 3}), 2.0, 1e-12);
}

TEST(UncertainDistance, CoincidentUnitDisks) {
  const double expected = 128.0 / (45.0 * std::numbers::pi);
  EXPECT_NEAR(uncertain_distance({{0, 0}, 1}, {{0, 0}, 1}), expected, 1e-3);
}

TEST(UncertainDistance, FarDisksApproachCenterDistance) {
  const double d = uncertain_distance({{0, 0}, 1}, {{1000, 0}, 1});
  EXPECT_NEAR(d, 1000.0, 1e-3);
  // Second-order expansion: d + E[u_perp^2]/(2d) with per-axis variance R^2/4 per disk.
  EXPECT_NEAR(d, 1000.0 + 0.5 / 2000.0, 1e-8);
}

TEST(UncertainDistance, BitExactSymmetry) {
  Rng rng = make_rng(11);
  for (int i = 0; i < 200; ++i) {
    const UncertainPoint a{{uniform(rng, -20, 20), uniform(rng, -20, 20)}, uniform(rng, 0, 5)};
    const UncertainPoint b{{uniform(rng, -20, 20), uniform(rng, -20, 20)}, uniform(rng, 0, 5)};
    EXPECT_EQ(uncertain_distance(a, b), uncertain_distance(b, a));
  }
}

TEST(UncertainDistance, LowerBounds) {
  Rng rng = make_rng(12);
  for (int i = 0; i < 200; ++i) {
    const UncertainPoint a{{uniform(rng, -20, 20), uniform(rng, -20, 20)}, uniform(rng, 0, 5)};
    const UncertainPoint b{{uniform(rng, -20, 20), uniform(rng, -20, 20)}, uniform(rng, 0, 5)};
    const double d = uncertain_distance(a, b);
    EXPECT_GE(d, 0.0);
    EXPECT_GE(d, distance(a.center, b.center) - (a.radius + b.radius));
  }
}

TEST(UncertainDistance, MonotoneInSeparation) {
  for (double ra : {0.0, 1.0, 3.0}) {
    double prev = -1.0;
    for (double s = 0.0; s <= 30.0; s += 0.25) {
      const double d = uncertain_distance({{0, 0}, ra}, {{s, 0}, 2.0});
      EXPECT_GE(d, prev) << "ra=" << ra << " s=" << s;
      prev = d;
    }
  }
}

TEST(UncertainDistance, RefinementChangesLittleForSeparatedDisks) {
  Rng rng = make_rng(13);
  for (int i = 0; i < 50; ++i) {
    const double ra = uniform(rng, 0, 5), rb = uniform(rng, 0, 5);
    const double sep = ra + rb + uniform(rng, 0.5, 40);
    const UncertainPoint a{{0, 0}, ra}, b{{sep, 0}, rb};
    const double d1 = uncertain_distance(a, b, {16, 32});
    const double d2 = uncertain_distance(a, b, {32, 64});
    EXPECT_LT(std::abs(d1 - d2) / d2, 1e-4);
  }
}

TEST(UncertainDistance, RejectsInvalidPoints) {
  EXPECT_THROW(uncertain_distance({{0, 0}, -1}, {{0, 0}, 0}), std::invalid_argument);
  EXPECT_THROW(uncertain_distance({{NAN, 0}, 0}, {{0, 0}, 0}), std::invalid_argument);
  EXPECT_THROW(uncertain_distance({{0, 0}, INFINITY}, {{0, 0}, 0}), std::invalid_argument);
  EXPECT_THROW(uncertain_distance({{0, 0}, 1}, {{0, 0}, 1}, {0, 32}), std::invalid_argument);
}

TEST(MonteCarlo, CertainPointsAreExact) {
  EXPECT_EQ(uncertain_distance_mc({{0, 0}, 0}, {{3, 4}, 0}, 10, 99), 5.0);
}

TEST(MonteCarlo, CoincidentUnitDisks) {
  const double mc = uncertain_distance_mc({{0, 0}, 1}, {{0, 0}, 1}, 1'000'000, 3);
  EXPECT_NEAR(mc, 0.9054, 0.003);
}

TEST(MonteCarlo, ReproducibleForSeed) {
  const UncertainPoint a{{0, 0}, 2}, b{{3, 1}, 1};
  EXPECT_EQ(uncertain_distance_mc(a, b, 1000, 7), uncertain_distance_mc(a, b, 1000, 7));
  EXPECT_NE(uncertain_distance_mc(a, b, 1000, 7), uncertain_distance_mc(a, b, 1000, 8));
}

TEST(MonteCarlo, AgreesWithQuadratureOnRandomPairs) {
  Rng rng = make_rng(21);
  for (int i = 0; i < 100; ++i) {
    const UncertainPoint a{{0, 0}, uniform(rng, 0, 5)};
    const double ang = uniform(rng, 0, 2 * std::numbers::pi), sep = uniform(rng, 0, 50);
    const UncertainPoint b{{sep * std::cos(ang), sep * std::sin(ang)}, uniform(rng, 0, 5)};
    const McEstimate mc = uncertain_distance_mc_estimate(a, b, 100'000, 1000 + i);
    EXPECT_LE(std::abs(uncertain_distance(a, b) - mc.mean), 3.0 * mc.std_error + 1e-12) << i;
  }
}

TEST(SamplePoint, SupportAndMean) {
  EXPECT_EQ(sample_point({{5, 5}, 0}, 1), (Vec2{5, 5}));
  Rng rng = make_rng(4);
  double sx = 0.0, sy = 0.0;
  const int n = 100'000;
  for (int i = 0; i < n; ++i) {
    const Vec2 p = sample_point({{0, 0}, 2}, rng);
    ASSERT_LE(norm(p), 2.0);
    sx += p.x / 2.0;
    sy += p.y / 2.0;
  }
  EXPECT_NEAR(sx / n, 0.0, 0.01);
  EXPECT_NEAR(sy / n, 0.0, 0.01);
}

TEST(DistanceMatrix, ParallelMatchesSerialBitwise) {
  Rng rng = make_rng(8);
  std::vector<UncertainPoint> pts;
  for (int i = 0; i < 17; ++i) pts.push_back({{uniform(rng, -30, 30), uniform(rng, -30, 30)}, uniform(rng, 0, 4)});
  const auto par = uncertain_distance_matrix(pts, {});
  const auto ser = uncertain_distance_matrix_serial(pts, {});
  EXPECT_EQ(std::vector<double>(par.packed().begin(), par.packed().end()),
            std::vector<double>(ser.packed().begin(), ser.packed().end()));
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = 0; j < pts.size(); ++j) {
      EXPECT_EQ(par(i, j), par(j, i));
      EXPECT_EQ(par(i, j), uncertain_distance(pts[i], pts[j]));
    }
}

TEST(DistanceMatrix, EuclideanHasZeroDiagonal) {
  const std::vector<Vec2> pts{{0, 0}, {3, 4}, {6, 8}};
  const auto m = euclidean_distance_matrix(pts);
  EXPECT_EQ(m(0, 0), 0.0);
  EXPECT_EQ(m(0, 1), 5.0);
  EXPECT_EQ(m(2, 0), 10.0);
}
