#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "beamsense/geometry.hpp"

namespace beamsense {

struct ClusteringResult {
  // Cluster index per input point.
  std::vector<std::size_t> assignments;
  // Representative position per cluster: the medoid's center for medoid
  // methods, the centroid otherwise.
  std::vector<Vec2> centers;
  // Point index of each medoid; empty for centroid methods.
  std::vector<std::size_t> medoids;
  std::size_t iterations = 0;
  bool converged = false;
  // Objective after each iteration: total within-cluster distance for
  // medoid methods, within-cluster sum of squares for k-means, total
  // expected distance to centroids for UK-means.
  std::vector<double> objective_history;

  std::size_t n_clusters() const { return centers.size(); }
  std::vector<std::vector<std::size_t>> members() const;
};

struct ClusteringOptions {
  std::size_t max_iters = 100;
  QuadratureSpec quadrature{};
};

/// Greedy max-min seeding: the first center is the lowest-index point nearest
/// the global medoid; each further center maximizes its minimum distance to
/// those already chosen. Ties go to the lowest index.
std::vector<std::size_t> init_centers(const DistanceMatrix& metric, std::size_t n_clusters);

/// Alternating medoid clustering over an arbitrary precomputed metric.
ClusteringResult medoid_clustering(const DistanceMatrix& metric, std::size_t n_clusters,
                                   std::size_t max_iters);

/// UK-medoids: medoid clustering under the uncertain distance, whose matrix
/// is computed once per call.
ClusteringResult uk_medoids(std::span<const UncertainPoint> points, std::size_t n_clusters,
                            const ClusteringOptions& opts = {});

/// Plain K-medoids on exact positions with Euclidean distance.
ClusteringResult k_medoids(std::span<const Vec2> points, std::size_t n_clusters,
                           const ClusteringOptions& opts = {});

/// UK-means: assignment by expected distance to exact centroids; centroids
/// are means of the expected positions (disk centers).
ClusteringResult uk_means(std::span<const UncertainPoint> points, std::size_t n_clusters,
                          const ClusteringOptions& opts = {});

/// Lloyd's k-means on exact positions.
ClusteringResult k_means(std::span<const Vec2> points, std::size_t n_clusters,
                         const ClusteringOptions& opts = {});

/// Sum of metric distances from each point to its cluster's medoid.
double medoid_objective(const DistanceMatrix& metric, std::span<const std::size_t> assignments,
                        std::span<const std::size_t> medoids);

/// Relabel clusters so labels appear in order of each cluster's smallest
/// member index; used to compare partitions.
std::vector<std::size_t> canonical_labels(std::span<const std::size_t> assignments);

}  // namespace beamsense
