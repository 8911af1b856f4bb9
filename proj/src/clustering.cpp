#include "beamsense/clustering.hpp"

#include <limits>
#include <stdexcept>
#include <string>

namespace beamsense {

namespace {

void check_cluster_count(std::size_t n_points, std::size_t n_clusters) {
  if (n_clusters == 0) throw std::invalid_argument("clustering: n_clusters must be >= 1");
  if (n_clusters > n_points) {
    throw std::invalid_argument("clustering: n_clusters (" + std::to_string(n_clusters) +
                                ") exceeds number of points (" + std::to_string(n_points) + ")");
  }
}

void check_iters(std::size_t max_iters) {
  if (max_iters < 1) throw std::invalid_argument("clustering: max_iters must be >= 1");
}

// Nearest center by `dist(point, cluster)`, ties to the lowest cluster index.
template <typename Dist>
std::vector<std::size_t> assign_nearest(std::size_t n_points, std::size_t n_clusters, Dist&& dist) {
  std::vector<std::size_t> out(n_points, 0);
  for (std::size_t p = 0; p < n_points; ++p) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n_clusters; ++j) {
      const double d = dist(p, j);
      if (d < best) {
        best = d;
        out[p] = j;
      }
    }
  }
  return out;
}

// An empty cluster takes the point farthest from its own center, drawn from
// clusters that can spare a member. Ties go to the lowest point index.
template <typename Dist>
void repair_empty(std::vector<std::size_t>& assign, std::size_t n_clusters, Dist&& dist) {
  std::vector<std::size_t> sizes(n_clusters, 0);
  for (std::size_t c : assign) ++sizes[c];
  for (std::size_t j = 0; j < n_clusters; ++j) {
    if (sizes[j] != 0) continue;
    std::size_t pick = assign.size();
    double worst = -1.0;
    for (std::size_t p = 0; p < assign.size(); ++p) {
      if (sizes[assign[p]] < 2) continue;
      const double d = dist(p, assign[p]);
      if (d > worst) {
        worst = d;
        pick = p;
      }
    }
    --sizes[assign[pick]];
    assign[pick] = j;
    sizes[j] = 1;
  }
}

std::vector<Vec2> cluster_means(std::span<const Vec2> pts, std::span<const std::size_t> assign,
                                std::size_t n_clusters) {
  std::vector<Vec2> sum(n_clusters);
  std::vector<std::size_t> count(n_clusters, 0);
  for (std::size_t p = 0; p < pts.size(); ++p) {
    sum[assign[p]] = sum[assign[p]] + pts[p];
    ++count[assign[p]];
  }
  for (std::size_t j = 0; j < n_clusters; ++j) {
    sum[j] = (1.0 / static_cast<double>(count[j])) * sum[j];
  }
  return sum;
}

std::vector<Vec2> centers_of(std::span<const UncertainPoint> pts) {
  std::vector<Vec2> out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.push_back(p.center);
  return out;
}

// Shared Lloyd loop; `point_to_centroid` is the assignment distance.
template <typename Dist, typename Objective>
ClusteringResult lloyd(std::span<const Vec2> positions, std::vector<Vec2> centroids,
                       std::size_t max_iters, Dist&& point_to_centroid, Objective&& objective) {
  const std::size_t n_clusters = centroids.size();
  ClusteringResult res;
  for (std::size_t iter = 1; iter <= max_iters; ++iter) {
    auto dist = [&](std::size_t p, std::size_t j) { return point_to_centroid(p, centroids[j]); };
    std::vector<std::size_t> assign = assign_nearest(positions.size(), n_clusters, dist);
    repair_empty(assign, n_clusters, dist);
    std::vector<Vec2> next = cluster_means(positions, assign, n_clusters);
    res.assignments = std::move(assign);
    res.iterations = iter;
    const bool unchanged = next == centroids;
    centroids = std::move(next);
    res.objective_history.push_back(objective(res.assignments, centroids));
    if (unchanged) {
      res.converged = true;
      break;
    }
  }
  res.centers = std::move(centroids);
  return res;
}

}  // namespace

std::vector<std::vector<std::size_t>> ClusteringResult::members() const {
  std::vector<std::vector<std::size_t>> out(centers.size());
  for (std::size_t p = 0; p < assignments.size(); ++p) out[assignments[p]].push_back(p);
  return out;
}

std::vector<std::size_t> init_centers(const DistanceMatrix& metric, std::size_t n_clusters) {
  const std::size_t n = metric.size();
  check_cluster_count(n, n_clusters);

  std::size_t global_medoid = 0;
  double best_sum = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += metric(i, j);
    if (s < best_sum) {
      best_sum = s;
      global_medoid = i;
    }
  }
  std::size_t first = 0;
  double nearest = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    if (metric(global_medoid, i) < nearest) {
      nearest = metric(global_medoid, i);
      first = i;
    }
  }

  std::vector<std::size_t> chosen{first};
  std::vector<bool> taken(n, false);
  taken[first] = true;
  std::vector<double> min_dist(n);
  for (std::size_t i = 0; i < n; ++i) min_dist[i] = metric(first, i);
  while (chosen.size() < n_clusters) {
    std::size_t next = n;
    double far = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!taken[i] && min_dist[i] > far) {
        far = min_dist[i];
        next = i;
      }
    }
    chosen.push_back(next);
    taken[next] = true;
    for (std::size_t i = 0; i < n; ++i) min_dist[i] = std::min(min_dist[i], metric(next, i));
  }
  return chosen;
}

double medoid_objective(const DistanceMatrix& metric, std::span<const std::size_t> assignments,
                        std::span<const std::size_t> medoids) {
  double total = 0.0;
  for (std::size_t p = 0; p < assignments.size(); ++p) total += metric(p, medoids[assignments[p]]);
  return total;
}

ClusteringResult medoid_clustering(const DistanceMatrix& metric, std::size_t n_clusters,
                                   std::size_t max_iters) {
  check_iters(max_iters);
  const std::size_t n = metric.size();
  std::vector<std::size_t> medoids = init_centers(metric, n_clusters);

  ClusteringResult res;
  for (std::size_t iter = 1; iter <= max_iters; ++iter) {
    auto dist = [&](std::size_t p, std::size_t j) { return metric(p, medoids[j]); };
    std::vector<std::size_t> assign = assign_nearest(n, n_clusters, dist);
    repair_empty(assign, n_clusters, dist);

    // c_j = argmin_{p in C_j} sum_{p' in C_j} d(p, p'), ties to lowest p.
    std::vector<std::vector<std::size_t>> groups(n_clusters);
    for (std::size_t p = 0; p < n; ++p) groups[assign[p]].push_back(p);
    std::vector<std::size_t> next(n_clusters);
    for (std::size_t j = 0; j < n_clusters; ++j) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t p : groups[j]) {
        double s = 0.0;
        for (std::size_t q : groups[j]) s += metric(p, q);
        if (s < best) {
          best = s;
          next[j] = p;
        }
      }
    }

    res.assignments = std::move(assign);
    res.iterations = iter;
    res.objective_history.push_back(medoid_objective(metric, res.assignments, next));
    const bool unchanged = next == medoids;
    medoids = std::move(next);
    if (unchanged) {
      res.converged = true;
      break;
    }
  }
  res.medoids = std::move(medoids);
  return res;
}

ClusteringResult uk_medoids(std::span<const UncertainPoint> points, std::size_t n_clusters,
                            const ClusteringOptions& opts) {
  check_cluster_count(points.size(), n_clusters);
  check_iters(opts.max_iters);
  const DistanceMatrix metric = uncertain_distance_matrix(points, opts.quadrature);
  ClusteringResult res = medoid_clustering(metric, n_clusters, opts.max_iters);
  for (std::size_t m : res.medoids) res.centers.push_back(points[m].center);
  return res;
}

ClusteringResult k_medoids(std::span<const Vec2> points, std::size_t n_clusters,
                           const ClusteringOptions& opts) {
  check_cluster_count(points.size(), n_clusters);
  check_iters(opts.max_iters);
  const DistanceMatrix metric = euclidean_distance_matrix(points);
  ClusteringResult res = medoid_clustering(metric, n_clusters, opts.max_iters);
  for (std::size_t m : res.medoids) res.centers.push_back(points[m]);
  return res;
}

ClusteringResult uk_means(std::span<const UncertainPoint> points, std::size_t n_clusters,
                          const ClusteringOptions& opts) {
  check_cluster_count(points.size(), n_clusters);
  check_iters(opts.max_iters);
  const DistanceMatrix metric = uncertain_distance_matrix(points, opts.quadrature);
  const std::vector<std::size_t> seeds = init_centers(metric, n_clusters);

  std::vector<DiskNodes> nodes;
  nodes.reserve(points.size());
  for (const auto& p : points) nodes.push_back(disk_nodes(p, opts.quadrature));
  const std::vector<Vec2> positions = centers_of(points);

  std::vector<Vec2> init;
  for (std::size_t s : seeds) init.push_back(positions[s]);

  auto expected = [&](std::size_t p, Vec2 c) {
    const DiskNodes exact{{c}, {1.0}};
    return expected_distance(nodes[p], exact);
  };
  auto objective = [&](const std::vector<std::size_t>& assign, const std::vector<Vec2>& cents) {
    double total = 0.0;
    for (std::size_t p = 0; p < assign.size(); ++p) total += expected(p, cents[assign[p]]);
    return total;
  };
  return lloyd(positions, std::move(init), opts.max_iters, expected, objective);
}

ClusteringResult k_means(std::span<const Vec2> points, std::size_t n_clusters,
                         const ClusteringOptions& opts) {
  check_cluster_count(points.size(), n_clusters);
  check_iters(opts.max_iters);
  const DistanceMatrix metric = euclidean_distance_matrix(points);
  std::vector<Vec2> init;
  for (std::size_t s : init_centers(metric, n_clusters)) init.push_back(points[s]);

  auto dist = [&](std::size_t p, Vec2 c) { return distance(points[p], c); };
  auto wcss = [&](const std::vector<std::size_t>& assign, const std::vector<Vec2>& cents) {
    double total = 0.0;
    for (std::size_t p = 0; p < assign.size(); ++p) {
      const Vec2 d = points[p] - cents[assign[p]];
      total += d.x * d.x + d.y * d.y;
    }
    return total;
  };
  return lloyd(points, std::move(init), opts.max_iters, dist, wcss);
}

std::vector<std::size_t> canonical_labels(std::span<const std::size_t> assignments) {
  std::vector<std::size_t> map;
  std::vector<std::size_t> out(assignments.size());
  constexpr std::size_t kUnset = std::numeric_limits<std::size_t>::max();
  for (std::size_t p = 0; p < assignments.size(); ++p) {
    const std::size_t c = assignments[p];
    if (c >= map.size()) map.resize(c + 1, kUnset);
    if (map[c] == kUnset) {
      std::size_t next = 0;
      for (std::size_t m : map)
        if (m != kUnset) ++next;
      map[c] = next;
    }
    out[p] = map[c];
  }
  return out;
}

}  // namespace beamsense
