#include "cfvn/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "cfvn/error.hpp"

namespace cfvn {
namespace {

double squared_euclidean(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double l1(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s;
}

Point cumulative(std::span<const double> h) {
  Point c(h.size());
  double run = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) c[i] = run += h[i];
  return c;
}

// Working-space distance: squared Euclidean on raw points, or L1 on CDFs
// (which is B times the 1-D EMD).
struct Metric {
  Distance kind;
  double operator()(std::span<const double> a, std::span<const double> b) const {
    return kind == Distance::kEmd ? l1(a, b) / static_cast<double>(a.size()) : squared_euclidean(a, b);
  }
};

int nearest(const std::vector<Point>& centroids, std::span<const double> p, const Metric& metric, double* best_out) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = metric(p, centroids[c]);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  if (best_out) *best_out = best_d;
  return best;
}

double assign_all(const std::vector<Point>& space, std::span<const double> w, const std::vector<Point>& centroids,
                  const Metric& metric, std::vector<int>& out) {
  out.resize(space.size());
  double total = 0.0;
  for (std::size_t i = 0; i < space.size(); ++i) {
    double d = 0.0;
    out[i] = nearest(centroids, space[i], metric, &d);
    total += w[i] * d;
  }
  return total;
}

}  // namespace

double emd_1d(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidInput("emd_1d: histograms have different bin counts");
  if (a.empty()) throw InvalidInput("emd_1d: empty histogram");
  double ca = 0.0, cb = 0.0, s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ca += a[i];
    cb += b[i];
    s += std::abs(ca - cb);
  }
  return s / static_cast<double>(a.size());
}

double emd_1d(const HsHistogram& a, const HsHistogram& b) { return emd_1d(a.bins, b.bins); }

int ClusterModel::assign(std::span<const double> point) const {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = distance_to(point, static_cast<int>(c));
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

double ClusterModel::distance_to(std::span<const double> point, int cluster) const {
  const Point& c = centroids.at(static_cast<std::size_t>(cluster));
  if (point.size() != c.size()) throw InvalidInput("point dimension does not match centroids");
  return distance == Distance::kEmd ? emd_1d(point, c) : squared_euclidean(point, c);
}

ClusterModel kmeans(std::span<const Point> points, const KmeansOptions& options, std::span<const double> weights) {
  const int k = options.k;
  if (k < 1) throw InvalidInput("kmeans: k must be at least 1");
  if (points.empty()) throw InvalidInput("kmeans: no points");
  if (!weights.empty() && weights.size() != points.size()) {
    throw InvalidInput("kmeans: weight count does not match point count");
  }
  const std::size_t dim = points.front().size();
  for (const Point& p : points) {
    if (p.size() != dim) throw InvalidInput("kmeans: points have mixed dimensions");
  }
  const std::set<Point> distinct(points.begin(), points.end());
  if (static_cast<std::size_t>(k) > distinct.size()) {
    throw InvalidInput("kmeans: k = " + std::to_string(k) + " exceeds the " + std::to_string(distinct.size()) +
                       " distinct points");
  }

  const std::size_t n = points.size();
  std::vector<double> w(weights.begin(), weights.end());
  if (w.empty()) w.assign(n, 1.0);
  const Metric metric{options.distance};
  std::vector<Point> space;
  space.reserve(n);
  for (const Point& p : points) {
    space.push_back(options.distance == Distance::kEmd ? cumulative(p) : p);
  }

  // Farthest-point seeding: a random first centroid, then repeatedly the point
  // farthest from every chosen centroid.
  std::mt19937_64 rng(options.seed);
  std::vector<Point> centroids;
  centroids.reserve(static_cast<std::size_t>(k));
  std::size_t first = static_cast<std::size_t>(rng() % n);
  centroids.push_back(space[first]);
  std::vector<double> min_d(n);
  for (std::size_t i = 0; i < n; ++i) min_d[i] = metric(space[i], centroids[0]);
  while (centroids.size() < static_cast<std::size_t>(k)) {
    const auto far =
        static_cast<std::size_t>(std::distance(min_d.begin(), std::max_element(min_d.begin(), min_d.end())));
    centroids.push_back(space[far]);
    for (std::size_t i = 0; i < n; ++i) min_d[i] = std::min(min_d[i], metric(space[i], centroids.back()));
  }

  ClusterModel model;
  model.distance = options.distance;
  model.seed = options.seed;
  std::vector<int> assignment;
  double distortion = assign_all(space, w, centroids, metric, assignment);
  model.distortion.push_back(distortion);

  std::vector<int> next_assignment;
  for (int iter = 0; iter < options.max_iters; ++iter) {
    std::vector<Point> next(static_cast<std::size_t>(k), Point(dim, 0.0));
    std::vector<double> mass(static_cast<std::size_t>(k), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(assignment[i]);
      mass[c] += w[i];
      for (std::size_t d = 0; d < dim; ++d) next[c][d] += w[i] * space[i][d];
    }
    for (std::size_t c = 0; c < next.size(); ++c) {
      if (mass[c] > 0.0) {
        for (double& x : next[c]) x /= mass[c];
      }
    }
    // Empty clusters take the member farthest from the centroid of the
    // heaviest cluster.
    std::vector<int> owner = assignment;
    for (std::size_t c = 0; c < next.size(); ++c) {
      if (mass[c] > 0.0) continue;
      const auto heavy =
          static_cast<std::size_t>(std::distance(mass.begin(), std::max_element(mass.begin(), mass.end())));
      std::size_t far = n;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (static_cast<std::size_t>(owner[i]) != heavy) continue;
        const double d = metric(space[i], next[heavy]);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      if (far == n) continue;
      next[c] = space[far];
      mass[c] = w[far];
      mass[heavy] -= w[far];
      owner[far] = static_cast<int>(c);
    }

    const double next_distortion = assign_all(space, w, next, metric, next_assignment);
    // Mean centroids are not L1 minimizers, so an EMD step can overshoot; keep
    // the last model that did not increase distortion.
    if (next_distortion > distortion) break;
    centroids = std::move(next);
    const bool stable = next_assignment == assignment;
    assignment.swap(next_assignment);
    distortion = next_distortion;
    model.distortion.push_back(distortion);
    if (stable) break;
  }

  if (options.distance == Distance::kEmd) {
    for (Point& c : centroids) {
      double prev = 0.0;
      for (double& x : c) {
        const double cum = x;
        x = cum - prev;
        prev = cum;
      }
    }
  }
  model.centroids = std::move(centroids);
  model.assignment = std::move(assignment);
  return model;
}

}  // namespace cfvn
