#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cfvn/strength.hpp"

namespace cfvn {

enum class Distance { kEuclidean, kEmd };

using Point = std::vector<double>;

// Closed-form 1-D earth mover's distance with bin-center ground distance:
// sum_b |CDF_a(b) - CDF_b(b)| / B.
double emd_1d(std::span<const double> a, std::span<const double> b);
double emd_1d(const HsHistogram& a, const HsHistogram& b);

struct KmeansOptions {
  int k = 1;
  Distance distance = Distance::kEuclidean;
  std::uint64_t seed = 0;
  int max_iters = 50;
};

struct ClusterModel {
  std::vector<Point> centroids;
  Distance distance = Distance::kEuclidean;
  std::uint64_t seed = 0;
  // Cluster of each input point.
  std::vector<int> assignment;
  // Total distortion after each assignment step; non-increasing.
  std::vector<double> distortion;

  // Nearest centroid, ties to the lowest index.
  int assign(std::span<const double> point) const;
  double distance_to(std::span<const double> point, int cluster) const;
};

// Lloyd iteration seeded by farthest-point selection. Euclidean distortion is
// the weighted sum of squared distances; EMD distortion the weighted sum of
// distances. Centroids are per-coordinate weighted means of their members.
// Optional weights give each point a multiplicity.
ClusterModel kmeans(std::span<const Point> points, const KmeansOptions& options, std::span<const double> weights = {});

}  // namespace cfvn
