#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace cfgen {

struct Clustering {
  int k = 0;
  // Parallel to the input order.
  std::vector<std::string> ids;
  std::vector<int> assignments;
  std::vector<std::vector<double>> centroids;
  double inertia = 0.0;
  // Inertia after every assignment step, first entry from the seeded centroids.
  std::vector<double> inertia_trace;
  int iterations = 0;
  bool converged = false;
  // One entry per empty-cluster reseed: "iteration I: cluster C <- id".
  std::vector<std::string> reseeds;

  std::vector<std::size_t> cluster_sizes() const;
  int cluster_of(const std::string& id) const;
};

// Lloyd iterations from a k-means++ start drawn with `seed`. Stops at an
// assignment fixpoint or after max_iter updates. Distances are Euclidean;
// ties go to the lower cluster index. Throws std::invalid_argument when
// k < 1, k > n, or the vectors disagree in dimension.
Clustering kmeans(std::span<const std::string> ids, std::span<const std::vector<double>> points,
                  int k, std::uint64_t seed, int max_iter);

// k-means++ seeding alone (exposed for tests).
std::vector<std::size_t> kmeans_plus_plus(std::span<const std::vector<double>> points, int k,
                                          std::uint64_t seed);

}  // namespace cfgen
