#include "cfgen/demo/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "cfgen/core/random.hpp"
#include "cfgen/simd/kernels.hpp"

namespace cfgen {

namespace {

struct Assignment {
  std::vector<int> cluster;
  std::vector<double> distance;
  double inertia = 0.0;
};

Assignment assign(std::span<const std::vector<double>> points,
                  const std::vector<std::vector<double>>& centroids) {
  Assignment out;
  out.cluster.resize(points.size());
  out.distance.resize(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int best_c = 0;
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      const double d = simd::squared_l2(points[i], centroids[c]);
      if (d < best) {
        best = d;
        best_c = static_cast<int>(c);
      }
    }
    out.cluster[i] = best_c;
    out.distance[i] = best;
  }
  for (double d : out.distance) out.inertia += d;
  return out;
}

}  // namespace

std::vector<std::size_t> Clustering::cluster_sizes() const {
  std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
  for (int c : assignments) ++sizes[static_cast<std::size_t>(c)];
  return sizes;
}

int Clustering::cluster_of(const std::string& id) const {
  const auto it = std::find(ids.begin(), ids.end(), id);
  if (it == ids.end()) throw std::out_of_range("no clustered instance '" + id + "'");
  return assignments[static_cast<std::size_t>(it - ids.begin())];
}

std::vector<std::size_t> kmeans_plus_plus(std::span<const std::vector<double>> points, int k,
                                          std::uint64_t seed) {
  const std::size_t n = points.size();
  Rng rng(seed);
  std::vector<std::size_t> chosen{rng.index(n)};
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = simd::squared_l2(points[i], points[chosen[0]]);
  while (chosen.size() < static_cast<std::size_t>(k)) {
    double total = 0.0;
    for (double d : d2) total += d;
    std::size_t pick = 0;
    if (total <= 0.0) {
      // All remaining mass sits on existing centres; take the first unused point.
      while (std::find(chosen.begin(), chosen.end(), pick) != chosen.end()) ++pick;
    } else {
      const double u = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (u < acc && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
    }
    chosen.push_back(pick);
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], simd::squared_l2(points[i], points[pick]));
    }
  }
  return chosen;
}

Clustering kmeans(std::span<const std::string> ids, std::span<const std::vector<double>> points,
                  int k, std::uint64_t seed, int max_iter) {
  const std::size_t n = points.size();
  if (ids.size() != n) throw std::invalid_argument("kmeans: ids and points differ in length");
  if (k < 1) throw std::invalid_argument("kmeans: k must be >= 1");
  if (static_cast<std::size_t>(k) > n) {
    throw std::invalid_argument("kmeans: k=" + std::to_string(k) + " exceeds the " +
                                std::to_string(n) + " points");
  }
  const std::size_t dim = points[0].size();
  for (const auto& p : points) {
    if (p.size() != dim) throw std::invalid_argument("kmeans: points differ in dimension");
  }

  Clustering out;
  out.k = k;
  out.ids.assign(ids.begin(), ids.end());
  for (std::size_t index : kmeans_plus_plus(points, k, seed)) out.centroids.push_back(points[index]);

  Assignment current = assign(points, out.centroids);
  out.inertia_trace.push_back(current.inertia);
  for (int iter = 1; iter <= max_iter; ++iter) {
    // Update step.
    std::vector<std::vector<double>> sums(static_cast<std::size_t>(k), std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(current.cluster[i]);
      simd::axpy(1.0, points[i], sums[c]);
      ++counts[c];
    }
    for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
      if (counts[c] == 0) continue;
      for (std::size_t j = 0; j < dim; ++j) sums[c][j] /= static_cast<double>(counts[c]);
      out.centroids[c] = std::move(sums[c]);
    }

    Assignment next = assign(points, out.centroids);
    // Reseed empty clusters at the point currently farthest from its centroid.
    bool reseeded = false;
    for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
      if (std::find(next.cluster.begin(), next.cluster.end(), static_cast<int>(c)) !=
          next.cluster.end()) {
        continue;
      }
      std::size_t far = 0;
      for (std::size_t i = 1; i < n; ++i) {
        if (next.distance[i] > next.distance[far]) far = i;
      }
      out.centroids[c] = points[far];
      next.cluster[far] = static_cast<int>(c);
      next.distance[far] = 0.0;
      reseeded = true;
      out.reseeds.push_back("iteration " + std::to_string(iter) + ": cluster " +
                            std::to_string(c) + " <- " + out.ids[far]);
    }
    if (reseeded) {
      next.inertia = 0.0;
      for (double d : next.distance) next.inertia += d;
    }
    out.iterations = iter;
    out.inertia_trace.push_back(next.inertia);
    const bool fixpoint = next.cluster == current.cluster;
    current = std::move(next);
    if (fixpoint) {
      out.converged = true;
      break;
    }
  }
  out.assignments = std::move(current.cluster);
  out.inertia = current.inertia;
  return out;
}

}  // namespace cfgen
