#pragma once

#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "cfgen/demo/kmeans.hpp"

namespace cfgen {

// Per-cluster members ordered nearest-to-centroid first (ties by id), drawn
// round-robin across clusters. Single consumer; not thread-safe.
class CandidateQueue {
 public:
  CandidateQueue(const Clustering& clustering, std::span<const std::vector<double>> points,
                 const std::set<std::string>& excluded = {});

  // Up to `count` ids: cluster 0's next member, then cluster 1's, ...,
  // skipping exhausted clusters. Ids are never returned twice.
  std::vector<std::string> next_candidates(std::size_t count);

  bool exhausted() const { return remaining_ == 0; }
  std::size_t remaining() const { return remaining_; }
  const std::vector<std::vector<std::string>>& members() const { return members_; }

 private:
  std::vector<std::vector<std::string>> members_;
  std::vector<std::size_t> positions_;
  std::size_t cursor_ = 0;
  std::size_t remaining_ = 0;
};

}  // namespace cfgen
