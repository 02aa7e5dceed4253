#include "cfgen/demo/candidates.hpp"

#include <algorithm>
#include <stdexcept>
#include <utility>

#include "cfgen/simd/kernels.hpp"

namespace cfgen {

CandidateQueue::CandidateQueue(const Clustering& clustering,
                               std::span<const std::vector<double>> points,
                               const std::set<std::string>& excluded) {
  if (points.size() != clustering.ids.size()) {
    throw std::invalid_argument("CandidateQueue: points do not match the clustering");
  }
  const auto k = static_cast<std::size_t>(clustering.k);
  std::vector<std::vector<std::pair<double, std::string>>> ranked(k);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const std::string& id = clustering.ids[i];
    if (excluded.contains(id)) continue;
    const auto c = static_cast<std::size_t>(clustering.assignments[i]);
    ranked[c].emplace_back(simd::squared_l2(points[i], clustering.centroids[c]), id);
  }
  members_.resize(k);
  positions_.assign(k, 0);
  for (std::size_t c = 0; c < k; ++c) {
    std::sort(ranked[c].begin(), ranked[c].end());
    for (auto& [distance, id] : ranked[c]) members_[c].push_back(std::move(id));
    remaining_ += members_[c].size();
  }
}

std::vector<std::string> CandidateQueue::next_candidates(std::size_t count) {
  std::vector<std::string> out;
  while (out.size() < count && remaining_ > 0) {
    const std::size_t c = cursor_;
    cursor_ = (cursor_ + 1) % members_.size();
    if (positions_[c] >= members_[c].size()) continue;
    out.push_back(members_[c][positions_[c]++]);
    --remaining_;
  }
  return out;
}

}  // namespace cfgen
