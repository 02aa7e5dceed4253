#pragma once

#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cfgen/demo/kmeans.hpp"
#include "cfgen/pipeline/generate.hpp"

namespace cfgen {

struct CandidateOutcome {
  std::string id;
  // accepted, rejected, kept (verification off), failed, no-edit
  std::string outcome;
};

struct DemonstrationPool {
  std::vector<Demonstration> demonstrations;
  std::size_t requested = 0;
  std::size_t rounds = 0;
  std::size_t verify_calls = 0;
  bool exhausted = false;
  std::vector<CandidateOutcome> candidates;
  Clustering clustering;
  std::vector<std::vector<double>> embeddings;

  bool shortfall() const { return demonstrations.size() < requested; }
};

// Embeds and clusters `dataset`, then draws candidates_per_round ids per round
// from the centroid-proximity queue, generates ZeroCF edits for them and keeps
// the verified (or, with verification off, all edited) pairs until `target`
// demonstrations exist or the pool runs dry. A round is always processed to
// the end and the result truncated to `target`. Throws GenerationError when
// no demonstration could be built.
DemonstrationPool build_demonstration_pool(std::span<const Instance> dataset,
                                           const PipelineContext& ctx, std::size_t target,
                                           const std::set<std::string>& excluded = {});

// Demonstrations for one query: the query itself never takes part.
DemonstrationPool build_demonstrations(std::span<const Instance> dataset, const Instance& query,
                                       const PipelineContext& ctx);

// The first `count` pool entries that are not `query_id`.
std::vector<Demonstration> demonstrations_for(const DemonstrationPool& pool,
                                              const std::string& query_id, std::size_t count);

nlohmann::json summary_json(const DemonstrationPool& pool);

}  // namespace cfgen
