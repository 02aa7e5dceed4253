#include "cfgen/pipeline/demonstrations.hpp"

#include <map>
#include <stdexcept>

#include "cfgen/core/errors.hpp"
#include "cfgen/core/hash.hpp"
#include "cfgen/core/parallel.hpp"
#include "cfgen/demo/candidates.hpp"
#include "cfgen/demo/report.hpp"

namespace cfgen {

DemonstrationPool build_demonstration_pool(std::span<const Instance> dataset,
                                           const PipelineContext& ctx, std::size_t target,
                                           const std::set<std::string>& excluded) {
  const RunConfig& config = ctx.config;
  if (ctx.models.embedder == nullptr) throw ConfigError("models.embedder: not configured");
  if (dataset.empty()) throw DatasetError("dataset is empty");
  if (static_cast<std::size_t>(config.num_clusters) > dataset.size()) {
    throw ConfigError("demonstrations.num_clusters: " + std::to_string(config.num_clusters) +
                      " exceeds the dataset size " + std::to_string(dataset.size()));
  }

  DemonstrationPool pool;
  pool.requested = target;
  std::vector<std::string> ids;
  std::map<std::string, const Instance*> by_id;
  for (const auto& instance : dataset) {
    ids.push_back(instance.id);
    by_id[instance.id] = &instance;
  }
  pool.embeddings.resize(dataset.size());
  parallel_for(dataset.size(), config.workers,
               [&](std::size_t i) { pool.embeddings[i] = ctx.models.embedder->embed(dataset[i].text); });

  try {
    pool.clustering = kmeans(ids, pool.embeddings, config.num_clusters,
                             derive_seed(config.seed, "kmeans"), config.kmeans_max_iter);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("demonstrations: ") + e.what());
  }

  CandidateQueue queue(pool.clustering, pool.embeddings, excluded);
  std::map<std::string, std::pair<int, int>> placement;
  const auto& members = queue.members();
  for (std::size_t c = 0; c < members.size(); ++c) {
    for (std::size_t r = 0; r < members[c].size(); ++r) {
      placement[members[c][r]] = {static_cast<int>(c), static_cast<int>(r)};
    }
  }

  while (pool.demonstrations.size() < target) {
    const auto batch = queue.next_candidates(static_cast<std::size_t>(config.candidates_per_round));
    if (batch.empty()) {
      pool.exhausted = true;
      break;
    }
    ++pool.rounds;
    std::vector<CounterfactualRecord> edits(batch.size());
    std::vector<FlipVerdict> verdicts(batch.size(), FlipVerdict::kUnverified);
    parallel_for(batch.size(), config.workers, [&](std::size_t i) {
      edits[i] = zerocf_generate(*by_id.at(batch[i]), ctx);
      if (config.flip_verification && edits[i].succeeded() && !edits[i].no_edit) {
        verdicts[i] = verify_flip(edits[i].instance.text, edits[i].counterfactual_text,
                                  *ctx.models.classifier);
      }
    });
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const CounterfactualRecord& edit = edits[i];
      std::string outcome;
      if (!edit.succeeded()) {
        outcome = "failed";
      } else if (edit.no_edit) {
        outcome = "no-edit";
      } else if (config.flip_verification) {
        ++pool.verify_calls;
        outcome = verdicts[i] == FlipVerdict::kAccepted ? "accepted" : "rejected";
      } else {
        outcome = "kept";
      }
      pool.candidates.push_back({batch[i], outcome});
      if ((outcome == "accepted" || outcome == "kept") && pool.demonstrations.size() < target) {
        const auto [cluster, rank] = placement.at(batch[i]);
        pool.demonstrations.push_back(
            {batch[i], edit.instance.text, edit.counterfactual_text, cluster, rank});
      }
    }
  }
  if (queue.exhausted() && pool.demonstrations.size() < target) pool.exhausted = true;
  if (pool.demonstrations.empty()) {
    throw GenerationError("no demonstration could be built: all " +
                          std::to_string(pool.candidates.size()) + " candidates were rejected");
  }
  return pool;
}

DemonstrationPool build_demonstrations(std::span<const Instance> dataset, const Instance& query,
                                       const PipelineContext& ctx) {
  return build_demonstration_pool(dataset, ctx,
                                  static_cast<std::size_t>(ctx.config.demos_per_instance),
                                  {query.id});
}

std::vector<Demonstration> demonstrations_for(const DemonstrationPool& pool,
                                              const std::string& query_id, std::size_t count) {
  std::vector<Demonstration> out;
  for (const auto& demo : pool.demonstrations) {
    if (out.size() >= count) break;
    if (demo.instance_id != query_id) out.push_back(demo);
  }
  return out;
}

nlohmann::json summary_json(const DemonstrationPool& pool) {
  std::map<std::string, std::size_t> outcomes;
  for (const auto& c : pool.candidates) ++outcomes[c.outcome];
  return {{"requested", pool.requested},
          {"built", pool.demonstrations.size()},
          {"shortfall", pool.shortfall()},
          {"rounds", pool.rounds},
          {"candidates_consumed", pool.candidates.size()},
          {"candidate_outcomes", outcomes},
          {"verify_calls", pool.verify_calls},
          {"clustering", clustering_summary(pool.clustering)}};
}

}  // namespace cfgen
