#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "cfgen/core/models.hpp"
#include "cfgen/core/run_config.hpp"

namespace cfgen {

// Number of top words a threshold covers: ceil(q * W), at least 1, at most W.
std::size_t top_word_count(double threshold, std::size_t word_count);

// Mean over thresholds of p(target|x) - p(target|x minus its top words).
double comprehensiveness(const AttributionResult& attr, std::string_view text,
                         std::string_view target_label, Classifier& classifier,
                         std::span<const double> thresholds);

// Mean over thresholds of p(target|x) - p(target|top words only).
double sufficiency(const AttributionResult& attr, std::string_view text,
                   std::string_view target_label, Classifier& classifier,
                   std::span<const double> thresholds);

// Kendall tau-b between aggregated word scores and leave-one-out drops.
// Throws MetricError when undefined (fewer than 2 words or a constant side).
double tau_loo(const AttributionResult& attr, std::string_view text, std::string_view target_label,
               Classifier& classifier);

struct FaithfulnessCell {
  double comprehensiveness = 0.0;
  double sufficiency = 0.0;
  double tau_loo = 0.0;
  std::size_t n_instances = 0;
  // Instances whose tau was undefined (excluded from the tau mean only).
  std::size_t tau_excluded = 0;
  bool tau_defined() const { return n_instances > tau_excluded; }
};

struct FaithfulnessReport {
  std::string dataset;
  std::map<std::string, FaithfulnessCell> methods;
};

// Attributes each instance towards its predicted label with every method and
// averages the three metrics per method.
FaithfulnessReport evaluate_faithfulness(std::span<const Instance> instances,
                                         std::span<const AttributionMethod> methods,
                                         Classifier& classifier, RemoteAttributor* remote,
                                         const RunConfig& config);

nlohmann::json to_json(const FaithfulnessReport& report);
FaithfulnessReport faithfulness_from_json(const nlohmann::json& tree);

// Metric orientation: true when larger values are better. Throws MetricError
// for unknown metric names. Known: slfr, ppl, ts, comprehensiveness,
// sufficiency, tau_loo.
bool higher_is_better(std::string_view metric);

// Kendall tau between the method orderings induced by two metrics, each
// oriented so that larger means better.
double correlate_quality_faithfulness(const std::map<std::string, double>& quality,
                                      std::string_view quality_metric,
                                      const std::map<std::string, double>& faithfulness,
                                      std::string_view faithfulness_metric);

}  // namespace cfgen
