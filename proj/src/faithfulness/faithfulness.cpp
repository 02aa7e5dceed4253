#include "cfgen/faithfulness/faithfulness.hpp"

#include <cmath>

#include "cfgen/attribution/important_words.hpp"
#include "cfgen/attribution/occlusion.hpp"
#include "cfgen/attribution/perturbation.hpp"
#include "cfgen/core/errors.hpp"
#include "cfgen/core/hash.hpp"
#include "cfgen/core/text.hpp"
#include "cfgen/faithfulness/kendall.hpp"

namespace cfgen {

namespace {

void check_thresholds(std::span<const double> thresholds) {
  if (thresholds.empty()) throw ConfigError("faithfulness.thresholds: must not be empty");
  for (double q : thresholds) {
    if (!(q > 0.0 && q <= 1.0)) {
      throw ConfigError("faithfulness.thresholds: " + std::to_string(q) + " is outside (0, 1]");
    }
  }
}

// Words ranked by score, unscored words last in index order.
std::vector<std::size_t> full_ranking(const AttributionResult& attr, std::size_t word_count) {
  std::vector<std::size_t> order = rank_words(attr, word_count);
  std::vector<bool> listed(word_count, false);
  for (std::size_t i : order) listed[i] = true;
  for (std::size_t i = 0; i < word_count; ++i) {
    if (!listed[i]) order.push_back(i);
  }
  return order;
}

// keep_top=false drops the top words; true keeps only them.
double probability_change(const AttributionResult& attr, std::string_view text,
                          std::string_view target_label, Classifier& classifier,
                          std::span<const double> thresholds, bool keep_top) {
  check_thresholds(thresholds);
  const std::vector<std::string> words = normalized_word_tokens(text);
  if (words.empty()) throw MetricError("faithfulness undefined for an empty text");
  const auto ranking = full_ranking(attr, words.size());

  std::vector<PerturbationMask> masks{PerturbationMask::all(words.size(), true)};
  for (double q : thresholds) {
    PerturbationMask mask = PerturbationMask::all(words.size(), !keep_top);
    const std::size_t m = top_word_count(q, words.size());
    for (std::size_t r = 0; r < m; ++r) mask.bits[ranking[r]] = keep_top;
    masks.push_back(std::move(mask));
  }
  const auto p = target_probabilities(classifier, words, target_label, masks);
  double sum = 0.0;
  for (std::size_t i = 1; i < p.size(); ++i) sum += p[0] - p[i];
  return sum / static_cast<double>(thresholds.size());
}

}  // namespace

std::size_t top_word_count(double threshold, std::size_t word_count) {
  // The epsilon absorbs products like 0.3 * 10 = 3.0000000000000004.
  const double raw = std::ceil(threshold * static_cast<double>(word_count) - 1e-9);
  const auto m = static_cast<std::size_t>(std::max(1.0, raw));
  return std::min(m, word_count);
}

double comprehensiveness(const AttributionResult& attr, std::string_view text,
                         std::string_view target_label, Classifier& classifier,
                         std::span<const double> thresholds) {
  return probability_change(attr, text, target_label, classifier, thresholds, false);
}

double sufficiency(const AttributionResult& attr, std::string_view text,
                   std::string_view target_label, Classifier& classifier,
                   std::span<const double> thresholds) {
  return probability_change(attr, text, target_label, classifier, thresholds, true);
}

double tau_loo(const AttributionResult& attr, std::string_view text, std::string_view target_label,
               Classifier& classifier) {
  const std::vector<std::string> words = normalized_word_tokens(text);
  if (words.size() < 2) throw MetricError("tau_loo undefined for fewer than 2 words");
  const auto aggregated = aggregate_word_scores(attr, words.size());
  std::vector<double> scores;
  for (std::size_t i = 0; i < aggregated.size(); ++i) {
    if (!aggregated[i]) throw MetricError("tau_loo undefined: word " + std::to_string(i) + " has no score");
    scores.push_back(*aggregated[i]);
  }
  const AttributionResult loo = occlusion_attribute(text, target_label, classifier);
  return kendall_tau(scores, loo.scores);
}

FaithfulnessReport evaluate_faithfulness(std::span<const Instance> instances,
                                         std::span<const AttributionMethod> methods,
                                         Classifier& classifier, RemoteAttributor* remote,
                                         const RunConfig& config) {
  FaithfulnessReport report;
  report.dataset = config.label_set.dataset_name();
  for (AttributionMethod method : methods) {
    FaithfulnessCell cell;
    double comp = 0.0, suff = 0.0, tau = 0.0;
    for (const Instance& instance : instances) {
      const std::string target = classifier.classify(instance.text).label;
      const std::uint64_t seed =
          derive_seed(config.seed, "faithfulness/" + std::string(to_string(method)) + "/" + instance.id);
      const AttributionResult attr =
          compute_attribution(method, instance.text, target, classifier, remote, config, seed);
      comp += comprehensiveness(attr, instance.text, target, classifier, config.faithfulness_thresholds);
      suff += sufficiency(attr, instance.text, target, classifier, config.faithfulness_thresholds);
      try {
        tau += tau_loo(attr, instance.text, target, classifier);
      } catch (const MetricError&) {
        ++cell.tau_excluded;
      }
      ++cell.n_instances;
    }
    if (cell.n_instances > 0) {
      cell.comprehensiveness = comp / static_cast<double>(cell.n_instances);
      cell.sufficiency = suff / static_cast<double>(cell.n_instances);
    }
    if (cell.tau_defined()) {
      cell.tau_loo = tau / static_cast<double>(cell.n_instances - cell.tau_excluded);
    }
    report.methods[std::string(to_string(method))] = cell;
  }
  return report;
}

nlohmann::json to_json(const FaithfulnessReport& report) {
  nlohmann::json methods = nlohmann::json::object();
  for (const auto& [name, cell] : report.methods) {
    methods[name] = {{"comprehensiveness", cell.comprehensiveness},
                     {"sufficiency", cell.sufficiency},
                     {"tau_loo", cell.tau_defined() ? nlohmann::json(cell.tau_loo) : nlohmann::json(nullptr)},
                     {"n_instances", cell.n_instances},
                     {"tau_excluded", cell.tau_excluded}};
  }
  return {{"dataset", report.dataset}, {"methods", methods}};
}

FaithfulnessReport faithfulness_from_json(const nlohmann::json& tree) {
  try {
    FaithfulnessReport report;
    report.dataset = tree.at("dataset").get<std::string>();
    for (const auto& [name, cell] : tree.at("methods").items()) {
      FaithfulnessCell c;
      c.comprehensiveness = cell.at("comprehensiveness").get<double>();
      c.sufficiency = cell.at("sufficiency").get<double>();
      c.n_instances = cell.at("n_instances").get<std::size_t>();
      c.tau_excluded = cell.at("tau_excluded").get<std::size_t>();
      if (!cell.at("tau_loo").is_null()) c.tau_loo = cell["tau_loo"].get<double>();
      report.methods[name] = c;
    }
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError(std::string("malformed faithfulness report: ") + e.what());
  }
}

bool higher_is_better(std::string_view metric) {
  if (metric == "slfr" || metric == "comprehensiveness" || metric == "tau_loo") return true;
  if (metric == "ppl" || metric == "ts" || metric == "sufficiency") return false;
  throw MetricError("unknown metric orientation for '" + std::string(metric) + "'");
}

double correlate_quality_faithfulness(const std::map<std::string, double>& quality,
                                      std::string_view quality_metric,
                                      const std::map<std::string, double>& faithfulness,
                                      std::string_view faithfulness_metric) {
  const double qs = higher_is_better(quality_metric) ? 1.0 : -1.0;
  const double fs = higher_is_better(faithfulness_metric) ? 1.0 : -1.0;
  if (quality.size() < 2) throw MetricError("correlation needs at least 2 methods");
  std::vector<double> a, b;
  for (const auto& [method, value] : quality) {
    const auto it = faithfulness.find(method);
    if (it == faithfulness.end() || faithfulness.size() != quality.size()) {
      throw MetricError("quality and faithfulness cover different methods");
    }
    a.push_back(qs * value);
    b.push_back(fs * it->second);
  }
  return kendall_tau(a, b);
}

}  // namespace cfgen
