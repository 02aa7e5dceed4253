#include "cfgen/attribution/important_words.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "cfgen/attribution/kernel_shap.hpp"
#include "cfgen/attribution/lime.hpp"
#include "cfgen/attribution/occlusion.hpp"
#include "cfgen/core/errors.hpp"
#include "cfgen/core/text.hpp"

namespace cfgen {

std::vector<std::optional<double>> aggregate_word_scores(const AttributionResult& attr,
                                                         std::size_t word_count) {
  attr.validate(word_count);
  std::vector<std::optional<double>> scores(word_count);
  for (std::size_t t = 0; t < attr.tokens.size(); ++t) {
    const auto word = attr.word_alignment[t];
    if (!word) continue;
    auto& slot = scores[*word];
    slot = slot ? std::max(*slot, attr.scores[t]) : attr.scores[t];
  }
  return scores;
}

std::vector<std::size_t> rank_words(const AttributionResult& attr, std::size_t word_count) {
  const auto scores = aggregate_word_scores(attr, word_count);
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < word_count; ++i) {
    if (scores[i]) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return *scores[a] > *scores[b]; });
  return order;
}

ImportantWords extract_important_words(const AttributionResult& attr,
                                       std::string_view original_text, int n) {
  const std::vector<std::string> words = normalized_word_tokens(original_text);
  const auto scores = aggregate_word_scores(attr, words.size());
  ImportantWords out;
  std::set<std::string> seen;
  for (std::size_t index : rank_words(attr, words.size())) {
    if (static_cast<int>(out.words.size()) >= n) break;
    const std::string& word = words[index];
    if (!seen.insert(fold_case(word)).second) continue;
    if (!occurs_verbatim(word, original_text)) continue;
    out.words.push_back(word);
    out.source_scores.push_back(*scores[index]);
  }
  return out;
}

AttributionResult compute_attribution(AttributionMethod method, std::string_view text,
                                      std::string_view target_label, Classifier& classifier,
                                      RemoteAttributor* remote, const RunConfig& config,
                                      std::uint64_t seed) {
  switch (method) {
    case AttributionMethod::kLime:
      return lime_attribute(text, target_label, classifier, config.lime, seed);
    case AttributionMethod::kShap:
      return kernel_shap_attribute(text, target_label, classifier, config.shap, seed);
    case AttributionMethod::kOcclusion:
      return occlusion_attribute(text, target_label, classifier);
    case AttributionMethod::kGradient:
    case AttributionMethod::kIntegratedGradients:
      if (remote == nullptr) {
        throw ConfigError("models.attributor: required for attribution method '" +
                          std::string(to_string(method)) + "'");
      }
      return remote->attribute(text, target_label, method);
  }
  throw ConfigError("unknown attribution method");
}

}  // namespace cfgen
