#include "cfgen/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "cfgen/core/errors.hpp"
#include "cfgen/core/text.hpp"

namespace cfgen {

std::size_t levenshtein(std::span<const std::string> a, std::span<const std::string> b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> prev(b.size() + 1);
  std::vector<std::size_t> cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t substitute = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, substitute});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double textual_similarity(std::string_view original, std::string_view counterfactual) {
  const auto a = normalized_word_tokens(original);
  if (a.empty()) throw MetricError("textual similarity undefined for an empty original");
  const auto b = normalized_word_tokens(counterfactual);
  return static_cast<double>(levenshtein(a, b)) / static_cast<double>(a.size());
}

double perplexity(std::span<const TokenLogprob> tokens) {
  // Mean taken as an offset from the first scored value, which keeps runs of
  // equal logprobs exact.
  std::optional<double> first;
  double offset_sum = 0.0;
  std::size_t scored = 0;
  for (const auto& token : tokens) {
    if (!token.logprob) continue;
    if (!first) first = *token.logprob;
    offset_sum += *token.logprob - *first;
    ++scored;
  }
  if (scored == 0) throw MetricError("perplexity undefined: no scored tokens");
  return std::exp(-(*first + offset_sum / static_cast<double>(scored)));
}

double perplexity(std::string_view text, Scorer& scorer) {
  const auto tokens = scorer.token_logprobs(text);
  return perplexity(tokens);
}

}  // namespace cfgen
