#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "cfgen/core/models.hpp"
#include "cfgen/core/run_config.hpp"

namespace cfgen {

// Word-level scores from token-level ones: each word takes the maximum over
// its tokens; special tokens are dropped. nullopt for words no token maps to.
std::vector<std::optional<double>> aggregate_word_scores(const AttributionResult& attr,
                                                         std::size_t word_count);

// Word indices ordered by descending aggregated score, ties by lower index.
// Words without a score are omitted.
std::vector<std::size_t> rank_words(const AttributionResult& attr, std::size_t word_count);

// Top-n distinct words of `original_text` by aggregated score. Subword pieces
// merge into their word, special tokens give way to the next-ranked words and
// only words occurring verbatim in the text are emitted. Returns fewer than n
// when the text has fewer distinct words.
ImportantWords extract_important_words(const AttributionResult& attr,
                                       std::string_view original_text, int n);

// Runs the configured attribution method. Gradient-family methods need a
// remote attributor; the rest run locally against the classifier.
AttributionResult compute_attribution(AttributionMethod method, std::string_view text,
                                      std::string_view target_label, Classifier& classifier,
                                      RemoteAttributor* remote, const RunConfig& config,
                                      std::uint64_t seed);

}  // namespace cfgen
