#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cfgen/core/models.hpp"

namespace cfgen {

// Unit-cost insert/delete/substitute distance over word sequences.
std::size_t levenshtein(std::span<const std::string> a, std::span<const std::string> b);

// Word-level edit distance divided by the original's word count. Throws
// MetricError when the original has no words.
double textual_similarity(std::string_view original, std::string_view counterfactual);

// exp of the negative mean logprob over scored tokens (unscored ones are
// skipped). Throws MetricError when no token is scored.
double perplexity(std::span<const TokenLogprob> tokens);
double perplexity(std::string_view text, Scorer& scorer);

}  // namespace cfgen
