#pragma once

#include <span>
#include <string>
#include <string_view>

#include "cfgen/core/models.hpp"
#include "cfgen/pipeline/prompts.hpp"

namespace cfgen {

enum class JudgeVerdict { kYes, kNo, kError };

std::string_view to_string(JudgeVerdict verdict);
JudgeVerdict parse_judge_verdict(std::string_view name);

// Lowercase, drop ASCII punctuation, trim; "yes" / "no" map to verdicts and
// everything else to kError.
JudgeVerdict parse_judge_answer(std::string_view answer);

// Asks the generator whether the two texts carry different labels. Endpoint
// and generation failures become kError; offline cache misses propagate.
JudgeVerdict judge_flip(std::string_view original, std::string_view counterfactual,
                        Generator& generator, const LabelSet& label_set,
                        const PromptTemplate& judge_template);

struct SlfrResult {
  std::size_t n = 0;
  std::size_t yes = 0;
  std::size_t no = 0;
  std::size_t errors = 0;
  double slfr = 0.0;
  double non_flip_rate = 0.0;
  double judge_error_rate = 0.0;
};

// Errors count as non-flips for slfr and are reported separately. Throws
// MetricError when empty.
SlfrResult slfr(std::span<const JudgeVerdict> verdicts);

}  // namespace cfgen
