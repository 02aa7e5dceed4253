#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cfgen/core/models.hpp"
#include "cfgen/core/run_config.hpp"
#include "cfgen/pipeline/prompts.hpp"

namespace cfgen {

// Model roles a pipeline run talks to. Unused roles may be null.
struct ModelSet {
  Classifier* classifier = nullptr;
  Generator* generator = nullptr;
  Embedder* embedder = nullptr;
  Scorer* scorer = nullptr;
  RemoteAttributor* attributor = nullptr;
};

struct PipelineContext {
  const RunConfig& config;
  ModelSet models;
  const PromptSet& prompts;
};

// Stage names recorded on failed records.
inline constexpr std::string_view kStageClassify = "classify";
inline constexpr std::string_view kStageAttribution = "attribution";
inline constexpr std::string_view kStagePrompt = "prompt";
inline constexpr std::string_view kStageGeneration = "generation";
inline constexpr std::string_view kStageWordExtraction = "word-extraction";
inline constexpr std::string_view kStageVerification = "verification";

// Classify, attribute, pick important words, prompt, generate. Stage failures
// are recorded on the returned record instead of thrown.
CounterfactualRecord zerocf_generate(const Instance& instance, const PipelineContext& ctx);

// The generator proposes the important words itself, then edits with them.
CounterfactualRecord fizle_generate(const Instance& instance, const PipelineContext& ctx);

// Few-shot generation. The final text is always flip-verified. Throws
// ConfigError when `demonstrations` is empty.
CounterfactualRecord fitcf_generate(const Instance& instance,
                                    std::span<const Demonstration> demonstrations,
                                    const PipelineContext& ctx);

// accepted iff the classifier's labels for the two texts differ. An empty
// counterfactual is rejected without a classifier call.
FlipVerdict verify_flip(std::string_view original, std::string_view counterfactual,
                        Classifier& classifier);

// Binary: the other label. Multiclass: the second most probable label.
std::string counterpart_label(const Prediction& prediction, const LabelSet& label_set);

struct ParsedWordList {
  std::vector<std::string> words;
  bool parsed = true;
};

// Parses the word step's answer: comma- or newline-separated items, optional
// surrounding brackets, quotes and bullets. "none"/"[]"/"" yield an empty list.
// Answers that read as prose rather than a list are reported unparsed.
ParsedWordList parse_word_list(std::string_view answer);

// True when both texts have the same normalized word sequence.
bool is_no_edit(std::string_view original, std::string_view edited);

}  // namespace cfgen
