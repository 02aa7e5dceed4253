#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cfgen {

enum class AttributionMethod { kGradient, kIntegratedGradients, kLime, kShap, kOcclusion };
enum class GenerationMethod { kZeroCF, kFitCF, kFizle };
enum class FlipVerdict { kAccepted, kRejected, kUnverified };

std::string_view to_string(AttributionMethod method);
std::string_view to_string(GenerationMethod method);
std::string_view to_string(FlipVerdict verdict);

// Throw ConfigError on unknown names.
AttributionMethod parse_attribution_method(std::string_view name);
GenerationMethod parse_generation_method(std::string_view name);
FlipVerdict parse_flip_verdict(std::string_view name);

// Gradient-family methods need model internals and are served remotely.
constexpr bool is_remote(AttributionMethod method) {
  return method == AttributionMethod::kGradient ||
         method == AttributionMethod::kIntegratedGradients;
}

struct Instance {
  std::string id;
  std::string text;
  std::optional<std::string> gold_label;

  bool operator==(const Instance&) const = default;
};

class LabelSet {
 public:
  LabelSet() = default;
  // Throws ConfigError unless there are >= 2 distinct labels.
  LabelSet(std::vector<std::string> labels, std::string dataset_name);

  const std::vector<std::string>& labels() const { return labels_; }
  const std::string& dataset_name() const { return dataset_name_; }
  std::size_t size() const { return labels_.size(); }
  const std::string& operator[](std::size_t i) const { return labels_[i]; }

  std::optional<std::size_t> index_of(std::string_view label) const;
  bool contains(std::string_view label) const { return index_of(label).has_value(); }

  // "a, b, c" exactly as the prompts interpolate it.
  std::string joined() const;

  bool operator==(const LabelSet&) const = default;

 private:
  std::vector<std::string> labels_;
  std::string dataset_name_;
};

struct Prediction {
  std::string label;
  // Aligned with the LabelSet order the prediction was built against.
  std::vector<std::string> labels;
  std::vector<double> probabilities;

  // Validates |sum - 1| <= tolerance (ProtocolError otherwise). The label is
  // the argmax, ties resolved towards the lower index.
  static Prediction from_probabilities(const LabelSet& label_set,
                                       std::span<const double> probabilities,
                                       double tolerance = 1e-6);

  double probability(std::string_view label) const;
  std::size_t argmax() const;
  // Second most probable label index (ties towards lower index).
  std::size_t second_argmax() const;

  bool operator==(const Prediction&) const = default;
};

struct AttributionResult {
  AttributionMethod method = AttributionMethod::kOcclusion;
  std::vector<std::string> tokens;
  std::vector<double> scores;
  // Token index -> word index in normalized_word_tokens(text); nullopt marks a
  // special token that belongs to no word.
  std::vector<std::optional<std::size_t>> word_alignment;
  std::string target_label;
  // Free-form diagnostics (e.g. ridge fallback), kept out of scoring.
  std::vector<std::string> notes;

  // Throws ProtocolError describing the first violated invariant.
  void validate(std::size_t word_count) const;
};

struct ImportantWords {
  std::vector<std::string> words;
  std::vector<double> source_scores;

  bool empty() const { return words.empty(); }
  bool operator==(const ImportantWords&) const = default;
};

struct CounterfactualRecord {
  Instance instance;
  std::string predicted_label;
  std::string counterfactual_text;
  GenerationMethod method = GenerationMethod::kZeroCF;
  std::optional<AttributionMethod> attribution_method;
  std::optional<ImportantWords> important_words;
  FlipVerdict flip_verified = FlipVerdict::kUnverified;
  std::string generator_model;

  // Empty when generation succeeded; otherwise the stage that failed.
  std::string failed_stage;
  std::string error;
  // Edited text equals the original.
  bool no_edit = false;
  // FIZLE only: LLM-proposed words absent from the input.
  std::vector<std::string> hallucinated_words;
  std::vector<std::string> notes;

  bool succeeded() const { return failed_stage.empty(); }
  bool operator==(const CounterfactualRecord&) const = default;
};

struct Demonstration {
  std::string instance_id;
  std::string original_text;
  std::string edited_text;
  int cluster_id = 0;
  int rank_in_cluster = 0;

  bool operator==(const Demonstration&) const = default;
};

}  // namespace cfgen
