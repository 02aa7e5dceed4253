#include "cfgen/core/types.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "cfgen/core/errors.hpp"

namespace cfgen {

namespace {

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view name, const std::pair<Enum, std::string_view> (&table)[N],
                std::string_view what) {
  for (const auto& [value, label] : table) {
    if (label == name) return value;
  }
  std::string allowed;
  for (const auto& [value, label] : table) {
    if (!allowed.empty()) allowed += ", ";
    allowed += label;
  }
  throw ConfigError("unknown " + std::string(what) + " '" + std::string(name) +
                    "' (expected one of: " + allowed + ")");
}

constexpr std::pair<AttributionMethod, std::string_view> kAttributionNames[] = {
    {AttributionMethod::kGradient, "gradient"},
    {AttributionMethod::kIntegratedGradients, "integrated_gradients"},
    {AttributionMethod::kLime, "lime"},
    {AttributionMethod::kShap, "shap"},
    {AttributionMethod::kOcclusion, "occlusion"},
};

constexpr std::pair<GenerationMethod, std::string_view> kGenerationNames[] = {
    {GenerationMethod::kZeroCF, "zerocf"},
    {GenerationMethod::kFitCF, "fitcf"},
    {GenerationMethod::kFizle, "fizle"},
};

constexpr std::pair<FlipVerdict, std::string_view> kVerdictNames[] = {
    {FlipVerdict::kAccepted, "accepted"},
    {FlipVerdict::kRejected, "rejected"},
    {FlipVerdict::kUnverified, "unverified"},
};

template <typename Enum, std::size_t N>
std::string_view name_of(Enum value, const std::pair<Enum, std::string_view> (&table)[N]) {
  for (const auto& [v, label] : table) {
    if (v == value) return label;
  }
  return "?";
}

}  // namespace

std::string_view to_string(AttributionMethod method) { return name_of(method, kAttributionNames); }
std::string_view to_string(GenerationMethod method) { return name_of(method, kGenerationNames); }
std::string_view to_string(FlipVerdict verdict) { return name_of(verdict, kVerdictNames); }

AttributionMethod parse_attribution_method(std::string_view name) {
  return parse_enum(name, kAttributionNames, "attribution method");
}
GenerationMethod parse_generation_method(std::string_view name) {
  return parse_enum(name, kGenerationNames, "generation method");
}
FlipVerdict parse_flip_verdict(std::string_view name) {
  return parse_enum(name, kVerdictNames, "flip verdict");
}

LabelSet::LabelSet(std::vector<std::string> labels, std::string dataset_name)
    : labels_(std::move(labels)), dataset_name_(std::move(dataset_name)) {
  if (labels_.size() < 2) {
    throw ConfigError("label set needs at least 2 labels, got " + std::to_string(labels_.size()));
  }
  std::set<std::string_view> seen;
  for (const auto& label : labels_) {
    if (label.empty()) throw ConfigError("label set contains an empty label");
    if (!seen.insert(label).second) throw ConfigError("duplicate label '" + label + "'");
  }
}

std::optional<std::size_t> LabelSet::index_of(std::string_view label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - labels_.begin());
}

std::string LabelSet::joined() const {
  std::string out;
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (i) out += ", ";
    out += labels_[i];
  }
  return out;
}

Prediction Prediction::from_probabilities(const LabelSet& label_set,
                                          std::span<const double> probabilities,
                                          double tolerance) {
  if (probabilities.size() != label_set.size()) {
    throw ProtocolError("expected " + std::to_string(label_set.size()) + " probabilities, got " +
                        std::to_string(probabilities.size()));
  }
  double sum = 0.0;
  for (double p : probabilities) {
    if (!std::isfinite(p) || p < 0.0) throw ProtocolError("probability out of range");
    sum += p;
  }
  if (std::abs(sum - 1.0) > tolerance) {
    throw ProtocolError("probabilities sum to " + std::to_string(sum) + ", not 1");
  }
  Prediction out;
  out.labels = label_set.labels();
  out.probabilities.assign(probabilities.begin(), probabilities.end());
  out.label = out.labels[out.argmax()];
  return out;
}

double Prediction::probability(std::string_view label) const {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == label) return probabilities[i];
  }
  throw ProtocolError("label '" + std::string(label) + "' not in prediction");
}

std::size_t Prediction::argmax() const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < probabilities.size(); ++i) {
    if (probabilities[i] > probabilities[best]) best = i;
  }
  return best;
}

std::size_t Prediction::second_argmax() const {
  const std::size_t top = argmax();
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    if (i == top) continue;
    if (!best || probabilities[i] > probabilities[*best]) best = i;
  }
  return best.value_or(top);
}

void AttributionResult::validate(std::size_t word_count) const {
  if (scores.size() != tokens.size()) {
    throw ProtocolError("attribution has " + std::to_string(tokens.size()) + " tokens but " +
                        std::to_string(scores.size()) + " scores");
  }
  if (word_alignment.size() != tokens.size()) {
    throw ProtocolError("word alignment does not cover every token");
  }
  for (std::size_t i = 0; i < word_alignment.size(); ++i) {
    if (word_alignment[i] && *word_alignment[i] >= word_count) {
      throw ProtocolError("token " + std::to_string(i) + " aligned to word " +
                          std::to_string(*word_alignment[i]) + " of " +
                          std::to_string(word_count));
    }
    if (!std::isfinite(scores[i])) {
      throw ProtocolError("non-finite attribution score at token " + std::to_string(i));
    }
  }
}

}  // namespace cfgen
