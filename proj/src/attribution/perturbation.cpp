#include "cfgen/attribution/perturbation.hpp"

#include <algorithm>
#include <map>

#include "cfgen/core/text.hpp"

namespace cfgen {

PerturbationMask PerturbationMask::all(std::size_t word_count, bool keep) {
  return PerturbationMask{std::vector<bool>(word_count, keep)};
}

PerturbationMask PerturbationMask::from_bits(std::uint64_t pattern, std::size_t word_count) {
  PerturbationMask mask;
  mask.bits.resize(word_count);
  for (std::size_t i = 0; i < word_count; ++i) mask.bits[i] = (pattern >> i) & 1U;
  return mask;
}

std::size_t PerturbationMask::kept() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), true));
}

std::string apply_mask(std::span<const std::string> words, const PerturbationMask& mask) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (!mask.bits[i]) continue;
    if (!out.empty()) out += ' ';
    out += words[i];
  }
  return out;
}

std::vector<double> target_probabilities(Classifier& classifier, std::span<const std::string> words,
                                         std::string_view target_label,
                                         std::span<const PerturbationMask> masks) {
  std::vector<std::string> unique_texts;
  std::map<std::string, std::size_t> slot;
  std::vector<std::size_t> index_of_mask;
  index_of_mask.reserve(masks.size());
  for (const auto& mask : masks) {
    std::string text = apply_mask(words, mask);
    auto [it, inserted] = slot.emplace(text, unique_texts.size());
    if (inserted) unique_texts.push_back(std::move(text));
    index_of_mask.push_back(it->second);
  }
  const auto predictions = classifier.classify_batch(unique_texts);
  std::vector<double> out;
  out.reserve(masks.size());
  for (std::size_t idx : index_of_mask) out.push_back(predictions[idx].probability(target_label));
  return out;
}

AttributionResult word_level_result(AttributionMethod method, std::vector<std::string> words,
                                    std::vector<double> scores, std::string_view target_label) {
  AttributionResult result;
  result.method = method;
  result.target_label = std::string(target_label);
  result.word_alignment.reserve(words.size());
  for (std::size_t i = 0; i < words.size(); ++i) result.word_alignment.emplace_back(i);
  result.tokens = std::move(words);
  result.scores = std::move(scores);
  return result;
}

}  // namespace cfgen
