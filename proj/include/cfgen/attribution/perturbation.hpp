#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cfgen/core/models.hpp"

namespace cfgen {

// Which words of an instance survive a perturbation (true = kept). Perturbed
// texts delete the dropped words and rejoin the rest with single spaces.
struct PerturbationMask {
  std::vector<bool> bits;

  static PerturbationMask all(std::size_t word_count, bool keep);
  // Bit i of `pattern` controls word i. word_count <= 63.
  static PerturbationMask from_bits(std::uint64_t pattern, std::size_t word_count);

  std::size_t size() const { return bits.size(); }
  std::size_t kept() const;

  bool operator==(const PerturbationMask&) const = default;
};

std::string apply_mask(std::span<const std::string> words, const PerturbationMask& mask);

// p(target | perturbed text) for every mask, in mask order. Identical texts
// are classified once.
std::vector<double> target_probabilities(Classifier& classifier, std::span<const std::string> words,
                                         std::string_view target_label,
                                         std::span<const PerturbationMask> masks);

// Identity token/word alignment used by the word-level black-box methods.
AttributionResult word_level_result(AttributionMethod method, std::vector<std::string> words,
                                    std::vector<double> scores, std::string_view target_label);

}  // namespace cfgen
