#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "cfgen/attribution/perturbation.hpp"
#include "cfgen/core/run_config.hpp"

namespace cfgen {

// Shapley value of each player for a set function given on all 2^n
// coalitions: values[pattern] with bit i of pattern = player i present.
std::vector<double> exact_shapley(std::span<const double> values, std::size_t players);

// Kernel SHAP estimate from sampled coalitions, solving the Shapley-kernel
// weighted regression under the efficiency constraint
// sum(phi) = value(full) - value(empty).
std::vector<double> kernel_shap_regression(std::span<const PerturbationMask> coalitions,
                                           std::span<const double> values, double empty_value,
                                           double full_value);

// Coalitions of sizes 1 .. W-1 drawn with probability proportional to the
// Shapley kernel's per-size mass, each followed by its complement.
std::vector<PerturbationMask> shap_sample_coalitions(std::size_t word_count, int n_samples,
                                                     std::uint64_t seed);

// Shapley values of word presence for p(target | text), baseline = every word
// deleted. Exact enumeration up to options.exact_max_words words, the
// sampled estimator above that.
AttributionResult kernel_shap_attribute(std::string_view text, std::string_view target_label,
                                        Classifier& classifier, const ShapOptions& options,
                                        std::uint64_t seed);

}  // namespace cfgen
