#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "cfgen/attribution/perturbation.hpp"
#include "cfgen/core/run_config.hpp"

namespace cfgen {

struct SurrogateFit {
  std::vector<double> coefficients;
  double intercept = 0.0;
  // Ridge strength actually used; larger than requested after a fallback.
  double ridge = 0.0;
  bool ridge_escalated = false;
};

// Weighted ridge regression of `targets` on the mask bits with an unpenalized
// intercept. If the regularized normal equations are numerically singular the
// ridge strength is raised tenfold until they are not.
SurrogateFit fit_weighted_ridge(std::span<const PerturbationMask> masks,
                                std::span<const double> targets, std::span<const double> weights,
                                double ridge);

// Exponential kernel on the cosine distance between a mask and the all-kept
// mask. An infinite width gives uniform weights.
double lime_kernel_weight(const PerturbationMask& mask, double kernel_width);

// Sampled masks: the all-kept mask first, then masks dropping a uniformly
// chosen number of words (1 .. W-1) at uniformly chosen positions.
std::vector<PerturbationMask> lime_sample_masks(std::size_t word_count, int n_samples,
                                                std::uint64_t seed);

struct LimeExplanation {
  AttributionResult attribution;
  double intercept = 0.0;
};

// Local linear surrogate around `text` with word deletion as the
// perturbation. `exhaustive` replaces sampling by all 2^W masks (W <= 20).
LimeExplanation lime_explain(std::string_view text, std::string_view target_label,
                             Classifier& classifier, const LimeOptions& options,
                             std::uint64_t seed, bool exhaustive = false);

AttributionResult lime_attribute(std::string_view text, std::string_view target_label,
                                 Classifier& classifier, const LimeOptions& options,
                                 std::uint64_t seed);

}  // namespace cfgen
