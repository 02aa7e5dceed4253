#include "cfgen/attribution/lime.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "cfgen/core/errors.hpp"
#include "cfgen/core/random.hpp"
#include "cfgen/core/text.hpp"

namespace cfgen {

namespace {

constexpr double kMinRcond = 1e-12;
constexpr int kMaxEscalations = 12;

}  // namespace

SurrogateFit fit_weighted_ridge(std::span<const PerturbationMask> masks,
                                std::span<const double> targets, std::span<const double> weights,
                                double ridge) {
  if (masks.empty() || masks.size() != targets.size() || masks.size() != weights.size()) {
    throw std::invalid_argument("fit_weighted_ridge: masks, targets and weights must align");
  }
  const std::size_t d = masks.front().size();
  const auto p = static_cast<Eigen::Index>(d + 1);

  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd row(p);
  for (std::size_t s = 0; s < masks.size(); ++s) {
    row(0) = 1.0;
    for (std::size_t j = 0; j < d; ++j) row(static_cast<Eigen::Index>(j + 1)) = masks[s].bits[j];
    gram.noalias() += weights[s] * row * row.transpose();
    rhs.noalias() += weights[s] * targets[s] * row;
  }

  SurrogateFit fit;
  double lambda = ridge;
  for (int attempt = 0; attempt <= kMaxEscalations; ++attempt) {
    Eigen::MatrixXd system = gram;
    for (Eigen::Index j = 1; j < p; ++j) system(j, j) += lambda;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(system);
    // rcond() misses exactly zero pivots, so the pivot spread is checked too.
    const auto pivots = ldlt.vectorD().cwiseAbs();
    const bool well_posed = ldlt.info() == Eigen::Success && ldlt.isPositive() &&
                            pivots.minCoeff() > kMinRcond * pivots.maxCoeff() &&
                            ldlt.rcond() > kMinRcond;
    if (well_posed) {
      const Eigen::VectorXd beta = ldlt.solve(rhs);
      fit.intercept = beta(0);
      fit.coefficients.assign(beta.data() + 1, beta.data() + p);
      fit.ridge = lambda;
      fit.ridge_escalated = attempt > 0;
      return fit;
    }
    lambda = std::max(lambda * 10.0, 1e-8);
  }
  throw Error(Error::Category::kInternal, "surrogate design matrix is degenerate");
}

double lime_kernel_weight(const PerturbationMask& mask, double kernel_width) {
  const double kept = static_cast<double>(mask.kept());
  const double total = static_cast<double>(mask.size());
  const double distance = kept == 0.0 ? 1.0 : 1.0 - std::sqrt(kept / total);
  if (std::isinf(kernel_width)) return 1.0;
  return std::sqrt(std::exp(-(distance * distance) / (kernel_width * kernel_width)));
}

std::vector<PerturbationMask> lime_sample_masks(std::size_t word_count, int n_samples,
                                                std::uint64_t seed) {
  Rng rng(seed);
  std::vector<PerturbationMask> masks;
  masks.reserve(static_cast<std::size_t>(n_samples));
  masks.push_back(PerturbationMask::all(word_count, true));
  std::vector<std::size_t> order(word_count);
  const std::size_t max_drop = word_count > 1 ? word_count - 1 : 1;
  while (masks.size() < static_cast<std::size_t>(n_samples)) {
    const std::size_t drop = 1 + rng.index(max_drop);
    std::iota(order.begin(), order.end(), 0);
    // Partial Fisher-Yates: the first `drop` positions are the dropped words.
    for (std::size_t i = 0; i < drop; ++i) std::swap(order[i], order[i + rng.index(word_count - i)]);
    PerturbationMask mask = PerturbationMask::all(word_count, true);
    for (std::size_t i = 0; i < drop; ++i) mask.bits[order[i]] = false;
    masks.push_back(std::move(mask));
  }
  return masks;
}

LimeExplanation lime_explain(std::string_view text, std::string_view target_label,
                             Classifier& classifier, const LimeOptions& options,
                             std::uint64_t seed, bool exhaustive) {
  std::vector<std::string> words = normalized_word_tokens(text);
  const std::size_t d = words.size();
  if (d == 0) throw ConfigError("LIME needs at least one word");

  std::vector<PerturbationMask> masks;
  if (exhaustive) {
    if (d > 20) throw ConfigError("exhaustive LIME is limited to 20 words");
    for (std::uint64_t pattern = (1ULL << d); pattern-- > 0;) {
      masks.push_back(PerturbationMask::from_bits(pattern, d));
    }
  } else {
    if (options.n_samples < static_cast<int>(d) + 2) {
      throw ConfigError("LIME needs n_samples >= word count + 2 (" + std::to_string(d + 2) + ")");
    }
    masks = lime_sample_masks(d, options.n_samples, seed);
  }

  const double width = options.kernel_width.value_or(0.75 * std::sqrt(static_cast<double>(d)));
  std::vector<double> weights;
  weights.reserve(masks.size());
  for (const auto& mask : masks) weights.push_back(lime_kernel_weight(mask, width));

  const std::vector<double> targets = target_probabilities(classifier, words, target_label, masks);
  const SurrogateFit fit = fit_weighted_ridge(masks, targets, weights, options.ridge);

  LimeExplanation out;
  out.intercept = fit.intercept;
  out.attribution = word_level_result(AttributionMethod::kLime, std::move(words),
                                      fit.coefficients, target_label);
  if (fit.ridge_escalated) {
    std::ostringstream note;
    note << "ridge raised from " << options.ridge << " to " << fit.ridge;
    out.attribution.notes.push_back(note.str());
  }
  return out;
}

AttributionResult lime_attribute(std::string_view text, std::string_view target_label,
                                 Classifier& classifier, const LimeOptions& options,
                                 std::uint64_t seed) {
  return lime_explain(text, target_label, classifier, options, seed).attribution;
}

}  // namespace cfgen
