#include "cfgen/attribution/kernel_shap.hpp"

#include <Eigen/Dense>

#include <bit>
#include <cmath>
#include <numeric>

#include "cfgen/core/errors.hpp"
#include "cfgen/core/random.hpp"
#include "cfgen/core/text.hpp"

namespace cfgen {

namespace {

double binomial(std::size_t n, std::size_t k) {
  double c = 1.0;
  for (std::size_t i = 1; i <= k; ++i) c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
  return c;
}

}  // namespace

std::vector<double> exact_shapley(std::span<const double> values, std::size_t players) {
  if (players > 30 || values.size() != (std::size_t{1} << players)) {
    throw std::invalid_argument("exact_shapley: need 2^players coalition values");
  }
  std::vector<double> phi(players, 0.0);
  if (players == 0) return phi;
  // weight(s) = s! (n-s-1)! / n! = 1 / (n * C(n-1, s))
  std::vector<double> weight(players);
  for (std::size_t s = 0; s < players; ++s) {
    weight[s] = 1.0 / (static_cast<double>(players) * binomial(players - 1, s));
  }
  const std::uint64_t full = (std::uint64_t{1} << players);
  for (std::size_t i = 0; i < players; ++i) {
    const std::uint64_t bit = std::uint64_t{1} << i;
    double sum = 0.0;
    for (std::uint64_t s = 0; s < full; ++s) {
      if (s & bit) continue;
      const auto size = static_cast<std::size_t>(std::popcount(s));
      sum += weight[size] * (values[s | bit] - values[s]);
    }
    phi[i] = sum;
  }
  return phi;
}

std::vector<PerturbationMask> shap_sample_coalitions(std::size_t word_count, int n_samples,
                                                     std::uint64_t seed) {
  if (word_count < 2) return {};
  Rng rng(seed);
  std::vector<double> cumulative(word_count - 1);
  double total = 0.0;
  for (std::size_t s = 1; s < word_count; ++s) {
    total += static_cast<double>(word_count - 1) /
             (static_cast<double>(s) * static_cast<double>(word_count - s));
    cumulative[s - 1] = total;
  }
  std::vector<PerturbationMask> out;
  out.reserve(static_cast<std::size_t>(n_samples));
  std::vector<std::size_t> order(word_count);
  while (out.size() < static_cast<std::size_t>(n_samples)) {
    const double u = rng.uniform() * total;
    std::size_t size = 1;
    while (size < word_count - 1 && cumulative[size - 1] < u) ++size;
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = 0; i < size; ++i) std::swap(order[i], order[i + rng.index(word_count - i)]);
    PerturbationMask mask = PerturbationMask::all(word_count, false);
    for (std::size_t i = 0; i < size; ++i) mask.bits[order[i]] = true;
    PerturbationMask complement = mask;
    complement.bits.flip();
    out.push_back(std::move(mask));
    if (out.size() < static_cast<std::size_t>(n_samples)) out.push_back(std::move(complement));
  }
  return out;
}

std::vector<double> kernel_shap_regression(std::span<const PerturbationMask> coalitions,
                                           std::span<const double> values, double empty_value,
                                           double full_value) {
  if (coalitions.empty()) throw std::invalid_argument("kernel_shap_regression: no coalitions");
  const std::size_t n = coalitions.front().size();
  const double delta = full_value - empty_value;
  if (n == 1) return {delta};
  const auto p = static_cast<Eigen::Index>(n - 1);
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd row(p);
  for (std::size_t k = 0; k < coalitions.size(); ++k) {
    const auto& bits = coalitions[k].bits;
    const double last = bits[n - 1] ? 1.0 : 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      row(static_cast<Eigen::Index>(i)) = (bits[i] ? 1.0 : 0.0) - last;
    }
    const double y = values[k] - empty_value - last * delta;
    gram.noalias() += row * row.transpose();
    rhs.noalias() += y * row;
  }
  gram.diagonal().array() += 1e-10;
  const Eigen::VectorXd beta = gram.ldlt().solve(rhs);
  std::vector<double> phi(beta.data(), beta.data() + p);
  phi.push_back(delta - beta.sum());
  return phi;
}

AttributionResult kernel_shap_attribute(std::string_view text, std::string_view target_label,
                                        Classifier& classifier, const ShapOptions& options,
                                        std::uint64_t seed) {
  std::vector<std::string> words = normalized_word_tokens(text);
  const std::size_t d = words.size();
  if (d == 0) throw ConfigError("SHAP needs at least one word");

  std::vector<double> phi;
  if (d <= static_cast<std::size_t>(options.exact_max_words)) {
    std::vector<PerturbationMask> all;
    all.reserve(std::size_t{1} << d);
    for (std::uint64_t pattern = 0; pattern < (std::uint64_t{1} << d); ++pattern) {
      all.push_back(PerturbationMask::from_bits(pattern, d));
    }
    const auto values = target_probabilities(classifier, words, target_label, all);
    phi = exact_shapley(values, d);
  } else {
    if (options.n_samples < static_cast<int>(d) + 2) {
      throw ConfigError("SHAP needs n_samples >= word count + 2 (" + std::to_string(d + 2) + ")");
    }
    std::vector<PerturbationMask> masks = shap_sample_coalitions(d, options.n_samples, seed);
    masks.push_back(PerturbationMask::all(d, false));
    masks.push_back(PerturbationMask::all(d, true));
    auto values = target_probabilities(classifier, words, target_label, masks);
    const double full = values.back();
    values.pop_back();
    masks.pop_back();
    const double empty = values.back();
    values.pop_back();
    masks.pop_back();
    phi = kernel_shap_regression(masks, values, empty, full);
  }
  return word_level_result(AttributionMethod::kShap, std::move(words), std::move(phi),
                           target_label);
}

}  // namespace cfgen
