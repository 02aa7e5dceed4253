#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "cfgen/attribution/important_words.hpp"
#include "cfgen/attribution/kernel_shap.hpp"
#include "cfgen/attribution/lime.hpp"
#include "cfgen/attribution/occlusion.hpp"
#include "cfgen/attribution/perturbation.hpp"
#include "cfgen/core/errors.hpp"
#include "cfgen/core/run_config.hpp"
#include "cfgen/core/text.hpp"
#include "support/stubs.hpp"

namespace cfgen {
namespace {

using testing::CountingAttributor;
using testing::FnClassifier;

const LabelSet kBinary({"pos", "neg"}, "toy");

std::string synthetic_text(std::size_t n) {
  std::string text;
  for (std::size_t i = 0; i < n; ++i) text += (i ? " w" : "w") + std::to_string(i);
  return text;
}

// Bit i set when word "w<i>" is present.
std::uint64_t present_pattern(std::string_view text) {
  std::uint64_t pattern = 0;
  for (const auto& w : normalized_word_tokens(text)) pattern |= std::uint64_t{1} << std::stoul(w.substr(1));
  return pattern;
}

FnClassifier table_box(std::vector<double> table) {
  return FnClassifier(kBinary, [table = std::move(table)](std::string_view text) {
    const double v = table[present_pattern(text)];
    return std::vector<double>{v, 1.0 - v};
  });
}

// Shapley value as the average marginal contribution over all n! orders.
std::vector<double> shapley_by_permutations(const std::vector<double>& v, std::size_t n) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> phi(n, 0.0);
  double count = 0.0;
  do {
    std::uint64_t s = 0;
    for (std::size_t player : order) {
      const std::uint64_t next = s | (std::uint64_t{1} << player);
      phi[player] += v[next] - v[s];
      s = next;
    }
    count += 1.0;
  } while (std::next_permutation(order.begin(), order.end()));
  for (auto& x : phi) x /= count;
  return phi;
}

TEST(Perturbation, MaskDeletesDroppedWordsAndRejoins) {
  const std::vector<std::string> words{"a", "b", "c", "d"};
  EXPECT_EQ(apply_mask(words, PerturbationMask::from_bits(0b1010, 4)), "b d");
  EXPECT_EQ(apply_mask(words, PerturbationMask::all(4, false)), "");
  EXPECT_EQ(PerturbationMask::from_bits(0b1011, 4).kept(), 3u);
}

TEST(Perturbation, IdenticalTextsClassifiedOnce) {
  auto clf = table_box(std::vector<double>(4, 0.5));
  const std::vector<std::string> words{"w0", "w1"};
  std::vector<PerturbationMask> masks(3, PerturbationMask::all(2, true));
  masks.push_back(PerturbationMask::all(2, false));
  const auto p = target_probabilities(clf, words, "pos", masks);
  EXPECT_EQ(p.size(), 4u);
  EXPECT_EQ(clf.calls.load(), 2);
}

TEST(KernelShap, ExactEnumerationMatchesPermutationOracle) {
  std::mt19937_64 gen(20240611);
  std::uniform_real_distribution<double> unif(0.05, 0.95);
  for (int box = 0; box < 50; ++box) {
    const std::size_t n = 1 + box % 8;
    std::vector<double> table(std::size_t{1} << n);
    for (auto& v : table) v = unif(gen);
    auto clf = table_box(table);
    const auto attr = kernel_shap_attribute(synthetic_text(n), "pos", clf, ShapOptions{}, 1);
    const auto oracle = shapley_by_permutations(table, n);
    ASSERT_EQ(attr.scores.size(), n);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(attr.scores[i], oracle[i], 1e-6) << "box " << box;
  }
}

TEST(KernelShap, SampledRegressionIsExactOnAdditiveGames) {
  const std::size_t n = 6;
  const std::vector<double> c{0.1, -0.05, 0.2, 0.0, 0.03, -0.12};
  const double base = 0.4;
  auto value = [&](const PerturbationMask& m) {
    double v = base;
    for (std::size_t i = 0; i < n; ++i) v += m.bits[i] ? c[i] : 0.0;
    return v;
  };
  const auto coalitions = shap_sample_coalitions(n, 64, 3);
  std::vector<double> values;
  for (const auto& m : coalitions) values.push_back(value(m));
  const double full = value(PerturbationMask::all(n, true));
  const auto phi = kernel_shap_regression(coalitions, values, base, full);
  for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(phi[i], c[i], 1e-8);
  EXPECT_NEAR(std::accumulate(phi.begin(), phi.end(), 0.0), full - base, 1e-12);
}

TEST(KernelShap, SampledCoalitionsComeWithComplements) {
  const auto masks = shap_sample_coalitions(7, 40, 9);
  ASSERT_EQ(masks.size(), 40u);
  for (std::size_t i = 0; i + 1 < masks.size(); i += 2) {
    auto flipped = masks[i];
    flipped.bits.flip();
    EXPECT_EQ(flipped, masks[i + 1]);
    EXPECT_GE(masks[i].kept(), 1u);
    EXPECT_LE(masks[i].kept(), 6u);
  }
}

TEST(KernelShap, ExactShapleyRejectsWrongTableSize) {
  const std::vector<double> v(5, 0.0);
  EXPECT_THROW(exact_shapley(v, 2), std::invalid_argument);
}

// Closed-form weighted ridge via Gauss-Jordan elimination with partial pivoting.
std::vector<double> wls_oracle(const std::vector<PerturbationMask>& masks, const std::vector<double>& y,
                               const std::vector<double>& w, double ridge) {
  const std::size_t d = masks.front().size();
  const std::size_t p = d + 1;
  std::vector<std::vector<double>> a(p, std::vector<double>(p + 1, 0.0));
  for (std::size_t s = 0; s < masks.size(); ++s) {
    std::vector<double> x(p, 1.0);
    for (std::size_t j = 0; j < d; ++j) x[j + 1] = masks[s].bits[j] ? 1.0 : 0.0;
    for (std::size_t r = 0; r < p; ++r) {
      for (std::size_t c = 0; c < p; ++c) a[r][c] += w[s] * x[r] * x[c];
      a[r][p] += w[s] * x[r] * y[s];
    }
  }
  for (std::size_t j = 1; j < p; ++j) a[j][j] += ridge;
  for (std::size_t col = 0; col < p; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < p; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    std::swap(a[col], a[pivot]);
    for (std::size_t r = 0; r < p; ++r) {
      if (r == col) continue;
      const double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c <= p; ++c) a[r][c] -= f * a[col][c];
    }
  }
  std::vector<double> beta(p);
  for (std::size_t r = 0; r < p; ++r) beta[r] = a[r][p] / a[r][r];
  return beta;
}

TEST(Lime, WeightedRidgeMatchesClosedForm) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const auto masks = lime_sample_masks(5, 60, 11);
  std::vector<double> y, w;
  for (std::size_t i = 0; i < masks.size(); ++i) {
    y.push_back(unif(gen));
    w.push_back(0.1 + unif(gen));
  }
  const auto fit = fit_weighted_ridge(masks, y, w, 0.5);
  const auto oracle = wls_oracle(masks, y, w, 0.5);
  EXPECT_NEAR(fit.intercept, oracle[0], 1e-9);
  for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(fit.coefficients[j], oracle[j + 1], 1e-9);
  EXPECT_FALSE(fit.ridge_escalated);
}

TEST(Lime, SingularDesignEscalatesRidge) {
  // Word 1 always mirrors word 0: collinear columns.
  std::vector<PerturbationMask> masks{PerturbationMask::from_bits(0b11, 2),
                                      PerturbationMask::from_bits(0b00, 2),
                                      PerturbationMask::from_bits(0b11, 2)};
  const std::vector<double> y{1.0, 0.0, 1.0}, w{1.0, 1.0, 1.0};
  const auto fit = fit_weighted_ridge(masks, y, w, 0.0);
  EXPECT_TRUE(fit.ridge_escalated);
  EXPECT_GT(fit.ridge, 0.0);
  EXPECT_NEAR(fit.coefficients[0], fit.coefficients[1], 1e-6);
}

TEST(Lime, RecoversLinearBlackBoxesExhaustively) {
  std::mt19937_64 gen(77);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + trial % 7;
    std::uniform_real_distribution<double> coef(-0.4 / n, 0.4 / n);
    std::vector<double> c(n);
    for (auto& x : c) x = coef(gen);
    const double base = 0.5;
    FnClassifier clf(kBinary, [&](std::string_view text) {
      const auto pattern = present_pattern(text);
      double v = base;
      for (std::size_t i = 0; i < n; ++i) v += (pattern >> i & 1) ? c[i] : 0.0;
      return std::vector<double>{v, 1.0 - v};
    });
    const auto result = lime_explain(synthetic_text(n), "pos", clf, LimeOptions{}, 0, true);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(result.attribution.scores[i], c[i], 1e-3);
    EXPECT_NEAR(result.intercept, base, 1e-3);
  }
}

TEST(Lime, KernelWeights) {
  EXPECT_DOUBLE_EQ(lime_kernel_weight(PerturbationMask::all(4, true), 1.5), 1.0);
  EXPECT_DOUBLE_EQ(lime_kernel_weight(PerturbationMask::all(4, false), 1.0), std::sqrt(std::exp(-1.0)));
  EXPECT_DOUBLE_EQ(lime_kernel_weight(PerturbationMask::from_bits(1, 4),
                                      std::numeric_limits<double>::infinity()),
                   1.0);
}

TEST(Lime, SampledMasksStartWithOriginalAndAreSeeded) {
  const auto a = lime_sample_masks(6, 30, 42);
  const auto b = lime_sample_masks(6, 30, 42);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.front(), PerturbationMask::all(6, true));
  for (std::size_t i = 1; i < a.size(); ++i) {
    EXPECT_GE(a[i].kept(), 1u);
    EXPECT_LE(a[i].kept(), 5u);
  }
}

TEST(Lime, TooFewSamplesIsConfigError) {
  auto clf = table_box(std::vector<double>(16, 0.5));
  LimeOptions options;
  options.n_samples = 3;
  EXPECT_THROW(lime_attribute(synthetic_text(4), "pos", clf, options, 0), ConfigError);
}

TEST(Occlusion, LeaveOneOutDrops) {
  std::vector<double> table(8);
  for (std::uint64_t s = 0; s < 8; ++s) table[s] = 0.1 + 0.1 * static_cast<double>(s);
  auto clf = table_box(table);
  const auto attr = occlusion_attribute(synthetic_text(3), "pos", clf);
  ASSERT_EQ(attr.scores.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(attr.scores[i], table[7] - table[7 & ~(std::uint64_t{1} << i)], 1e-12);
  }
  EXPECT_EQ(attr.method, AttributionMethod::kOcclusion);
}

AttributionResult subword_result() {
  // "The cat sat" as [CLS] the c ##at sat [SEP]
  AttributionResult r;
  r.method = AttributionMethod::kGradient;
  r.target_label = "pos";
  r.tokens = {"[CLS]", "the", "c", "##at", "sat", "[SEP]"};
  r.scores = {9.0, 0.1, 0.2, 0.7, 0.5, 8.0};
  r.word_alignment = {std::nullopt, 0, 1, 1, 2, std::nullopt};
  return r;
}

TEST(ImportantWords, AggregatesSubwordsBySpecialTokensDropped) {
  const auto scores = aggregate_word_scores(subword_result(), 3);
  ASSERT_EQ(scores.size(), 3u);
  EXPECT_DOUBLE_EQ(*scores[0], 0.1);
  EXPECT_DOUBLE_EQ(*scores[1], 0.7);
  EXPECT_DOUBLE_EQ(*scores[2], 0.5);
  EXPECT_EQ(rank_words(subword_result(), 3), (std::vector<std::size_t>{1, 2, 0}));
}

TEST(ImportantWords, ExtractsDistinctVerbatimWords) {
  const auto words = extract_important_words(subword_result(), "The cat sat", 2);
  EXPECT_EQ(words.words, (std::vector<std::string>{"cat", "sat"}));
  EXPECT_EQ(words.source_scores, (std::vector<double>{0.7, 0.5}));

  auto attr = word_level_result(AttributionMethod::kLime, {"Good", "movie", "good"}, {0.9, 0.1, 0.8}, "pos");
  const auto deduped = extract_important_words(attr, "Good movie good", 5);
  EXPECT_EQ(deduped.words, (std::vector<std::string>{"Good", "movie"}));
}

TEST(ImportantWords, TiesGoToLowerIndex) {
  auto attr = word_level_result(AttributionMethod::kLime, {"a", "b", "c"}, {0.5, 0.5, 0.5}, "pos");
  EXPECT_EQ(rank_words(attr, 3), (std::vector<std::size_t>{0, 1, 2}));
}

TEST(ImportantWords, MalformedAlignmentIsProtocolError) {
  auto attr = subword_result();
  attr.word_alignment[2] = 7;
  EXPECT_THROW(aggregate_word_scores(attr, 3), ProtocolError);
}

TEST(ComputeAttribution, RemoteMethodsNeedAttributor) {
  auto clf = table_box(std::vector<double>(4, 0.5));
  RunConfig config;
  EXPECT_THROW(compute_attribution(AttributionMethod::kGradient, "w0 w1", "pos", clf, nullptr, config, 0),
               ConfigError);
  CountingAttributor remote;
  const auto attr = compute_attribution(AttributionMethod::kIntegratedGradients, "w0 w1", "pos", clf,
                                        &remote, config, 0);
  EXPECT_EQ(remote.calls.load(), 1);
  EXPECT_EQ(attr.scores.size(), 2u);
}

TEST(ComputeAttribution, LocalMethodsIgnoreRemote) {
  auto clf = table_box(std::vector<double>(4, 0.5));
  CountingAttributor remote;
  RunConfig config;
  config.lime.n_samples = 20;
  for (auto method : {AttributionMethod::kLime, AttributionMethod::kShap, AttributionMethod::kOcclusion}) {
    const auto attr = compute_attribution(method, "w0 w1", "pos", clf, &remote, config, 0);
    EXPECT_EQ(attr.method, method);
  }
  EXPECT_EQ(remote.calls.load(), 0);
}

}  // namespace
}  // namespace cfgen
