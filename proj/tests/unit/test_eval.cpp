#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cfgen/core/errors.hpp"
#include "cfgen/eval/judge.hpp"
#include "cfgen/eval/metrics.hpp"
#include "cfgen/eval/report.hpp"
#include "cfgen/pipeline/prompts.hpp"
#include "support/stubs.hpp"

namespace cfgen {
namespace {

using testing::ScriptedGenerator;
using testing::UniformScorer;

// Full-matrix Wagner-Fischer.
std::size_t dp_oracle(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
  }
  return d[a.size()][b.size()];
}

std::vector<std::string> random_words(std::mt19937_64& gen, std::size_t max_len) {
  static const std::vector<std::string> vocab{"the", "cat", "sat", "on", "a", "mat", "dog", "ran"};
  std::uniform_int_distribution<std::size_t> len(0, max_len);
  std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
  std::vector<std::string> out(len(gen));
  for (auto& w : out) w = vocab[pick(gen)];
  return out;
}

TEST(Levenshtein, AgreesWithDpOracleAndIsAMetric) {
  std::mt19937_64 gen(1234);
  for (int i = 0; i < 1000; ++i) {
    const auto a = random_words(gen, 30);
    const auto b = random_words(gen, 30);
    const auto c = random_words(gen, 30);
    const auto ab = levenshtein(a, b);
    ASSERT_EQ(ab, dp_oracle(a, b));
    EXPECT_EQ(ab, levenshtein(b, a));
    EXPECT_LE(levenshtein(a, c), ab + levenshtein(b, c));
    EXPECT_EQ(levenshtein(a, a), 0u);
  }
}

TEST(Levenshtein, EdgeCases) {
  const std::vector<std::string> empty;
  const std::vector<std::string> abc{"a", "b", "c"};
  EXPECT_EQ(levenshtein(empty, abc), 3u);
  EXPECT_EQ(levenshtein(abc, empty), 3u);
  EXPECT_EQ(levenshtein(empty, empty), 0u);
}

TEST(TextualSimilarity, NormalizedByOriginalLength) {
  EXPECT_DOUBLE_EQ(textual_similarity("the movie was great", "the movie was awful"), 0.25);
  EXPECT_DOUBLE_EQ(textual_similarity("a  b", "a b"), 0.0);
  EXPECT_DOUBLE_EQ(textual_similarity("a b", "x y z w"), 2.0);
  EXPECT_THROW(textual_similarity("   ", "x"), MetricError);
}

TEST(Perplexity, ClosedFormOnTwoTokens) {
  const std::vector<TokenLogprob> tokens{{"<s>", std::nullopt}, {"a", -1.0}, {"b", -2.0}};
  EXPECT_NEAR(perplexity(tokens), std::exp(1.5), 1e-9);
}

TEST(Perplexity, UniformScorerGivesVocabularySize) {
  UniformScorer four(-std::log(4.0));
  EXPECT_EQ(perplexity("one two three four five", four), 4.0);
  for (int v = 2; v <= 1000; ++v) {
    UniformScorer scorer(-std::log(static_cast<double>(v)));
    const double ppl = perplexity("a b c d e f g", scorer);
    // No error beyond what exp(log v) itself loses; exact where that round-trips.
    const double vd = static_cast<double>(v);
    EXPECT_EQ(ppl, std::exp(std::log(vd))) << v;
  }
}

TEST(Perplexity, NothingScoredIsMetricError) {
  const std::vector<TokenLogprob> tokens{{"<s>", std::nullopt}};
  EXPECT_THROW(perplexity(tokens), MetricError);
  EXPECT_THROW(perplexity(std::vector<TokenLogprob>{}), MetricError);
}

TEST(Judge, ParsesAnswersStrictly) {
  EXPECT_EQ(parse_judge_answer("Yes."), JudgeVerdict::kYes);
  EXPECT_EQ(parse_judge_answer("  NO! "), JudgeVerdict::kNo);
  EXPECT_EQ(parse_judge_answer("'yes'"), JudgeVerdict::kYes);
  EXPECT_EQ(parse_judge_answer("yes, they differ"), JudgeVerdict::kError);
  EXPECT_EQ(parse_judge_answer("maybe"), JudgeVerdict::kError);
  EXPECT_EQ(parse_judge_answer(""), JudgeVerdict::kError);
  for (auto v : {JudgeVerdict::kYes, JudgeVerdict::kNo, JudgeVerdict::kError}) {
    EXPECT_EQ(parse_judge_verdict(to_string(v)), v);
  }
}

const LabelSet kSentiment({"negative", "positive"}, "SST-2");

TEST(Judge, RendersPromptAndMapsFailures) {
  const auto tmpl = PromptTemplate::builtin("flip_judge");
  ScriptedGenerator yes([](std::string_view) { return "yes"; });
  EXPECT_EQ(judge_flip("good film", "bad film", yes, kSentiment, tmpl), JudgeVerdict::kYes);
  ASSERT_EQ(yes.prompts.size(), 1u);
  EXPECT_NE(yes.prompts[0].find("[original instance] 'good film'"), std::string::npos);
  EXPECT_NE(yes.prompts[0].find("[edited instance] 'bad film'"), std::string::npos);
  EXPECT_NE(yes.prompts[0].find("negative, positive"), std::string::npos);

  ScriptedGenerator empty([](std::string_view) { return ""; });
  EXPECT_EQ(judge_flip("a", "b", empty, kSentiment, tmpl), JudgeVerdict::kError);

  ScriptedGenerator down([](std::string_view) -> std::string { throw TransportError("down"); });
  EXPECT_EQ(judge_flip("a", "b", down, kSentiment, tmpl), JudgeVerdict::kError);

  ScriptedGenerator miss([](std::string_view) -> std::string { throw CacheMissError("offline"); });
  EXPECT_THROW(judge_flip("a", "b", miss, kSentiment, tmpl), CacheMissError);
}

TEST(Slfr, CountsErrorsAsNonFlips) {
  const std::vector<JudgeVerdict> v{JudgeVerdict::kYes, JudgeVerdict::kYes, JudgeVerdict::kNo,
                                    JudgeVerdict::kError};
  const auto r = slfr(v);
  EXPECT_EQ(r.n, 4u);
  EXPECT_DOUBLE_EQ(r.slfr, 0.5);
  EXPECT_DOUBLE_EQ(r.non_flip_rate, 0.25);
  EXPECT_DOUBLE_EQ(r.judge_error_rate, 0.25);
  EXPECT_THROW(slfr(std::vector<JudgeVerdict>{}), MetricError);
}

CounterfactualRecord make_record(std::string id, std::string text, std::string cf) {
  CounterfactualRecord r;
  r.instance = {std::move(id), std::move(text), std::nullopt};
  r.counterfactual_text = std::move(cf);
  return r;
}

TEST(EvaluateRecords, SkipsFailedRecordsAndAggregates) {
  std::vector<CounterfactualRecord> records{
      make_record("a", "good fun film", "bad fun film"),
      make_record("b", "nice cast", "nice cast"),
      make_record("c", "whatever", ""),
  };
  records[2].failed_stage = "generation";
  ScriptedGenerator judge([](std::string_view prompt) {
    return prompt.find("'nice cast'\n[edited") != std::string_view::npos ? "no" : "yes";
  });
  UniformScorer scorer(-std::log(4.0));
  EvalOptions options;
  options.workers = 2;
  const auto report = evaluate_records(records, &judge, &scorer, kSentiment,
                                       PromptTemplate::builtin("flip_judge"), options);
  EXPECT_EQ(report.n_records, 3u);
  EXPECT_EQ(report.n_failed, 1u);
  ASSERT_EQ(report.per_record.size(), 2u);
  EXPECT_EQ(report.per_record[0].id, "a");
  EXPECT_EQ(report.per_record[0].verdict, JudgeVerdict::kYes);
  EXPECT_EQ(report.per_record[1].verdict, JudgeVerdict::kNo);
  ASSERT_TRUE(report.slfr);
  EXPECT_DOUBLE_EQ(report.slfr->slfr, 0.5);
  EXPECT_DOUBLE_EQ(*report.mean_ts, (1.0 / 3.0 + 0.0) / 2.0);
  EXPECT_EQ(*report.mean_ppl, 4.0);
  EXPECT_EQ(judge.prompts.size(), 2u);
  EXPECT_EQ(scorer.calls.load(), 2);

  const auto json = to_json(report);
  EXPECT_EQ(json.at("n_evaluated"), 2);
  EXPECT_EQ(json.at("per_record").size(), 2u);
  EXPECT_DOUBLE_EQ(json.at("slfr").get<double>(), 0.5);
}

TEST(EvaluateRecords, MetricErrorsAreCountedNotFatal) {
  std::vector<CounterfactualRecord> records{make_record("a", "one", "x")};
  UniformScorer scorer(-1.0);  // one word: nothing scored
  EvalOptions options;
  options.judge = false;
  const auto report =
      evaluate_records(records, nullptr, &scorer, kSentiment, PromptTemplate::builtin("flip_judge"), options);
  EXPECT_EQ(report.ppl_errors, 1u);
  EXPECT_FALSE(report.mean_ppl);
  EXPECT_FALSE(report.slfr);
  EXPECT_DOUBLE_EQ(*report.mean_ts, 1.0);
}

TEST(EvaluateRecords, MissingJudgeIsConfigError) {
  EXPECT_THROW(evaluate_records({}, nullptr, nullptr, kSentiment, PromptTemplate::builtin("flip_judge"),
                                EvalOptions{}),
               ConfigError);
}

}  // namespace
}  // namespace cfgen
