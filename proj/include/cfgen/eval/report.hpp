#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cfgen/core/models.hpp"
#include "cfgen/eval/judge.hpp"
#include "cfgen/pipeline/prompts.hpp"

namespace cfgen {

struct RecordEvaluation {
  std::string id;
  JudgeVerdict verdict = JudgeVerdict::kError;
  std::optional<double> ppl;
  std::optional<double> ts;
  // "ppl: ..." / "ts: ..." for metrics undefined on this record.
  std::vector<std::string> metric_errors;
};

struct EvalReport {
  std::size_t n_records = 0;
  // Failed generations are excluded from every metric.
  std::size_t n_failed = 0;
  std::optional<SlfrResult> slfr;
  std::optional<double> mean_ppl;
  std::optional<double> mean_ts;
  std::size_t ppl_errors = 0;
  std::size_t ts_errors = 0;
  std::vector<RecordEvaluation> per_record;
};

struct EvalOptions {
  bool judge = true;
  bool fluency = true;
  int workers = 1;
};

// Judges flips, scores PPL of the counterfactual and TS against the original
// for every successful record. Per-record rows keep record order.
EvalReport evaluate_records(std::span<const CounterfactualRecord> records, Generator* judge,
                            Scorer* scorer, const LabelSet& label_set,
                            const PromptTemplate& judge_template, const EvalOptions& options);

// Aggregates from per-record rows (also used to recompute and cross-check).
EvalReport aggregate(std::vector<RecordEvaluation> rows, std::size_t n_failed, bool judged);

nlohmann::json to_json(const EvalReport& report, bool include_rows = true);

// id,verdict,ppl,ts,metric_errors
void write_eval_csv(const std::filesystem::path& path, const EvalReport& report);

}  // namespace cfgen
