#include "cfgen/eval/report.hpp"

#include <fstream>
#include <iomanip>

#include "cfgen/core/errors.hpp"
#include "cfgen/core/parallel.hpp"
#include "cfgen/eval/metrics.hpp"

namespace cfgen {

using nlohmann::json;

EvalReport evaluate_records(std::span<const CounterfactualRecord> records, Generator* judge,
                            Scorer* scorer, const LabelSet& label_set,
                            const PromptTemplate& judge_template, const EvalOptions& options) {
  if (options.judge && judge == nullptr) throw ConfigError("models.generator: judge not configured");
  if (options.fluency && scorer == nullptr) throw ConfigError("models.scorer: not configured");

  std::vector<const CounterfactualRecord*> ok;
  for (const auto& record : records) {
    if (record.succeeded()) ok.push_back(&record);
  }
  std::vector<RecordEvaluation> rows(ok.size());
  parallel_for(ok.size(), options.workers, [&](std::size_t i) {
    const CounterfactualRecord& record = *ok[i];
    RecordEvaluation& row = rows[i];
    row.id = record.instance.id;
    if (options.judge) {
      row.verdict = judge_flip(record.instance.text, record.counterfactual_text, *judge, label_set,
                               judge_template);
    }
    if (options.fluency) {
      try {
        row.ppl = perplexity(record.counterfactual_text, *scorer);
      } catch (const MetricError& e) {
        row.metric_errors.push_back(std::string("ppl: ") + e.what());
      }
    }
    try {
      row.ts = textual_similarity(record.instance.text, record.counterfactual_text);
    } catch (const MetricError& e) {
      row.metric_errors.push_back(std::string("ts: ") + e.what());
    }
  });
  return aggregate(std::move(rows), records.size() - ok.size(), options.judge);
}

EvalReport aggregate(std::vector<RecordEvaluation> rows, std::size_t n_failed, bool judged) {
  EvalReport report;
  report.n_records = rows.size() + n_failed;
  report.n_failed = n_failed;
  if (judged && !rows.empty()) {
    std::vector<JudgeVerdict> verdicts;
    for (const auto& row : rows) verdicts.push_back(row.verdict);
    report.slfr = slfr(verdicts);
  }
  double ppl_sum = 0.0;
  double ts_sum = 0.0;
  std::size_t ppl_n = 0;
  std::size_t ts_n = 0;
  for (const auto& row : rows) {
    if (row.ppl) {
      ppl_sum += *row.ppl;
      ++ppl_n;
    }
    if (row.ts) {
      ts_sum += *row.ts;
      ++ts_n;
    }
    for (const auto& error : row.metric_errors) {
      if (error.starts_with("ppl")) ++report.ppl_errors;
      if (error.starts_with("ts")) ++report.ts_errors;
    }
  }
  if (ppl_n > 0) report.mean_ppl = ppl_sum / static_cast<double>(ppl_n);
  if (ts_n > 0) report.mean_ts = ts_sum / static_cast<double>(ts_n);
  report.per_record = std::move(rows);
  return report;
}

namespace {

json optional_number(const std::optional<double>& value) {
  return value ? json(*value) : json(nullptr);
}

}  // namespace

json to_json(const EvalReport& report, bool include_rows) {
  json out = {{"n_records", report.n_records},
              {"n_evaluated", report.n_records - report.n_failed},
              {"n_failed", report.n_failed},
              {"mean_ppl", optional_number(report.mean_ppl)},
              {"mean_ts", optional_number(report.mean_ts)},
              {"ppl_errors", report.ppl_errors},
              {"ts_errors", report.ts_errors}};
  if (report.slfr) {
    out["slfr"] = report.slfr->slfr;
    out["non_flip_rate"] = report.slfr->non_flip_rate;
    out["judge_error_rate"] = report.slfr->judge_error_rate;
  } else {
    out["slfr"] = nullptr;
    out["non_flip_rate"] = nullptr;
    out["judge_error_rate"] = nullptr;
  }
  if (include_rows) {
    json rows = json::array();
    for (const auto& row : report.per_record) {
      rows.push_back({{"id", row.id},
                      {"verdict", report.slfr ? json(to_string(row.verdict)) : json(nullptr)},
                      {"ppl", optional_number(row.ppl)},
                      {"ts", optional_number(row.ts)},
                      {"metric_errors", row.metric_errors}});
    }
    out["per_record"] = std::move(rows);
  }
  return out;
}

void write_eval_csv(const std::filesystem::path& path, const EvalReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Error::Category::kInternal, "cannot write " + path.string());
  out << "id,verdict,ppl,ts,metric_errors\n" << std::setprecision(17);
  for (const auto& row : report.per_record) {
    out << row.id << ',' << (report.slfr ? to_string(row.verdict) : "") << ',';
    if (row.ppl) out << *row.ppl;
    out << ',';
    if (row.ts) out << *row.ts;
    out << ',';
    std::string joined;
    for (const auto& e : row.metric_errors) joined += (joined.empty() ? "" : "; ") + e;
    out << '"' << joined << "\"\n";
  }
}

}  // namespace cfgen
