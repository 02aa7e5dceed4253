#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cfgen/eval/report.hpp"
#include "cfgen/pipeline/demonstrations.hpp"

namespace cfgen {

// More than this fraction of failed records marks a run degraded.
inline constexpr double kDegradedFailureFraction = 0.10;

struct RunReport {
  std::vector<CounterfactualRecord> records;
  std::optional<DemonstrationPool> demonstrations;
  std::optional<EvalReport> evaluation;
  std::size_t n_failed = 0;
  bool degraded = false;
  std::vector<std::string> warnings;
};

// Generates one record per instance with the configured method, then (if
// config.evaluate) judges and scores them. Throws DatasetError on an empty
// dataset before any model call.
RunReport run_experiment(std::span<const Instance> dataset, const PipelineContext& ctx);

// report.json contents. Free of paths and timestamps, so identical runs
// serialize identically.
nlohmann::json report_json(const RunReport& report, const RunConfig& config);

// Writes records.jsonl, report.json and, for few-shot runs,
// demonstrations.jsonl plus the clustering report. Returns the written paths.
std::vector<std::filesystem::path> write_run_artifacts(const std::filesystem::path& run_dir,
                                                       const RunReport& report,
                                                       const RunConfig& config);

// "<YYYYmmdd-HHMMSS>-<config hash>" in UTC.
std::string run_directory_name(const RunConfig& config);

struct AblationCell {
  std::string name;
  RunConfig config;
  bool is_full = false;
};

// {important words on/off} x {demos = k, 2k} x {verification on/off}, few-shot
// method forced. The full cell (words on, 2k, verification on) comes first.
std::vector<AblationCell> ablation_grid(const RunConfig& base);

struct AblationRow {
  std::string name;
  bool include_important_words = true;
  int demos_per_instance = 0;
  bool flip_verification = true;
  nlohmann::json report;
};

// cell, flags, then value and signed delta versus the first row (the full
// cell) for slfr, ppl and ts, then n_failed.
std::string ablation_table_csv(std::span<const AblationRow> rows);

}  // namespace cfgen
