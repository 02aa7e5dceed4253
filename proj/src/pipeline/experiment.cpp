#include "cfgen/pipeline/experiment.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>

#include "cfgen/core/errors.hpp"
#include "cfgen/core/parallel.hpp"
#include "cfgen/core/records.hpp"
#include "cfgen/demo/report.hpp"

namespace cfgen {

using nlohmann::json;

RunReport run_experiment(std::span<const Instance> dataset, const PipelineContext& ctx) {
  const RunConfig& config = ctx.config;
  if (dataset.empty()) throw DatasetError("dataset is empty");

  RunReport report;
  const auto ell = static_cast<std::size_t>(config.demos_per_instance);
  if (config.method == GenerationMethod::kFitCF) {
    // One extra demonstration so every query still gets ell after excluding itself.
    report.demonstrations = build_demonstration_pool(dataset, ctx, ell + 1);
    if (report.demonstrations->shortfall()) {
      report.warnings.push_back("demonstration shortfall: built " +
                                std::to_string(report.demonstrations->demonstrations.size()) +
                                " of " + std::to_string(ell + 1) + " requested");
    }
  }

  report.records.resize(dataset.size());
  parallel_for(dataset.size(), config.workers, [&](std::size_t i) {
    const Instance& instance = dataset[i];
    switch (config.method) {
      case GenerationMethod::kZeroCF:
        report.records[i] = zerocf_generate(instance, ctx);
        break;
      case GenerationMethod::kFizle:
        report.records[i] = fizle_generate(instance, ctx);
        break;
      case GenerationMethod::kFitCF: {
        const auto demos = demonstrations_for(*report.demonstrations, instance.id, ell);
        if (demos.empty()) {
          CounterfactualRecord record;
          record.instance = instance;
          record.method = GenerationMethod::kFitCF;
          record.generator_model = ctx.models.generator->model_name();
          record.failed_stage = "demonstrations";
          record.error = "no demonstration other than the query itself";
          report.records[i] = std::move(record);
        } else {
          report.records[i] = fitcf_generate(instance, demos, ctx);
        }
        break;
      }
    }
  });

  for (const auto& record : report.records) {
    if (!record.succeeded()) ++report.n_failed;
  }
  const double failed_fraction =
      static_cast<double>(report.n_failed) / static_cast<double>(report.records.size());
  report.degraded = failed_fraction > kDegradedFailureFraction;
  if (report.degraded) {
    report.warnings.push_back("degraded run: " + std::to_string(report.n_failed) + " of " +
                              std::to_string(report.records.size()) + " records failed");
  }

  if (config.evaluate) {
    EvalOptions options;
    options.workers = config.workers;
    report.evaluation = evaluate_records(report.records, ctx.models.generator, ctx.models.scorer,
                                         config.label_set, ctx.prompts.get("flip_judge"), options);
  }
  return report;
}

json report_json(const RunReport& report, const RunConfig& config) {
  std::map<std::string, std::size_t> failed_stages;
  std::map<std::string, std::size_t> flips{{"accepted", 0}, {"rejected", 0}, {"unverified", 0}};
  std::size_t no_edit = 0;
  std::size_t with_hallucinations = 0;
  for (const auto& record : report.records) {
    if (!record.succeeded()) {
      ++failed_stages[record.failed_stage];
      continue;
    }
    ++flips[std::string(to_string(record.flip_verified))];
    if (record.no_edit) ++no_edit;
    if (!record.hallucinated_words.empty()) ++with_hallucinations;
  }
  const auto n = report.records.size();
  json out = {
      {"dataset", config.label_set.dataset_name()},
      {"method", to_string(config.method)},
      {"attribution_method",
       config.include_important_words ? json(to_string(config.attribution_method)) : json(nullptr)},
      {"ablation",
       {{"include_important_words", config.include_important_words},
        {"flip_verification", config.flip_verification},
        {"demos_per_instance", config.demos_per_instance}}},
      {"n_instances", n},
      {"n_failed", report.n_failed},
      {"failed_fraction", n == 0 ? 0.0 : static_cast<double>(report.n_failed) / static_cast<double>(n)},
      {"degraded", report.degraded},
      {"failed_stages", failed_stages},
      {"no_edit", no_edit},
      {"records_with_hallucinated_words", with_hallucinations},
      {"flip_verified", flips},
      {"demonstrations",
       report.demonstrations ? summary_json(*report.demonstrations) : json(nullptr)},
      {"evaluation", report.evaluation ? to_json(*report.evaluation) : json(nullptr)},
      {"warnings", report.warnings},
  };
  return out;
}

std::vector<std::filesystem::path> write_run_artifacts(const std::filesystem::path& run_dir,
                                                       const RunReport& report,
                                                       const RunConfig& config) {
  std::filesystem::create_directories(run_dir);
  std::vector<std::filesystem::path> written;
  write_records(run_dir / "records.jsonl", report.records);
  written.push_back(run_dir / "records.jsonl");
  {
    std::ofstream out(run_dir / "report.json", std::ios::binary);
    if (!out) throw Error(Error::Category::kInternal, "cannot write report.json in " + run_dir.string());
    out << report_json(report, config).dump(2) << '\n';
  }
  written.push_back(run_dir / "report.json");
  if (report.demonstrations) {
    std::ofstream out(run_dir / "demonstrations.jsonl", std::ios::binary);
    for (const auto& demo : report.demonstrations->demonstrations) out << to_json(demo).dump() << '\n';
    written.push_back(run_dir / "demonstrations.jsonl");
    for (auto& path : write_clustering_report(run_dir, report.demonstrations->clustering,
                                              report.demonstrations->embeddings)) {
      written.push_back(std::move(path));
    }
  }
  return written;
}

std::string run_directory_name(const RunConfig& config) {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%d-%H%M%S", &utc);
  return std::string(stamp) + "-" + config_hash(config);
}

std::vector<AblationCell> ablation_grid(const RunConfig& base) {
  std::vector<AblationCell> cells;
  for (bool words : {true, false}) {
    for (int factor : {2, 1}) {
      for (bool verify : {true, false}) {
        AblationCell cell;
        cell.config = base;
        cell.config.method = GenerationMethod::kFitCF;
        cell.config.include_important_words = words;
        cell.config.demos_per_instance = factor * base.num_clusters;
        cell.config.flip_verification = verify;
        cell.is_full = words && factor == 2 && verify;
        cell.name = std::string(words ? "words" : "no-words") + "_l" + (factor == 2 ? "2k" : "k") +
                    (verify ? "_verify" : "_no-verify");
        cells.push_back(std::move(cell));
      }
    }
  }
  return cells;
}

namespace {

std::optional<double> metric_of(const json& report, const char* key) {
  const json& evaluation = report.at("evaluation");
  if (evaluation.is_null() || evaluation.at(key).is_null()) return std::nullopt;
  return evaluation.at(key).get<double>();
}

std::string format_value(std::optional<double> v) {
  if (!v) return "NA";
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.6f", *v);
  return buffer;
}

std::string format_delta(std::optional<double> v, std::optional<double> full) {
  if (!v || !full) return "NA";
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%+.6f", *v - *full);
  std::string text = buffer;
  if (text == "-0.000000") text = "+0.000000";
  return text;
}

}  // namespace

std::string ablation_table_csv(std::span<const AblationRow> rows) {
  if (rows.empty()) throw std::invalid_argument("ablation table needs at least one row");
  const json& full = rows.front().report;
  static constexpr const char* kMetrics[] = {"slfr", "mean_ppl", "mean_ts"};
  std::ostringstream out;
  out << "cell,important_words,demos_per_instance,flip_verification,"
         "slfr,delta_slfr,ppl,delta_ppl,ts,delta_ts,n_failed\n";
  for (const auto& row : rows) {
    out << row.name << ',' << (row.include_important_words ? "on" : "off") << ','
        << row.demos_per_instance << ',' << (row.flip_verification ? "on" : "off");
    for (const char* metric : kMetrics) {
      const auto value = metric_of(row.report, metric);
      out << ',' << format_value(value) << ',' << format_delta(value, metric_of(full, metric));
    }
    out << ',' << row.report.at("n_failed").get<std::size_t>() << '\n';
  }
  return out.str();
}

}  // namespace cfgen
