#include "cfgen/cli/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "cfgen/core/dataset.hpp"
#include "cfgen/core/manifest.hpp"
#include "cfgen/core/records.hpp"
#include "cfgen/core/run_config.hpp"
#include "cfgen/eval/report.hpp"
#include "cfgen/faithfulness/faithfulness.hpp"
#include "cfgen/gateway/gateway.hpp"
#include "cfgen/pipeline/experiment.hpp"
#include "cfgen/simd/kernels.hpp"

namespace cfgen::cli {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(Error::Category category) {
  switch (category) {
    case Error::Category::kConfig:
      return kExitConfig;
    case Error::Category::kTransport:
    case Error::Category::kProtocol:
    case Error::Category::kCapability:
    case Error::Category::kCacheMiss:
      return kExitEndpoint;
    case Error::Category::kDataset:
    case Error::Category::kGeneration:
    case Error::Category::kMetric:
    case Error::Category::kInternal:
      return kExitFatalInput;
  }
  return kExitFatalInput;
}

namespace {

struct CommonOptions {
  std::string config;
  std::vector<std::string> sets;
  std::string cache_dir = ".cfgen-cache";
  bool offline = false;
  std::optional<std::uint64_t> seed;
  std::string out = "runs";
  std::string run_dir;
};

void add_common(CLI::App* sub, CommonOptions& o, bool needs_config = true) {
  auto* config = sub->add_option("--config", o.config, "Run configuration (JSON)");
  if (needs_config) config->required();
  sub->add_option("--set", o.sets, "Override a config field: dotted.key=value (repeatable)");
  sub->add_option("--cache-dir", o.cache_dir, "Replay cache directory");
  sub->add_flag("--offline", o.offline, "Fail on cache misses instead of calling endpoints");
  sub->add_option("--seed", o.seed, "Run seed (same as --set seed=N)");
  sub->add_option("--out", o.out, "Directory that receives run directories");
  sub->add_option("--run-dir", o.run_dir, "Exact output directory (overrides --out naming)");
}

std::vector<std::string> overrides_of(const CommonOptions& o) {
  std::vector<std::string> overrides = o.sets;
  if (o.seed) overrides.push_back("seed=" + std::to_string(*o.seed));
  return overrides;
}

RunConfig load_config(const CommonOptions& o) {
  return load_run_config(o.config, overrides_of(o));
}

std::unique_ptr<ModelGateway> make_gateway(const RunConfig& config, const CommonOptions& o,
                                           std::shared_ptr<Transport> transport) {
  GatewayOptions options;
  options.cache_dir = o.cache_dir;
  options.offline = o.offline;
  if (!transport) transport = make_default_transport();
  return std::make_unique<ModelGateway>(config.models, config.label_set, options,
                                        std::move(transport));
}

ModelSet models_of(ModelGateway& gateway) {
  return {&gateway.classifier(), &gateway.generator(), &gateway.embedder(), &gateway.scorer(),
          &gateway.attributor()};
}

void write_json(const fs::path& path, const json& value) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Error::Category::kInternal, "cannot write " + path.string());
  out << value.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DatasetError(path.string() + ": " + e.what());
  }
}

json stats_json(const GatewayStats& stats) {
  static constexpr const char* kKinds[] = {"classifier", "embedder", "generator", "scorer",
                                           "attributor"};
  json network = json::object();
  json hits = json::object();
  for (std::size_t i = 0; i < 5; ++i) {
    network[kKinds[i]] = stats.network_calls[i];
    hits[kKinds[i]] = stats.cache_hits[i];
  }
  return {{"network_calls", network}, {"cache_hits", hits},
          {"total_network_calls", stats.total_network_calls()}};
}

GatewayStats minus(const GatewayStats& after, const GatewayStats& before) {
  GatewayStats d;
  for (std::size_t i = 0; i < 5; ++i) {
    d.network_calls[i] = after.network_calls[i] - before.network_calls[i];
    d.cache_hits[i] = after.cache_hits[i] - before.cache_hits[i];
  }
  return d;
}

struct ExecutedRun {
  RunReport report;
  std::vector<fs::path> artifacts;
};

// One pipeline run into run_dir: records, report, manifest, and the call
// statistics of this run only.
ExecutedRun execute_run(const RunConfig& config, const std::vector<std::string>& overrides,
                        std::span<const Instance> dataset, ModelGateway& gateway,
                        const fs::path& run_dir, std::ostream& err) {
  gateway.reset_transcript();
  const GatewayStats before = gateway.stats();
  if (config.evaluate) gateway.require_logprob_capability();
  const PromptSet prompts(config.prompt_overrides);
  const PipelineContext ctx{config, models_of(gateway), prompts};

  ExecutedRun run;
  run.report = run_experiment(dataset, ctx);
  run.artifacts = write_run_artifacts(run_dir, run.report, config);

  RunManifest manifest = make_manifest(config, overrides, gateway.transcript_keys());
  write_manifest(run_dir / "manifest.json", manifest);
  run.artifacts.push_back(run_dir / "manifest.json");

  const GatewayStats delta = minus(gateway.stats(), before);
  write_json(run_dir / "call_stats.json", stats_json(delta));
  run.artifacts.push_back(run_dir / "call_stats.json");
  for (const auto& warning : run.report.warnings) err << "warning: " << warning << '\n';
  return run;
}

CommandOutcome cmd_run(const CommonOptions& o, std::ostream& out, std::ostream& err,
                       std::shared_ptr<Transport> transport) {
  const RunConfig config = load_config(o);
  const auto dataset = load_dataset(config.dataset_path, config.label_set);
  auto gateway = make_gateway(config, o, std::move(transport));
  const fs::path run_dir = o.run_dir.empty() ? fs::path(o.out) / run_directory_name(config)
                                             : fs::path(o.run_dir);
  ExecutedRun run = execute_run(config, overrides_of(o), dataset, *gateway, run_dir, err);
  out << run_dir.string() << '\n';
  return {kExitOk, std::move(run.artifacts)};
}

CommandOutcome cmd_ablate(const CommonOptions& o, std::ostream& out, std::ostream& err,
                          std::shared_ptr<Transport> transport) {
  const RunConfig base = load_config(o);
  const auto dataset = load_dataset(base.dataset_path, base.label_set);
  auto gateway = make_gateway(base, o, std::move(transport));
  const fs::path root = o.run_dir.empty()
                            ? fs::path(o.out) / ("ablation-" + run_directory_name(base))
                            : fs::path(o.run_dir);
  CommandOutcome outcome;
  std::vector<AblationRow> rows;
  for (const AblationCell& cell : ablation_grid(base)) {
    std::vector<std::string> overrides = overrides_of(o);
    overrides.push_back("method=fitcf");
    overrides.push_back("ablation.include_important_words=" +
                        std::string(cell.config.include_important_words ? "true" : "false"));
    overrides.push_back("demonstrations.per_instance=" +
                        std::to_string(cell.config.demos_per_instance));
    overrides.push_back("ablation.flip_verification=" +
                        std::string(cell.config.flip_verification ? "true" : "false"));
    ExecutedRun run = execute_run(cell.config, overrides, dataset, *gateway, root / cell.name, err);
    rows.push_back({cell.name, cell.config.include_important_words,
                    cell.config.demos_per_instance, cell.config.flip_verification,
                    report_json(run.report, cell.config)});
    for (auto& path : run.artifacts) outcome.artifacts.push_back(std::move(path));
  }
  const fs::path table = root / "ablation_table.csv";
  std::ofstream(table, std::ios::binary) << ablation_table_csv(rows);
  outcome.artifacts.push_back(table);
  out << root.string() << '\n';
  return outcome;
}

CommandOutcome cmd_evaluate(const CommonOptions& o, const std::string& records_path,
                            const std::string& output, const std::string& csv, std::ostream& out,
                            std::shared_ptr<Transport> transport) {
  const RunConfig config = load_config(o);
  const auto records = read_records(records_path);
  auto gateway = make_gateway(config, o, std::move(transport));
  gateway->require_logprob_capability();
  const PromptSet prompts(config.prompt_overrides);
  EvalOptions options;
  options.workers = config.workers;
  const EvalReport report = evaluate_records(records, &gateway->generator(), &gateway->scorer(),
                                             config.label_set, prompts.get("flip_judge"), options);
  const fs::path target =
      output.empty() ? fs::path(records_path).parent_path() / "evaluation.json" : fs::path(output);
  write_json(target, to_json(report));
  CommandOutcome outcome{kExitOk, {target}};
  if (!csv.empty()) {
    write_eval_csv(csv, report);
    outcome.artifacts.push_back(csv);
  }
  out << target.string() << '\n';
  return outcome;
}

std::vector<AttributionMethod> parse_methods(const std::string& list) {
  std::vector<AttributionMethod> methods;
  std::stringstream stream(list);
  std::string name;
  while (std::getline(stream, name, ',')) {
    if (!name.empty()) methods.push_back(parse_attribution_method(name));
  }
  if (methods.empty()) throw ConfigError("--methods: no attribution method given");
  return methods;
}

CommandOutcome cmd_faithfulness(const CommonOptions& o, const std::string& methods_list,
                                std::size_t limit, const std::string& output, std::ostream& out,
                                std::shared_ptr<Transport> transport) {
  const RunConfig config = load_config(o);
  auto dataset = load_dataset(config.dataset_path, config.label_set);
  if (limit > 0 && dataset.size() > limit) dataset.resize(limit);
  const auto methods = parse_methods(methods_list);
  auto gateway = make_gateway(config, o, std::move(transport));
  const FaithfulnessReport report = evaluate_faithfulness(
      dataset, methods, gateway->classifier(), &gateway->attributor(), config);
  const fs::path target = output.empty() ? fs::path(o.out) / "faithfulness.json" : fs::path(output);
  write_json(target, to_json(report));
  out << target.string() << '\n';
  return {kExitOk, {target}};
}

CommandOutcome cmd_correlate(const std::string& faithfulness_path,
                             const std::vector<std::string>& reports, const std::string& output,
                             std::ostream& out) {
  const FaithfulnessReport faith = faithfulness_from_json(read_json(faithfulness_path));
  std::map<std::string, std::map<std::string, double>> quality;  // metric -> method -> value
  for (const std::string& entry : reports) {
    const auto eq = entry.find('=');
    if (eq == std::string::npos) throw ConfigError("--report: expected method=path, got '" + entry + "'");
    const std::string method(to_string(parse_attribution_method(entry.substr(0, eq))));
    const json report = read_json(entry.substr(eq + 1));
    const json& evaluation = report.at("evaluation");
    if (evaluation.is_null()) throw DatasetError(entry.substr(eq + 1) + ": run was not evaluated");
    for (const auto& [metric, key] : {std::pair{"slfr", "slfr"}, {"ppl", "mean_ppl"}, {"ts", "mean_ts"}}) {
      if (!evaluation.at(key).is_null()) quality[metric][method] = evaluation.at(key).get<double>();
    }
  }
  std::map<std::string, std::map<std::string, double>> faithfulness;
  for (const auto& [method, cell] : faith.methods) {
    if (!quality["slfr"].contains(method)) continue;
    faithfulness["comprehensiveness"][method] = cell.comprehensiveness;
    faithfulness["sufficiency"][method] = cell.sufficiency;
    if (cell.tau_defined()) faithfulness["tau_loo"][method] = cell.tau_loo;
  }
  json taus = json::object();
  for (const auto& [qm, qv] : quality) {
    for (const auto& [fm, fv] : faithfulness) {
      try {
        taus[qm][fm] = correlate_quality_faithfulness(qv, qm, fv, fm);
      } catch (const MetricError&) {
        taus[qm][fm] = nullptr;
      }
    }
  }
  const json result = {{"dataset", faith.dataset},
                       {"quality", quality},
                       {"faithfulness", faithfulness},
                       {"kendall_tau", taus}};
  const fs::path target = output.empty() ? fs::path("correlation.json") : fs::path(output);
  write_json(target, result);
  out << target.string() << '\n';
  return {kExitOk, {target}};
}

CommandOutcome cmd_cache_inspect(const std::string& cache_dir, std::ostream& out) {
  if (!fs::is_directory(cache_dir)) throw ConfigError("--cache-dir: " + cache_dir + " is not a directory");
  std::map<std::string, std::size_t> per_kind;
  std::size_t total = 0;
  for (const auto& entry : fs::directory_iterator(cache_dir)) {
    if (!entry.is_regular_file() || entry.path().filename().string().starts_with(".")) continue;
    const auto e = ResponseCache::read_entry(entry.path());
    ++per_kind[e.header.value("kind", std::string("unknown"))];
    ++total;
  }
  out << "entries: " << total << '\n';
  for (const auto& [kind, count] : per_kind) out << "  " << kind << ": " << count << '\n';
  return {};
}

CommandOutcome cmd_cache_warm(const CommonOptions& o, std::ostream& out, std::ostream& err,
                              std::shared_ptr<Transport> transport) {
  if (o.offline) throw ConfigError("--offline: cannot warm a cache offline");
  const RunConfig config = load_config(o);
  const auto dataset = load_dataset(config.dataset_path, config.label_set);
  auto gateway = make_gateway(config, o, std::move(transport));
  if (config.evaluate) gateway->require_logprob_capability();
  const PromptSet prompts(config.prompt_overrides);
  const PipelineContext ctx{config, models_of(*gateway), prompts};
  const RunReport report = run_experiment(dataset, ctx);
  for (const auto& warning : report.warnings) err << "warning: " << warning << '\n';
  out << "network calls: " << gateway->stats().total_network_calls() << '\n';
  return {};
}

std::string csv_field(const std::string& value) {
  if (value.find_first_of(",\"\n") == std::string::npos) return value;
  std::string quoted = "\"";
  for (char c : value) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + '"';
}

std::string number_or_empty(const json& value) {
  if (value.is_null()) return "";
  std::ostringstream s;
  s.precision(17);
  s << value.get<double>();
  return s.str();
}

CommandOutcome cmd_report(const std::string& run_dir, std::ostream& out) {
  const fs::path dir(run_dir);
  const auto records = read_records(dir / "records.jsonl");
  const json report = read_json(dir / "report.json");
  std::map<std::string, json> rows;
  if (!report.at("evaluation").is_null()) {
    for (const auto& row : report["evaluation"].at("per_record")) rows[row.at("id").get<std::string>()] = row;
  }
  const fs::path target = dir / "records.csv";
  std::ofstream csv(target, std::ios::binary);
  csv << "id,predicted_label,method,flip_verified,no_edit,failed_stage,verdict,ppl,ts,"
         "important_words,counterfactual_text\n";
  for (const auto& r : records) {
    const auto it = rows.find(r.instance.id);
    const json row = it == rows.end() ? json::object() : it->second;
    std::string words;
    if (r.important_words) {
      for (const auto& w : r.important_words->words) words += (words.empty() ? "" : " ") + w;
    }
    csv << csv_field(r.instance.id) << ',' << csv_field(r.predicted_label) << ','
        << to_string(r.method) << ',' << to_string(r.flip_verified) << ','
        << (r.no_edit ? "true" : "false") << ',' << csv_field(r.failed_stage) << ','
        << (row.contains("verdict") && !row["verdict"].is_null() ? row["verdict"].get<std::string>() : "")
        << ',' << (row.contains("ppl") ? number_or_empty(row["ppl"]) : "") << ','
        << (row.contains("ts") ? number_or_empty(row["ts"]) : "") << ',' << csv_field(words) << ','
        << csv_field(r.counterfactual_text) << '\n';
  }
  CommandOutcome outcome{kExitOk, {target}};
  if (fs::exists(dir / "clustering_pca.csv")) outcome.artifacts.push_back(dir / "clustering_pca.csv");
  for (const auto& path : outcome.artifacts) out << path.string() << '\n';
  return outcome;
}

}  // namespace

CommandOutcome run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
                       std::shared_ptr<Transport> transport) {
  CLI::App app{"Counterfactual generation, evaluation and attribution analysis", "cfgen"};
  app.require_subcommand(1);
  app.set_version_flag("--version", code_version());

  CommonOptions common;
  auto* run = app.add_subcommand("run", "Generate counterfactuals for a dataset");
  add_common(run, common);

  auto* ablate = app.add_subcommand("ablate", "Run the 2x2x2 few-shot ablation grid");
  add_common(ablate, common);

  std::string records_path, output, csv;
  auto* evaluate = app.add_subcommand("evaluate", "Compute SLFR, PPL and TS for a records file");
  add_common(evaluate, common);
  evaluate->add_option("--records", records_path, "records.jsonl to evaluate")->required();
  evaluate->add_option("--output", output, "Evaluation JSON (default: next to the records)");
  evaluate->add_option("--csv", csv, "Also write the per-record breakdown as CSV");

  std::string methods = "lime,shap,occlusion";
  std::size_t limit = 0;
  auto* faith = app.add_subcommand("faithfulness", "Comprehensiveness, sufficiency and tau-LOO");
  add_common(faith, common);
  faith->add_option("--methods", methods, "Comma-separated attribution methods");
  faith->add_option("--limit", limit, "Evaluate only the first N instances (0 = all)");
  faith->add_option("--output", output, "Output path (default: <out>/faithfulness.json)");

  std::string faithfulness_path;
  std::vector<std::string> reports;
  auto* correlate = app.add_subcommand("correlate", "Kendall tau between quality and faithfulness rankings");
  correlate->add_option("--faithfulness", faithfulness_path, "faithfulness.json")->required();
  correlate->add_option("--report", reports, "method=path/to/report.json (repeatable)")->required();
  correlate->add_option("--output", output, "Output path (default: correlation.json)");

  auto* cache = app.add_subcommand("cache", "Inspect or warm the replay cache");
  cache->require_subcommand(1);
  std::string inspect_dir = ".cfgen-cache";
  auto* inspect = cache->add_subcommand("inspect", "Count cached responses per endpoint kind");
  inspect->add_option("--cache-dir", inspect_dir, "Replay cache directory");
  auto* warm = cache->add_subcommand("warm", "Run a configuration only to fill the cache");
  add_common(warm, common);

  std::string report_dir;
  auto* report = app.add_subcommand("report", "Export per-record CSV and plot data for a run");
  report->add_option("--run-dir", report_dir, "Run directory")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return {};
  } catch (const CLI::CallForVersion&) {
    out << code_version() << '\n';
    return {};
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return {kExitConfig, {}};
  }

  try {
    if (run->parsed()) return cmd_run(common, out, err, transport);
    if (ablate->parsed()) return cmd_ablate(common, out, err, transport);
    if (evaluate->parsed()) return cmd_evaluate(common, records_path, output, csv, out, transport);
    if (faith->parsed()) return cmd_faithfulness(common, methods, limit, output, out, transport);
    if (correlate->parsed()) return cmd_correlate(faithfulness_path, reports, output, out);
    if (inspect->parsed()) return cmd_cache_inspect(inspect_dir, out);
    if (warm->parsed()) return cmd_cache_warm(common, out, err, transport);
    if (report->parsed()) return cmd_report(report_dir, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return {exit_code_for(e.category()), {}};
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return {kExitFatalInput, {}};
  }
  return {kExitConfig, {}};
}

}  // namespace cfgen::cli
