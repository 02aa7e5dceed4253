#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cfgen/core/binding.hpp"
#include "cfgen/core/types.hpp"

namespace cfgen {

struct LimeOptions {
  int n_samples = 1000;
  // nullopt selects 0.75 * sqrt(word count).
  std::optional<double> kernel_width;
  double ridge = 1e-3;
};

struct ShapOptions {
  int n_samples = 2048;
  // Texts with at most this many words are enumerated exactly.
  int exact_max_words = 12;
};

struct ModelBindings {
  EndpointBinding classifier = default_binding(EndpointKind::kClassifier);
  EndpointBinding embedder = default_binding(EndpointKind::kEmbedder, "all-mpnet-base-v2");
  EndpointBinding generator = default_binding(EndpointKind::kGenerator);
  EndpointBinding scorer = default_binding(EndpointKind::kScorer, "gpt2");
  EndpointBinding attributor = default_binding(EndpointKind::kAttributor);
};

struct RunConfig {
  std::filesystem::path dataset_path;
  LabelSet label_set;
  GenerationMethod method = GenerationMethod::kFitCF;
  AttributionMethod attribution_method = AttributionMethod::kLime;
  int num_clusters = 4;
  int candidates_per_round = 4;
  // Defaults to 2 * num_clusters.
  int demos_per_instance = 8;
  int num_important_words = 5;
  bool include_important_words = true;
  bool flip_verification = true;
  std::uint64_t seed = 0;
  int kmeans_max_iter = 100;
  int workers = 4;
  LimeOptions lime;
  ShapOptions shap;
  std::vector<double> faithfulness_thresholds{0.1, 0.2, 0.3, 0.4, 0.5};
  ModelBindings models;
  // Template kind name -> file overriding the built-in text.
  std::map<std::string, std::filesystem::path> prompt_overrides;
  // Evaluate records with the judge and scorer after generation.
  bool evaluate = true;
};

// Apply one "dotted.key=value" override to a raw config tree. The value is
// parsed as JSON when possible, otherwise taken as a string.
void apply_override(nlohmann::json& tree, const std::string& assignment);

// Parse and validate. Relative paths resolve against base_dir. Throws
// ConfigError whose message starts with the offending field path.
RunConfig parse_run_config(const nlohmann::json& tree, const std::filesystem::path& base_dir = {});

RunConfig load_run_config(const std::filesystem::path& path,
                          const std::vector<std::string>& overrides = {});

// Canonical tree (every field explicit); parse_run_config(to_json(c)) == c.
nlohmann::json to_json(const RunConfig& config);
nlohmann::json to_json(const EndpointBinding& binding);

// Short hex digest of the canonical config.
std::string config_hash(const RunConfig& config);

}  // namespace cfgen
