#include "cfgen/core/run_config.hpp"

#include <fstream>
#include <set>

#include "cfgen/core/errors.hpp"
#include "cfgen/core/hash.hpp"

namespace cfgen {

namespace {

using json = nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw ConfigError(path + ": " + message);
}

std::string join_path(const std::string& parent, const std::string& key) {
  return parent.empty() ? key : parent + "." + key;
}

// Reads one object level, tracking which keys were consumed so leftovers can
// be reported as unknown fields.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
  }

  ~Section() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : node_.items()) {
      if (!used_.contains(key)) fail(join_path(path_, key), "unknown field");
    }
  }

  bool has(const std::string& key) {
    used_.insert(key);
    auto it = node_.find(key);
    return it != node_.end() && !it->is_null();
  }

  const json& raw(const std::string& key) {
    used_.insert(key);
    auto it = node_.find(key);
    if (it == node_.end() || it->is_null()) fail(path(key), "required field missing");
    return *it;
  }

  std::string path(const std::string& key) const { return join_path(path_, key); }

  template <typename T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    return convert<T>(key);
  }

  template <typename T>
  T require(const std::string& key) {
    if (!has(key)) fail(path(key), "required field missing");
    return convert<T>(key);
  }

 private:
  template <typename T>
  T convert(const std::string& key) {
    const json& value = node_.at(key);
    if constexpr (std::is_same_v<T, bool>) {
      if (!value.is_boolean()) fail(path(key), "expected a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!value.is_number_integer()) fail(path(key), "expected an integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!value.is_number()) fail(path(key), "expected a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!value.is_string()) fail(path(key), "expected a string");
    }
    try {
      return value.get<T>();
    } catch (const json::exception& e) {
      fail(path(key), e.what());
    }
  }

  const json& node_;
  std::string path_;
  std::set<std::string> used_;
};

void require_positive(const std::string& path, long long value) {
  if (value < 1) fail(path, "must be >= 1, got " + std::to_string(value));
}

EndpointBinding parse_binding(const json& node, const std::string& path, EndpointBinding binding) {
  Section s(node, path);
  binding.base_url = s.get<std::string>("base_url", binding.base_url);
  binding.model_name = s.get<std::string>("model", binding.model_name);
  binding.timeout_seconds = s.get<double>("timeout", binding.timeout_seconds);
  binding.max_retries = s.get<int>("max_retries", binding.max_retries);
  binding.max_in_flight = s.get<int>("max_in_flight", binding.max_in_flight);
  binding.api_key_env = s.get<std::string>("api_key_env", binding.api_key_env);
  binding.temperature = s.get<double>("temperature", binding.temperature);
  binding.max_new_tokens = s.get<int>("max_new_tokens", binding.max_new_tokens);
  if (!(binding.timeout_seconds > 0)) fail(s.path("timeout"), "must be > 0");
  if (binding.max_retries < 1) fail(s.path("max_retries"), "must be >= 1");
  require_positive(s.path("max_in_flight"), binding.max_in_flight);
  if (binding.temperature < 0) fail(s.path("temperature"), "must be >= 0");
  require_positive(s.path("max_new_tokens"), binding.max_new_tokens);
  return binding;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
  std::filesystem::path p(value);
  if (p.is_relative() && !base.empty()) p = base / p;
  return p.lexically_normal();
}

}  // namespace

std::string_view to_string(EndpointKind kind) {
  switch (kind) {
    case EndpointKind::kClassifier: return "classifier";
    case EndpointKind::kEmbedder: return "embedder";
    case EndpointKind::kGenerator: return "generator";
    case EndpointKind::kScorer: return "scorer";
    case EndpointKind::kAttributor: return "attributor";
  }
  return "?";
}

void apply_override(json& tree, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' is not of the form dotted.key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (value.is_discarded()) value = text;

  json* node = &tree;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
    if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
    if (!node->is_object()) {
      throw ConfigError(key + ": cannot descend into a non-object value");
    }
    if (dot == std::string::npos) {
      (*node)[part] = std::move(value);
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

RunConfig parse_run_config(const json& tree, const std::filesystem::path& base_dir) {
  RunConfig config;
  Section root(tree, "");

  {
    Section dataset(root.raw("dataset"), "dataset");
    config.dataset_path = resolve(base_dir, dataset.require<std::string>("path"));
    const auto name = dataset.get<std::string>("name", "dataset");
    if (!dataset.has("labels") || !dataset.raw("labels").is_array()) {
      fail("dataset.labels", "expected an array of label names");
    }
    std::vector<std::string> labels;
    for (const auto& label : dataset.raw("labels")) {
      if (!label.is_string()) fail("dataset.labels", "labels must be strings");
      labels.push_back(label.get<std::string>());
    }
    try {
      config.label_set = LabelSet(std::move(labels), name);
    } catch (const ConfigError& e) {
      fail("dataset.labels", e.what());
    }
  }

  try {
    config.method = parse_generation_method(root.get<std::string>("method", "fitcf"));
  } catch (const ConfigError& e) {
    fail("method", e.what());
  }
  config.seed = root.get<std::uint64_t>("seed", 0);
  config.workers = root.get<int>("workers", config.workers);
  require_positive("workers", config.workers);
  config.evaluate = root.get<bool>("evaluate", config.evaluate);

  if (root.has("attribution")) {
    Section attribution(root.raw("attribution"), "attribution");
    try {
      config.attribution_method =
          parse_attribution_method(attribution.get<std::string>("method", "lime"));
    } catch (const ConfigError& e) {
      fail("attribution.method", e.what());
    }
    config.num_important_words =
        attribution.get<int>("num_important_words", config.num_important_words);
    require_positive("attribution.num_important_words", config.num_important_words);
    if (attribution.has("lime")) {
      Section lime(attribution.raw("lime"), "attribution.lime");
      config.lime.n_samples = lime.get<int>("n_samples", config.lime.n_samples);
      if (lime.has("kernel_width")) {
        config.lime.kernel_width = lime.get<double>("kernel_width", 0.0);
        if (!(*config.lime.kernel_width > 0)) fail("attribution.lime.kernel_width", "must be > 0");
      }
      config.lime.ridge = lime.get<double>("ridge", config.lime.ridge);
      require_positive("attribution.lime.n_samples", config.lime.n_samples);
      if (!(config.lime.ridge >= 0)) fail("attribution.lime.ridge", "must be >= 0");
    }
    if (attribution.has("shap")) {
      Section shap(attribution.raw("shap"), "attribution.shap");
      config.shap.n_samples = shap.get<int>("n_samples", config.shap.n_samples);
      config.shap.exact_max_words = shap.get<int>("exact_max_words", config.shap.exact_max_words);
      require_positive("attribution.shap.n_samples", config.shap.n_samples);
      if (config.shap.exact_max_words < 0 || config.shap.exact_max_words > 20) {
        fail("attribution.shap.exact_max_words", "must be in [0, 20]");
      }
    }
  }

  bool explicit_demos = false;
  if (root.has("demonstrations")) {
    Section demos(root.raw("demonstrations"), "demonstrations");
    config.num_clusters = demos.get<int>("num_clusters", config.num_clusters);
    config.candidates_per_round = demos.get<int>("candidates_per_round", config.num_clusters);
    if (demos.has("per_instance")) {
      config.demos_per_instance = demos.get<int>("per_instance", 0);
      explicit_demos = true;
    }
    config.kmeans_max_iter = demos.get<int>("kmeans_max_iter", config.kmeans_max_iter);
  } else {
    config.candidates_per_round = config.num_clusters;
  }
  require_positive("demonstrations.num_clusters", config.num_clusters);
  require_positive("demonstrations.candidates_per_round", config.candidates_per_round);
  require_positive("demonstrations.kmeans_max_iter", config.kmeans_max_iter);
  if (!explicit_demos) config.demos_per_instance = 2 * config.num_clusters;
  if (config.method == GenerationMethod::kFitCF) {
    require_positive("demonstrations.per_instance", config.demos_per_instance);
  } else if (config.demos_per_instance < 0) {
    fail("demonstrations.per_instance", "must be >= 0");
  }

  if (root.has("ablation")) {
    Section ablation(root.raw("ablation"), "ablation");
    config.include_important_words =
        ablation.get<bool>("include_important_words", config.include_important_words);
    config.flip_verification = ablation.get<bool>("flip_verification", config.flip_verification);
  }

  if (root.has("faithfulness")) {
    Section faith(root.raw("faithfulness"), "faithfulness");
    if (faith.has("thresholds")) {
      const json& t = faith.raw("thresholds");
      if (!t.is_array() || t.empty()) fail("faithfulness.thresholds", "expected a non-empty array");
      config.faithfulness_thresholds.clear();
      for (const auto& q : t) {
        if (!q.is_number() || !(q.get<double>() > 0.0) || q.get<double>() > 1.0) {
          fail("faithfulness.thresholds", "thresholds must lie in (0, 1]");
        }
        config.faithfulness_thresholds.push_back(q.get<double>());
      }
    }
  }

  {
    Section models(root.raw("models"), "models");
    auto bind = [&](const char* key, EndpointBinding& binding, bool required) {
      if (models.has(key)) {
        binding = parse_binding(models.raw(key), models.path(key), binding);
      } else if (required) {
        fail(models.path(key), "required field missing");
      }
    };
    bind("classifier", config.models.classifier, true);
    bind("generator", config.models.generator, true);
    bind("embedder", config.models.embedder, false);
    bind("scorer", config.models.scorer, false);
    bind("attributor", config.models.attributor, false);
  }

  if (root.has("prompts")) {
    Section prompts(root.raw("prompts"), "prompts");
    for (const char* kind : {"zerocf", "fitcf", "fizle_words", "fizle_edit", "flip_judge"}) {
      if (prompts.has(kind)) {
        config.prompt_overrides[kind] = resolve(base_dir, prompts.get<std::string>(kind, ""));
      }
    }
  }
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path,
                          const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  json tree = json::parse(in, nullptr, /*allow_exceptions=*/false, /*ignore_comments=*/true);
  if (tree.is_discarded()) throw ConfigError(path.string() + ": not valid JSON");
  for (const auto& assignment : overrides) apply_override(tree, assignment);
  return parse_run_config(tree, path.parent_path());
}

json to_json(const EndpointBinding& binding) {
  return json{{"base_url", binding.base_url},
              {"model", binding.model_name},
              {"timeout", binding.timeout_seconds},
              {"max_retries", binding.max_retries},
              {"max_in_flight", binding.max_in_flight},
              {"api_key_env", binding.api_key_env},
              {"temperature", binding.temperature},
              {"max_new_tokens", binding.max_new_tokens}};
}

json to_json(const RunConfig& config) {
  json lime{{"n_samples", config.lime.n_samples}, {"ridge", config.lime.ridge}};
  if (config.lime.kernel_width) lime["kernel_width"] = *config.lime.kernel_width;
  json prompts = json::object();
  for (const auto& [kind, path] : config.prompt_overrides) prompts[kind] = path.string();
  return json{
      {"dataset",
       {{"path", config.dataset_path.string()},
        {"name", config.label_set.dataset_name()},
        {"labels", config.label_set.labels()}}},
      {"method", to_string(config.method)},
      {"seed", config.seed},
      {"workers", config.workers},
      {"evaluate", config.evaluate},
      {"attribution",
       {{"method", to_string(config.attribution_method)},
        {"num_important_words", config.num_important_words},
        {"lime", lime},
        {"shap",
         {{"n_samples", config.shap.n_samples},
          {"exact_max_words", config.shap.exact_max_words}}}}},
      {"demonstrations",
       {{"num_clusters", config.num_clusters},
        {"candidates_per_round", config.candidates_per_round},
        {"per_instance", config.demos_per_instance},
        {"kmeans_max_iter", config.kmeans_max_iter}}},
      {"ablation",
       {{"include_important_words", config.include_important_words},
        {"flip_verification", config.flip_verification}}},
      {"faithfulness", {{"thresholds", config.faithfulness_thresholds}}},
      {"models",
       {{"classifier", to_json(config.models.classifier)},
        {"embedder", to_json(config.models.embedder)},
        {"generator", to_json(config.models.generator)},
        {"scorer", to_json(config.models.scorer)},
        {"attributor", to_json(config.models.attributor)}}},
      {"prompts", prompts},
  };
}

std::string config_hash(const RunConfig& config) {
  return sha256_hex(to_json(config).dump()).substr(0, 12);
}

}  // namespace cfgen
