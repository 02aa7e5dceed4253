#include "cfgen/gateway/gateway.hpp"

#include <cmath>
#include <cstdlib>
#include <exception>
#include <thread>

#include "cfgen/core/errors.hpp"
#include "cfgen/core/text.hpp"

namespace cfgen {

namespace {

using json = nlohmann::json;

constexpr std::size_t index_of(EndpointKind kind) { return static_cast<std::size_t>(kind); }

bool starts_with_ci(std::string_view text, std::string_view prefix) {
  if (text.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(text[i])) !=
        std::tolower(static_cast<unsigned char>(prefix[i]))) {
      return false;
    }
  }
  return true;
}

std::string_view strip_quotes(std::string_view text) {
  static constexpr std::pair<std::string_view, std::string_view> kPairs[] = {
      {"\"", "\""}, {"'", "'"}, {"\xE2\x80\x9C", "\xE2\x80\x9D"}, {"\xE2\x80\x98", "\xE2\x80\x99"}};
  for (const auto& [open, close] : kPairs) {
    if (text.size() >= open.size() + close.size() && text.starts_with(open) &&
        text.ends_with(close)) {
      return text.substr(open.size(), text.size() - open.size() - close.size());
    }
  }
  return text;
}

json parse_body(const std::string& raw, std::string_view what) {
  json body = json::parse(raw, nullptr, false);
  if (body.is_discarded() || !body.is_object()) {
    throw ProtocolError(std::string(what) + ": response is not a JSON object");
  }
  return body;
}

const json& field(const json& body, const char* name, std::string_view what) {
  auto it = body.find(name);
  if (it == body.end()) {
    throw ProtocolError(std::string(what) + ": response lacks field '" + name + "'");
  }
  return *it;
}

std::vector<double> number_array(const json& node, std::string_view what) {
  if (!node.is_array()) throw ProtocolError(std::string(what) + ": expected a number array");
  std::vector<double> out;
  out.reserve(node.size());
  for (const auto& v : node) {
    if (!v.is_number()) throw ProtocolError(std::string(what) + ": expected a number array");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

std::string clean_completion(std::string_view raw) {
  std::string_view text = trim(raw);
  constexpr std::string_view kTag = "[edit input]";
  if (starts_with_ci(text, kTag)) text = trim(text.substr(kTag.size()));
  text = trim(strip_quotes(text));
  return std::string(text);
}

long GatewayStats::total_network_calls() const {
  long total = 0;
  for (long n : network_calls) total += n;
  return total;
}

class ModelGateway::Endpoint {
 public:
  explicit Endpoint(const EndpointBinding& binding)
      : binding(binding), budget(binding.max_in_flight) {}

  const EndpointBinding& binding;
  std::counting_semaphore<1024> budget;
  std::atomic<long> network_calls{0};
  std::atomic<long> cache_hits{0};
};

struct ModelGateway::Adapters {
  struct ClassifierAdapter final : Classifier {
    ModelGateway& g;
    explicit ClassifierAdapter(ModelGateway& g) : g(g) {}
    const LabelSet& label_set() const override { return g.label_set(); }
    Prediction classify(std::string_view text) override { return g.classify(text); }
    std::vector<Prediction> classify_batch(std::span<const std::string> texts) override {
      return g.classify_batch(texts);
    }
  };
  struct EmbedderAdapter final : Embedder {
    ModelGateway& g;
    explicit EmbedderAdapter(ModelGateway& g) : g(g) {}
    std::vector<double> embed(std::string_view text) override { return g.embed(text); }
  };
  struct GeneratorAdapter final : Generator {
    ModelGateway& g;
    explicit GeneratorAdapter(ModelGateway& g) : g(g) {}
    std::string model_name() const override { return g.bindings().generator.model_name; }
    std::string generate(std::string_view prompt) override { return g.generate(prompt); }
  };
  struct ScorerAdapter final : Scorer {
    ModelGateway& g;
    explicit ScorerAdapter(ModelGateway& g) : g(g) {}
    std::vector<TokenLogprob> token_logprobs(std::string_view text) override {
      return g.token_logprobs(text);
    }
  };
  struct AttributorAdapter final : RemoteAttributor {
    ModelGateway& g;
    explicit AttributorAdapter(ModelGateway& g) : g(g) {}
    AttributionResult attribute(std::string_view text, std::string_view target,
                                AttributionMethod method) override {
      return g.attribute_remote(text, target, method);
    }
  };

  explicit Adapters(ModelGateway& g)
      : classifier(g), embedder(g), generator(g), scorer(g), attributor(g) {}

  ClassifierAdapter classifier;
  EmbedderAdapter embedder;
  GeneratorAdapter generator;
  ScorerAdapter scorer;
  AttributorAdapter attributor;
};

ModelGateway::ModelGateway(ModelBindings bindings, LabelSet label_set, GatewayOptions options,
                           std::shared_ptr<Transport> transport)
    : bindings_(std::move(bindings)),
      label_set_(std::move(label_set)),
      options_(std::move(options)),
      transport_(std::move(transport)),
      cache_(options_.cache_dir) {
  endpoints_[index_of(EndpointKind::kClassifier)] = std::make_unique<Endpoint>(bindings_.classifier);
  endpoints_[index_of(EndpointKind::kEmbedder)] = std::make_unique<Endpoint>(bindings_.embedder);
  endpoints_[index_of(EndpointKind::kGenerator)] = std::make_unique<Endpoint>(bindings_.generator);
  endpoints_[index_of(EndpointKind::kScorer)] = std::make_unique<Endpoint>(bindings_.scorer);
  endpoints_[index_of(EndpointKind::kAttributor)] = std::make_unique<Endpoint>(bindings_.attributor);
  adapters_ = std::make_unique<Adapters>(*this);
}

ModelGateway::~ModelGateway() = default;

ModelGateway::Endpoint& ModelGateway::endpoint(EndpointKind kind) {
  return *endpoints_[index_of(kind)];
}

std::string ModelGateway::fetch(EndpointKind kind, const std::string& method,
                                const std::string& path, const json& body) {
  Endpoint& ep = endpoint(kind);
  const EndpointBinding& binding = ep.binding;
  if (binding.base_url.empty()) {
    throw ConfigError("models." + std::string(to_string(kind)) + ".base_url: not configured");
  }
  HttpRequest request;
  request.method = method;
  std::string base = binding.base_url;
  while (!base.empty() && base.back() == '/') base.pop_back();
  request.url = base + path;
  if (method == "POST") request.body = body.dump();
  request.timeout_seconds = binding.timeout_seconds;
  request.headers["Content-Type"] = "application/json";
  if (!binding.api_key_env.empty()) {
    if (const char* key = std::getenv(binding.api_key_env.c_str())) {
      request.headers["Authorization"] = std::string("Bearer ") + key;
    }
  }

  std::string last_error;
  for (int attempt = 0; attempt < binding.max_retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(options_.backoff_base * (1 << (attempt - 1)));
    HttpResponse response;
    try {
      ep.budget.acquire();
      ep.network_calls.fetch_add(1);
      struct Release {
        std::counting_semaphore<1024>& s;
        ~Release() { s.release(); }
      } release{ep.budget};
      response = transport_->send(request);
    } catch (const TransportError& e) {
      last_error = e.what();
      continue;
    }
    if (response.status == 200) return response.body;
    last_error = request.url + " returned HTTP " + std::to_string(response.status);
    if (response.status != 429 && response.status < 500) throw ProtocolError(last_error);
  }
  throw TransportError(std::string(to_string(kind)) + " endpoint failed after " +
                       std::to_string(binding.max_retries) + " attempts: " + last_error);
}

template <typename Parse>
auto ModelGateway::call(EndpointKind kind, const std::string& method, const std::string& path,
                        const json& body, Parse&& parse) {
  Endpoint& ep = endpoint(kind);
  const json key_request{{"endpoint", path}, {"method", method}, {"body", body}};
  const std::string key = ResponseCache::make_key(kind, ep.binding.model_name, key_request);
  {
    std::lock_guard lock(transcript_mutex_);
    transcript_.insert(key);
  }
  if (auto cached = cache_.get(key)) {
    ep.cache_hits.fetch_add(1);
    return parse(*cached);
  }
  if (options_.offline) {
    throw CacheMissError("offline mode: no cached " + std::string(to_string(kind)) +
                         " response for " + path + " (key " + key.substr(0, 12) + ")");
  }
  const std::string raw = fetch(kind, method, path, body);
  auto result = parse(raw);
  cache_.put(key, kind, ep.binding.model_name, key_request, raw);
  return result;
}

Prediction ModelGateway::classify(std::string_view text) {
  const json body{{"text", text}};
  return call(EndpointKind::kClassifier, "POST", "/predict", body, [&](const std::string& raw) {
    const json response = parse_body(raw, "classifier");
    if (auto labels = response.find("labels"); labels != response.end()) {
      if (!labels->is_array() || labels->get<std::vector<std::string>>() != label_set_.labels()) {
        throw ProtocolError("classifier: label order differs from the run's label set");
      }
    }
    std::vector<double> probs =
        number_array(field(response, "probabilities", "classifier"), "classifier");
    // Validate at the wire tolerance, then renormalize so the Prediction
    // invariant holds at 1e-6.
    Prediction checked = Prediction::from_probabilities(label_set_, probs, 1e-4);
    double sum = 0.0;
    for (double p : checked.probabilities) sum += p;
    for (double& p : probs) p /= sum;
    return Prediction::from_probabilities(label_set_, probs, 1e-6);
  });
}

std::vector<Prediction> ModelGateway::classify_batch(std::span<const std::string> texts) {
  std::vector<Prediction> out(texts.size());
  const std::size_t workers =
      std::min<std::size_t>(texts.size(), static_cast<std::size_t>(bindings_.classifier.max_in_flight));
  if (workers <= 1) {
    for (std::size_t i = 0; i < texts.size(); ++i) out[i] = classify(texts[i]);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < texts.size(); i = next.fetch_add(1)) {
          try {
            out[i] = classify(texts[i]);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

std::vector<double> ModelGateway::embed(std::string_view text) {
  const json body{{"text", text}};
  auto vec = call(EndpointKind::kEmbedder, "POST", "/embed", body, [](const std::string& raw) {
    const json response = parse_body(raw, "embedder");
    auto v = number_array(field(response, "embedding", "embedder"), "embedder");
    if (v.empty()) throw ProtocolError("embedder: empty embedding");
    return v;
  });
  std::size_t expected = 0;
  if (!embedding_dim_.compare_exchange_strong(expected, vec.size()) && expected != vec.size()) {
    throw ProtocolError("embedder: dimension changed from " + std::to_string(expected) + " to " +
                        std::to_string(vec.size()));
  }
  return vec;
}

std::string ModelGateway::generate(std::string_view prompt) {
  const EndpointBinding& b = bindings_.generator;
  const json body{{"model", b.model_name},
                  {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
                  {"temperature", b.temperature},
                  {"max_tokens", b.max_new_tokens}};
  std::string content =
      call(EndpointKind::kGenerator, "POST", "/chat/completions", body, [](const std::string& raw) {
        const json response = parse_body(raw, "generator");
        const json& choices = field(response, "choices", "generator");
        if (!choices.is_array() || choices.empty()) throw ProtocolError("generator: no choices");
        const json& message = field(choices[0], "message", "generator");
        const json& content = field(message, "content", "generator");
        if (content.is_null()) return std::string();
        if (!content.is_string()) throw ProtocolError("generator: content is not a string");
        return content.get<std::string>();
      });
  std::string cleaned = clean_completion(content);
  if (cleaned.empty()) throw GenerationError("generator returned an empty completion");
  return cleaned;
}

std::vector<TokenLogprob> ModelGateway::token_logprobs(std::string_view text) {
  if (trim(text).empty()) throw MetricError("cannot score empty text");
  const json body{{"text", text}};
  return call(EndpointKind::kScorer, "POST", "/logprobs", body, [](const std::string& raw) {
    const json response = parse_body(raw, "scorer");
    const json& tokens = field(response, "tokens", "scorer");
    const json& logprobs = field(response, "logprobs", "scorer");
    if (!tokens.is_array() || !logprobs.is_array() || tokens.size() != logprobs.size()) {
      throw ProtocolError("scorer: tokens and logprobs must be arrays of equal length");
    }
    std::vector<TokenLogprob> out;
    out.reserve(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      TokenLogprob t;
      t.token = tokens[i].is_string() ? tokens[i].get<std::string>() : tokens[i].dump();
      if (logprobs[i].is_null()) {
        if (i != 0) throw ProtocolError("scorer: only the first token may be unscored");
      } else {
        if (!logprobs[i].is_number()) throw ProtocolError("scorer: logprob is not a number");
        const double lp = logprobs[i].get<double>();
        if (!(lp <= 0.0)) throw ProtocolError("scorer: positive logprob " + std::to_string(lp));
        t.logprob = lp;
      }
      out.push_back(std::move(t));
    }
    return out;
  });
}

AttributionResult ModelGateway::attribute_remote(std::string_view text,
                                                 std::string_view target_label,
                                                 AttributionMethod method) {
  if (!is_remote(method)) {
    throw ConfigError("attribution method '" + std::string(to_string(method)) +
                      "' is computed locally, not by the attributor service");
  }
  json body{{"text", text}, {"target_label", target_label}, {"method", to_string(method)}};
  if (method == AttributionMethod::kIntegratedGradients) body["ig_steps"] = options_.ig_steps;
  const std::size_t word_count = normalized_word_tokens(text).size();
  return call(EndpointKind::kAttributor, "POST", "/attribute", body, [&](const std::string& raw) {
    const json response = parse_body(raw, "attributor");
    AttributionResult result;
    result.method = method;
    result.target_label = std::string(target_label);
    const json& tokens = field(response, "tokens", "attributor");
    if (!tokens.is_array()) throw ProtocolError("attributor: tokens must be an array");
    for (const auto& t : tokens) {
      if (!t.is_string()) throw ProtocolError("attributor: tokens must be strings");
      result.tokens.push_back(t.get<std::string>());
    }
    result.scores = number_array(field(response, "scores", "attributor"), "attributor");
    std::set<std::size_t> specials;
    if (auto s = response.find("special_tokens"); s != response.end()) {
      if (!s->is_array()) throw ProtocolError("attributor: special_tokens must be an array");
      for (const auto& idx : *s) {
        if (!idx.is_number_unsigned()) throw ProtocolError("attributor: special_tokens must be token indices");
        specials.insert(idx.get<std::size_t>());
      }
    }
    const json& alignment = field(response, "word_alignment", "attributor");
    if (!alignment.is_array() || alignment.size() != result.tokens.size()) {
      throw ProtocolError("attributor: word_alignment must have one entry per token");
    }
    for (std::size_t i = 0; i < alignment.size(); ++i) {
      if (alignment[i].is_null()) {
        if (!specials.contains(i)) {
          throw ProtocolError("attributor: token " + std::to_string(i) + " ('" + result.tokens[i] +
                              "') has no word alignment and is not a declared special token");
        }
        result.word_alignment.emplace_back(std::nullopt);
      } else {
        if (!alignment[i].is_number_unsigned() && !alignment[i].is_number_integer()) {
          throw ProtocolError("attributor: word alignment entries must be integers or null");
        }
        result.word_alignment.emplace_back(alignment[i].get<std::size_t>());
      }
    }
    result.validate(word_count);
    return result;
  });
}

json ModelGateway::info(EndpointKind kind) {
  return call(kind, "GET", "/info", json::object(),
              [](const std::string& raw) { return parse_body(raw, "info"); });
}

void ModelGateway::require_logprob_capability() {
  const json description = info(EndpointKind::kScorer);
  auto caps = description.find("capabilities");
  if (caps != description.end() && caps->is_array()) {
    for (const auto& c : *caps) {
      if (c == "logprobs") return;
    }
  }
  throw CapabilityError("scorer endpoint " + bindings_.scorer.base_url +
                        " does not advertise logprob support");
}

Classifier& ModelGateway::classifier() { return adapters_->classifier; }
Embedder& ModelGateway::embedder() { return adapters_->embedder; }
Generator& ModelGateway::generator() { return adapters_->generator; }
Scorer& ModelGateway::scorer() { return adapters_->scorer; }
RemoteAttributor& ModelGateway::attributor() { return adapters_->attributor; }

GatewayStats ModelGateway::stats() const {
  GatewayStats s;
  for (std::size_t i = 0; i < endpoints_.size(); ++i) {
    s.network_calls[i] = endpoints_[i]->network_calls.load();
    s.cache_hits[i] = endpoints_[i]->cache_hits.load();
  }
  return s;
}

std::vector<std::string> ModelGateway::transcript_keys() const {
  std::lock_guard lock(transcript_mutex_);
  return {transcript_.begin(), transcript_.end()};
}

void ModelGateway::reset_transcript() {
  std::lock_guard lock(transcript_mutex_);
  transcript_.clear();
}

}  // namespace cfgen
