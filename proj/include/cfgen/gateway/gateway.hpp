#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <memory>
#include <mutex>
#include <semaphore>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cfgen/core/models.hpp"
#include "cfgen/core/run_config.hpp"
#include "cfgen/gateway/cache.hpp"
#include "cfgen/gateway/transport.hpp"

namespace cfgen {

// Strips surrounding white space, a leading "[edit input]" tag echoed from the
// few-shot template, and one pair of matching surrounding quotes.
std::string clean_completion(std::string_view raw);

struct GatewayOptions {
  std::filesystem::path cache_dir;  // empty: in-memory cache
  bool offline = false;             // cache miss is an error
  std::chrono::milliseconds backoff_base{250};
  int ig_steps = 64;
};

struct GatewayStats {
  // Indexed by EndpointKind.
  std::array<long, 5> network_calls{};
  std::array<long, 5> cache_hits{};

  long total_network_calls() const;
  long network(EndpointKind kind) const { return network_calls[static_cast<std::size_t>(kind)]; }
  long hits(EndpointKind kind) const { return cache_hits[static_cast<std::size_t>(kind)]; }
};

// Typed, cached, retrying access to every model endpoint of a run. Safe for
// concurrent use; each endpoint admits at most max_in_flight concurrent
// network requests.
class ModelGateway {
 public:
  ModelGateway(ModelBindings bindings, LabelSet label_set, GatewayOptions options,
               std::shared_ptr<Transport> transport);
  ~ModelGateway();

  ModelGateway(const ModelGateway&) = delete;
  ModelGateway& operator=(const ModelGateway&) = delete;

  Prediction classify(std::string_view text);
  std::vector<Prediction> classify_batch(std::span<const std::string> texts);
  std::vector<double> embed(std::string_view text);
  std::string generate(std::string_view prompt);
  std::vector<TokenLogprob> token_logprobs(std::string_view text);
  AttributionResult attribute_remote(std::string_view text, std::string_view target_label,
                                     AttributionMethod method);

  // GET /info of a model-service endpoint.
  nlohmann::json info(EndpointKind kind);
  // Throws CapabilityError unless the scorer advertises logprob support.
  void require_logprob_capability();

  Classifier& classifier();
  Embedder& embedder();
  Generator& generator();
  Scorer& scorer();
  RemoteAttributor& attributor();

  const LabelSet& label_set() const { return label_set_; }
  const ModelBindings& bindings() const { return bindings_; }
  GatewayStats stats() const;
  // Cache keys of every call made through this gateway, sorted.
  std::vector<std::string> transcript_keys() const;
  // Starts a new transcript; stats are unaffected.
  void reset_transcript();

 private:
  struct Adapters;
  class Endpoint;

  Endpoint& endpoint(EndpointKind kind);

  template <typename Parse>
  auto call(EndpointKind kind, const std::string& method, const std::string& path,
            const nlohmann::json& body, Parse&& parse);

  std::string fetch(EndpointKind kind, const std::string& method, const std::string& path,
                    const nlohmann::json& body);

  ModelBindings bindings_;
  LabelSet label_set_;
  GatewayOptions options_;
  std::shared_ptr<Transport> transport_;
  ResponseCache cache_;
  std::array<std::unique_ptr<Endpoint>, 5> endpoints_;
  std::unique_ptr<Adapters> adapters_;

  std::atomic<std::size_t> embedding_dim_{0};
  mutable std::mutex transcript_mutex_;
  std::set<std::string> transcript_;
};

}  // namespace cfgen
