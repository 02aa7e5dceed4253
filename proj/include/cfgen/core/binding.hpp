#pragma once

#include <string>
#include <string_view>

namespace cfgen {

enum class EndpointKind { kClassifier, kEmbedder, kGenerator, kScorer, kAttributor };

std::string_view to_string(EndpointKind kind);

// Where and how to reach one model endpoint. Generators speak the
// chat-completions protocol; every other kind speaks the model-service
// protocol (see docs/model_service_protocol.md). A base_url starting with
// "mock://" selects a built-in deterministic toy model.
struct EndpointBinding {
  EndpointKind kind = EndpointKind::kClassifier;
  std::string base_url;
  std::string model_name;
  double timeout_seconds = 60.0;
  int max_retries = 3;
  int max_in_flight = 4;
  // Name of an environment variable holding a bearer token, if any.
  std::string api_key_env;
  // Generator decoding parameters.
  double temperature = 0.0;
  int max_new_tokens = 512;

  bool operator==(const EndpointBinding&) const = default;
};

inline EndpointBinding default_binding(EndpointKind kind, std::string model_name = {}) {
  EndpointBinding binding;
  binding.kind = kind;
  binding.model_name = std::move(model_name);
  return binding;
}

}  // namespace cfgen
