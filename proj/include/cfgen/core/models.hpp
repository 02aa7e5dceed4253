#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cfgen/core/types.hpp"

namespace cfgen {

// Abstract model roles. The gateway implements them over HTTP; tests and the
// attribution/pipeline code depend only on these.

class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual const LabelSet& label_set() const = 0;
  virtual Prediction classify(std::string_view text) = 0;
  // Results are in input order regardless of how calls are scheduled.
  virtual std::vector<Prediction> classify_batch(std::span<const std::string> texts);
};

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::vector<double> embed(std::string_view text) = 0;
};

class Generator {
 public:
  virtual ~Generator() = default;
  virtual std::string model_name() const = 0;
  // Post-processed completion; throws GenerationError when nothing is left.
  virtual std::string generate(std::string_view prompt) = 0;
};

struct TokenLogprob {
  std::string token;
  // nullopt for a token the model could not score (the first one).
  std::optional<double> logprob;

  bool operator==(const TokenLogprob&) const = default;
};

class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual std::vector<TokenLogprob> token_logprobs(std::string_view text) = 0;
};

class RemoteAttributor {
 public:
  virtual ~RemoteAttributor() = default;
  virtual AttributionResult attribute(std::string_view text, std::string_view target_label,
                                      AttributionMethod method) = 0;
};

}  // namespace cfgen
