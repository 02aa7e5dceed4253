#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cfgen/gateway/transport.hpp"

namespace cfgen {

// A deterministic lexicon-driven stand-in for every model endpoint, reachable
// at mock://sentiment and mock://news. It answers the model-service and
// chat-completions protocols byte-for-byte like a real deployment would, so
// the whole pipeline (cache, retries aside) runs offline against it.
//
// The "LLM" reads the prompt like an instruction-following model would:
// it swaps the listed important words for their counterparts in the target
// label's lexicon, learns extra substitutions from few-shot demonstrations,
// and answers judge prompts by classifying both instances.
class ToyWorld {
 public:
  // "sentiment" or "news"; nullopt for anything else.
  static std::optional<ToyWorld> named(std::string_view name);

  const std::string& name() const { return name_; }
  const std::vector<std::string>& labels() const { return labels_; }

  std::vector<double> probabilities(std::string_view text) const;
  std::string predict(std::string_view text) const;
  std::vector<double> embed(std::string_view text) const;

  // Lexicon label of a word (case and edge punctuation ignored).
  std::optional<std::size_t> label_of(std::string_view word) const;
  // Counterpart of a lexicon word in another label's list.
  std::optional<std::string> swap(std::string_view word, std::size_t target_label) const;

  std::string complete(std::string_view prompt) const;

  static constexpr std::size_t kEmbeddingDim = 16;

 private:
  ToyWorld() = default;

  std::string name_;
  std::vector<std::string> labels_;
  // lexicon_[label][i]: index-aligned so word i of one label swaps to word i
  // of another.
  std::vector<std::vector<std::string>> lexicon_;
  std::vector<std::vector<double>> weights_;
};

bool is_mock_url(std::string_view url);

// Thread-safe; serves any mock://<world>/<endpoint> URL.
std::unique_ptr<Transport> make_mock_transport();

}  // namespace cfgen
