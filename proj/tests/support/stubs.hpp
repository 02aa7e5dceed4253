#pragma once

// In-process model stand-ins with call counters, shared by the test suites.

#include <atomic>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cfgen/core/errors.hpp"
#include "cfgen/core/models.hpp"
#include "cfgen/core/text.hpp"
#include "cfgen/gateway/transport.hpp"

namespace cfgen::testing {

// Probabilities computed by a callback over the raw text.
class FnClassifier final : public Classifier {
 public:
  using Fn = std::function<std::vector<double>(std::string_view)>;

  FnClassifier(LabelSet labels, Fn fn) : labels_(std::move(labels)), fn_(std::move(fn)) {}

  const LabelSet& label_set() const override { return labels_; }
  Prediction classify(std::string_view text) override {
    ++calls;
    const auto p = fn_(text);
    return Prediction::from_probabilities(labels_, p);
  }

  std::atomic<int> calls{0};

 private:
  LabelSet labels_;
  Fn fn_;
};

// Fixed label per exact text; anything else gets `fallback`.
inline FnClassifier::Fn label_table(const LabelSet& labels, std::map<std::string, std::string> table,
                                    std::string fallback) {
  return [labels, table = std::move(table), fallback = std::move(fallback)](std::string_view text) {
    const auto it = table.find(std::string(text));
    const std::string& label = it == table.end() ? fallback : it->second;
    std::vector<double> p(labels.size(), 0.1 / static_cast<double>(labels.size() - 1));
    p[*labels.index_of(label)] = 0.9;
    return p;
  };
}

// Answers via a callback and records every prompt.
class ScriptedGenerator final : public Generator {
 public:
  using Fn = std::function<std::string(std::string_view)>;

  explicit ScriptedGenerator(Fn fn, std::string name = "stub-llm")
      : fn_(std::move(fn)), name_(std::move(name)) {}

  std::string model_name() const override { return name_; }
  std::string generate(std::string_view prompt) override {
    std::lock_guard lock(mutex_);
    prompts.emplace_back(prompt);
    std::string answer = fn_(prompt);
    if (answer.empty()) throw GenerationError("empty completion");
    return answer;
  }

  std::vector<std::string> prompts;

 private:
  std::mutex mutex_;
  Fn fn_;
  std::string name_;
};

// Text after the last "Input: " or "[original input] " marker of a prompt.
inline std::string query_of(std::string_view prompt) {
  for (std::string_view marker : {"[original input] ", "Input: "}) {
    const auto pos = prompt.rfind(marker);
    if (pos != std::string_view::npos) {
      std::string rest(prompt.substr(pos + marker.size()));
      const auto nl = rest.find('\n');
      return nl == std::string::npos ? rest : rest.substr(0, nl);
    }
  }
  return {};
}

class TableEmbedder final : public Embedder {
 public:
  explicit TableEmbedder(std::map<std::string, std::vector<double>> table) : table_(std::move(table)) {}
  std::vector<double> embed(std::string_view text) override {
    ++calls;
    return table_.at(std::string(text));
  }
  std::atomic<int> calls{0};

 private:
  std::map<std::string, std::vector<double>> table_;
};

// Every word scored with the same logprob; the first token unscored.
class UniformScorer final : public Scorer {
 public:
  explicit UniformScorer(double logprob) : logprob_(logprob) {}
  std::vector<TokenLogprob> token_logprobs(std::string_view text) override {
    ++calls;
    std::vector<TokenLogprob> out;
    for (const auto& w : normalized_word_tokens(text)) {
      out.push_back({w, out.empty() ? std::nullopt : std::optional<double>(logprob_)});
    }
    return out;
  }
  std::atomic<int> calls{0};

 private:
  double logprob_;
};

class CountingAttributor final : public RemoteAttributor {
 public:
  AttributionResult attribute(std::string_view text, std::string_view target,
                              AttributionMethod method) override {
    ++calls;
    AttributionResult r;
    r.method = method;
    r.target_label = std::string(target);
    const auto words = normalized_word_tokens(text);
    for (std::size_t i = 0; i < words.size(); ++i) {
      r.tokens.push_back(words[i]);
      r.scores.push_back(static_cast<double>(words.size() - i));
      r.word_alignment.push_back(i);
    }
    return r;
  }
  std::atomic<int> calls{0};
};

// Transport answering from a queue of canned responses (or a handler), with
// the requests it saw.
class ScriptedTransport final : public Transport {
 public:
  using Handler = std::function<HttpResponse(const HttpRequest&)>;

  explicit ScriptedTransport(Handler handler = {}) : handler_(std::move(handler)) {}

  void push(HttpResponse response) {
    std::lock_guard lock(mutex_);
    queue_.push_back(std::move(response));
  }
  void push_failure() {
    std::lock_guard lock(mutex_);
    failures_.push_back(queue_.size());
  }

  HttpResponse send(const HttpRequest& request) override {
    std::lock_guard lock(mutex_);
    requests.push_back(request);
    if (!failures_.empty() && failures_.front() == 0) {
      failures_.pop_front();
      throw TransportError("scripted connection failure");
    }
    for (auto& f : failures_) --f;
    if (!queue_.empty()) {
      HttpResponse r = queue_.front();
      queue_.pop_front();
      return r;
    }
    if (handler_) return handler_(request);
    throw TransportError("no scripted response left");
  }

  std::size_t count() const {
    std::lock_guard lock(mutex_);
    return requests.size();
  }

  std::vector<HttpRequest> requests;

 private:
  mutable std::mutex mutex_;
  Handler handler_;
  std::deque<HttpResponse> queue_;
  std::deque<std::size_t> failures_;
};

}  // namespace cfgen::testing
