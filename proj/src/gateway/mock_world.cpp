#include "cfgen/gateway/mock_world.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numeric>

#include <nlohmann/json.hpp>

#include "cfgen/core/errors.hpp"
#include "cfgen/core/text.hpp"

namespace cfgen {

namespace {

using json = nlohmann::json;

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Lower-cased word without leading/trailing ASCII punctuation.
std::string bare(std::string_view word) {
  std::size_t b = 0;
  std::size_t e = word.size();
  while (b < e && std::ispunct(static_cast<unsigned char>(word[b]))) ++b;
  while (e > b && std::ispunct(static_cast<unsigned char>(word[e - 1]))) --e;
  std::string out(word.substr(b, e - b));
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Replace the bare core of `word` by `replacement`, keeping edge punctuation
// and an initial capital.
std::string replace_core(std::string_view word, std::string_view replacement) {
  std::size_t b = 0;
  std::size_t e = word.size();
  while (b < e && std::ispunct(static_cast<unsigned char>(word[b]))) ++b;
  while (e > b && std::ispunct(static_cast<unsigned char>(word[e - 1]))) --e;
  std::string core(replacement);
  if (b < e && std::isupper(static_cast<unsigned char>(word[b])) && !core.empty()) {
    core[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(core[0])));
  }
  return std::string(word.substr(0, b)) + core + std::string(word.substr(e));
}

std::string between(std::string_view text, std::string_view open, std::string_view close,
                    std::size_t from = 0) {
  const auto a = text.find(open, from);
  if (a == std::string_view::npos) return {};
  const auto start = a + open.size();
  const auto b = text.find(close, start);
  if (b == std::string_view::npos) return std::string(text.substr(start));
  return std::string(text.substr(start, b - start));
}

// Parses a Python-style list literal of strings: ['a', "b's"].
std::vector<std::string> parse_word_list(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const char q = text[i];
    if (q != '\'' && q != '"') {
      ++i;
      continue;
    }
    std::string word;
    ++i;
    while (i < text.size() && text[i] != q) {
      if (text[i] == '\\' && i + 1 < text.size()) ++i;
      word += text[i++];
    }
    ++i;
    out.push_back(word);
  }
  return out;
}

struct Demo {
  std::string original;
  std::string edited;
};

}  // namespace

std::optional<ToyWorld> ToyWorld::named(std::string_view name) {
  ToyWorld w;
  w.name_ = std::string(name);
  if (name == "sentiment") {
    w.labels_ = {"negative", "positive"};
    w.lexicon_ = {
        {"bad", "terrible", "awful", "dreadful", "hate", "boring", "dull", "tedious", "poor",
         "bland", "tiresome", "worst", "ugly", "weak"},
        {"good", "great", "excellent", "wonderful", "love", "enjoyable", "brilliant", "delightful",
         "superb", "charming", "fun", "best", "beautiful", "strong"},
    };
    const std::vector<double> strength{1.5, 2.0, 2.5, 2.5, 2.0, 1.5, 2.0,
                                       1.5, 1.5, 1.0, 1.0, 2.5, 1.5, 1.0};
    w.weights_ = {strength, strength};
  } else if (name == "news") {
    w.labels_ = {"World", "Sports", "Business", "Sci/Tech"};
    w.lexicon_ = {
        {"government", "minister", "election", "troops", "president", "embassy", "war",
         "parliament"},
        {"team", "coach", "season", "championship", "player", "league", "match", "goal"},
        {"company", "market", "shares", "profit", "investors", "bank", "economy", "stocks"},
        {"software", "internet", "computer", "researchers", "technology", "scientists", "chip",
         "space"},
    };
    w.weights_.assign(4, std::vector<double>{2.0, 1.5, 1.5, 1.5, 1.5, 1.0, 1.5, 1.0});
  } else {
    return std::nullopt;
  }
  return w;
}

std::optional<std::size_t> ToyWorld::label_of(std::string_view word) const {
  const std::string b = bare(word);
  for (std::size_t l = 0; l < lexicon_.size(); ++l) {
    if (std::find(lexicon_[l].begin(), lexicon_[l].end(), b) != lexicon_[l].end()) return l;
  }
  return std::nullopt;
}

std::optional<std::string> ToyWorld::swap(std::string_view word, std::size_t target_label) const {
  const std::string b = bare(word);
  for (std::size_t l = 0; l < lexicon_.size(); ++l) {
    auto it = std::find(lexicon_[l].begin(), lexicon_[l].end(), b);
    if (it == lexicon_[l].end() || l == target_label) continue;
    const auto idx = static_cast<std::size_t>(it - lexicon_[l].begin());
    return replace_core(word, lexicon_[target_label][idx % lexicon_[target_label].size()]);
  }
  return std::nullopt;
}

std::vector<double> ToyWorld::probabilities(std::string_view text) const {
  std::vector<double> score(labels_.size(), 0.0);
  for (const auto& word : normalized_word_tokens(text)) {
    const std::string b = bare(word);
    for (std::size_t l = 0; l < lexicon_.size(); ++l) {
      auto it = std::find(lexicon_[l].begin(), lexicon_[l].end(), b);
      if (it != lexicon_[l].end()) score[l] += weights_[l][static_cast<std::size_t>(it - lexicon_[l].begin())];
    }
  }
  const double top = *std::max_element(score.begin(), score.end());
  std::vector<double> p(score.size());
  double sum = 0.0;
  for (std::size_t l = 0; l < score.size(); ++l) sum += p[l] = std::exp(score[l] - top);
  for (double& x : p) x /= sum;
  return p;
}

std::string ToyWorld::predict(std::string_view text) const {
  const auto p = probabilities(text);
  return labels_[static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin())];
}

std::vector<double> ToyWorld::embed(std::string_view text) const {
  std::vector<double> v(kEmbeddingDim, 0.0);
  const std::size_t hashed = kEmbeddingDim - 4;
  for (const auto& word : normalized_word_tokens(text)) {
    const std::string b = bare(word);
    if (b.empty()) continue;
    const std::uint64_t h = fnv1a(b);
    v[h % hashed] += (h >> 32) & 1 ? 0.5 : -0.5;
  }
  const auto p = probabilities(text);
  for (std::size_t l = 0; l < p.size() && l < 4; ++l) v[hashed + l] = 2.0 * p[l];
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm > 0) {
    for (double& x : v) x /= norm;
  }
  return v;
}

std::string ToyWorld::complete(std::string_view prompt) const {
  const std::uint64_t h = fnv1a(prompt);

  // Label-flip judge.
  if (prompt.find("[original instance] '") != std::string_view::npos) {
    const std::string original = between(prompt, "[original instance] '", "'\n[edited instance]");
    const std::string edited = between(prompt, "[edited instance] '", "'\nRespond with");
    if (h % 13 == 0) return "I am not sure.";
    return predict(original) != predict(edited) ? "Yes." : "no";
  }

  const auto words_of = [](std::string_view text) { return normalized_word_tokens(text); };

  // Important-word proposal (FIZLE step one).
  if (prompt.find("comma-separated list of the important words") != std::string_view::npos) {
    const auto input = words_of(prompt.substr(prompt.rfind("Input: ") + 7));
    std::vector<std::string> picks;
    for (const auto& w : input) {
      if (label_of(w) && picks.size() < 3) picks.push_back(bare(w));
    }
    if (picks.empty() && !input.empty()) picks.push_back(bare(input.front()));
    if (h % 3 == 0) picks.push_back("masterpiece");
    std::string out;
    for (const auto& p : picks) out += (out.empty() ? "" : ", ") + p;
    return out;
  }

  const std::string prediction = between(prompt, "belongs to \nthe '", "' category.");
  const auto predicted = std::find(labels_.begin(), labels_.end(), prediction);
  const std::size_t predicted_index =
      predicted == labels_.end() ? 0 : static_cast<std::size_t>(predicted - labels_.begin());
  const std::string list_line = [&] {
    const auto end = prompt.find(" might be important words");
    if (end == std::string_view::npos) return std::string();
    const auto start = prompt.rfind('\n', end);
    return std::string(prompt.substr(start + 1, end - start - 1));
  }();
  std::vector<std::string> important;
  for (const auto& w : parse_word_list(list_line)) important.push_back(bare(w));

  const bool few_shot = prompt.find("[original input] ") != std::string_view::npos;
  std::string input;
  std::vector<Demo> demos;
  std::size_t target = predicted_index == 0 ? 1 : 0;
  if (few_shot) {
    const auto last = prompt.rfind("[original input] ");
    input = between(prompt, "[original input] ", "\n[edit input]", last);
    std::size_t pos = 0;
    while (true) {
      pos = prompt.find("[original input] ", pos);
      if (pos == std::string_view::npos || pos >= last) break;
      Demo d;
      d.original = between(prompt, "[original input] ", "\n", pos);
      d.edited = between(prompt, "[edit input] ", "\n", pos);
      demos.push_back(std::move(d));
      pos += 1;
    }
    const std::string counterpart = between(prompt, "category to '", "' by");
    if (auto it = std::find(labels_.begin(), labels_.end(), counterpart); it != labels_.end()) {
      target = static_cast<std::size_t>(it - labels_.begin());
    }
  } else {
    input = std::string(trim(prompt.substr(prompt.rfind("Input: ") + 7)));
    const auto p = probabilities(input);
    std::size_t best = target;
    for (std::size_t l = 0; l < p.size(); ++l) {
      if (l != predicted_index && p[l] > p[best]) best = l;
    }
    target = best;
  }

  // Substitutions learned from demonstrations: aligned positions that changed.
  std::map<std::string, std::string> learned;
  for (const auto& d : demos) {
    const auto a = words_of(d.original);
    const auto b = words_of(d.edited);
    if (a.size() != b.size()) continue;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (bare(a[i]) != bare(b[i])) learned.emplace(bare(a[i]), bare(b[i]));
    }
  }

  auto words = words_of(input);
  const std::size_t budget = few_shot ? 3 : 2;
  std::size_t edits = 0;
  for (auto& w : words) {
    const std::string b = bare(w);
    const bool listed = std::find(important.begin(), important.end(), b) != important.end();
    if ((listed || important.empty()) && label_of(w) == predicted_index && edits < budget) {
      if (auto s = swap(w, target)) {
        w = *s;
        ++edits;
      }
    }
  }
  if (few_shot) {
    for (auto& w : words) {
      if (auto it = learned.find(bare(w)); it != learned.end() && label_of(w) == predicted_index) {
        w = replace_core(w, it->second);
      } else if (demos.size() >= 4 && label_of(w) == predicted_index) {
        if (auto s = swap(w, target)) w = *s;
      }
    }
  }

  std::string edited = join_words(words);
  if (h % 7 == 0) return "[edit input] " + edited;
  if (h % 5 == 0) return "\"" + edited + "\"";
  return edited;
}

bool is_mock_url(std::string_view url) { return url.starts_with("mock://"); }

namespace {

class MockTransport final : public Transport {
 public:
  HttpResponse send(const HttpRequest& request) override {
    const std::string_view url = request.url;
    const auto rest = url.substr(std::string_view("mock://").size());
    const auto slash = rest.find('/');
    const std::string world_name(rest.substr(0, slash));
    const std::string path = slash == std::string_view::npos ? "/" : std::string(rest.substr(slash));
    const auto world = ToyWorld::named(world_name);
    if (!world) return {404, R"({"error":"unknown mock world"})"};

    json body = request.method == "POST" ? json::parse(request.body, nullptr, false) : json::object();
    if (body.is_discarded()) return {400, R"({"error":"bad json"})"};

    // Endpoints match by suffix so a base_url carrying a prefix such as /v1 works.
    auto ends_with = [&](std::string_view suffix) { return std::string_view(path).ends_with(suffix); };

    if (ends_with("/info")) {
      return ok(json{{"labels", world->labels()},
                     {"embedding_dim", ToyWorld::kEmbeddingDim},
                     {"max_length", 512},
                     {"capabilities", {"predict", "embed", "logprobs", "attribute"}},
                     {"models",
                      {{"classifier", "toy-" + world->name()},
                       {"embedder", "toy-hash-16"},
                       {"scorer", "toy-unigram"}}}});
    }
    if (ends_with("/predict")) {
      const std::string text = body.value("text", "");
      const auto p = world->probabilities(text);
      return ok(json{{"label", world->predict(text)},
                     {"labels", world->labels()},
                     {"probabilities", p},
                     {"empty", trim(text).empty()},
                     {"truncated", false}});
    }
    if (ends_with("/embed")) return ok(json{{"embedding", world->embed(body.value("text", ""))}});
    if (ends_with("/logprobs")) return ok(logprobs(*world, body.value("text", "")));
    if (ends_with("/attribute")) return attribute(*world, body);
    if (ends_with("/chat/completions")) {
      std::string prompt;
      if (body.contains("messages") && body["messages"].is_array() && !body["messages"].empty()) {
        prompt = body["messages"].back().value("content", "");
      }
      const std::string content = world->complete(prompt);
      return ok(json{{"id", "toy-completion"},
                     {"object", "chat.completion"},
                     {"model", body.value("model", "toy")},
                     {"choices",
                      {{{"index", 0},
                        {"message", {{"role", "assistant"}, {"content", content}}},
                        {"finish_reason", "stop"}}}}});
    }
    return {404, R"({"error":"unknown endpoint"})"};
  }

 private:
  static HttpResponse ok(const json& body) { return {200, body.dump()}; }

  static json logprobs(const ToyWorld& world, const std::string& text) {
    static const std::vector<std::string> kCommon{"the", "a", "an", "is", "was", "and", "of",
                                                  "it", "this", "to", "in", "film", "movie"};
    json tokens = json::array();
    json scores = json::array();
    const auto words = normalized_word_tokens(text);
    for (std::size_t i = 0; i < words.size(); ++i) {
      tokens.push_back(words[i]);
      if (i == 0) {
        scores.push_back(nullptr);
        continue;
      }
      const std::string b = bare(words[i]);
      const bool known = world.label_of(b).has_value() ||
                         std::find(kCommon.begin(), kCommon.end(), b) != kCommon.end();
      scores.push_back(-(0.5 + 0.35 * static_cast<double>(b.size()) + (known ? 0.0 : 1.0)));
    }
    return json{{"tokens", tokens}, {"logprobs", scores}};
  }

  static HttpResponse attribute(const ToyWorld& world, const json& body) {
    const std::string text = body.value("text", "");
    const std::string method = body.value("method", "");
    const std::string target = body.value("target_label", "");
    const auto& labels = world.labels();
    const auto t = std::find(labels.begin(), labels.end(), target);
    if (t == labels.end()) return {400, R"({"error":"label outside the served set"})"};
    if (method != "gradient" && method != "integrated_gradients") {
      return {400, R"({"error":"unknown method"})"};
    }
    const auto target_index = static_cast<std::size_t>(t - labels.begin());

    json tokens = json::array({"[CLS]"});
    json scores = json::array();
    json alignment = json::array({nullptr});
    std::vector<double> raw;
    const auto words = normalized_word_tokens(text);
    for (std::size_t i = 0; i < words.size(); ++i) {
      const auto label = world.label_of(words[i]);
      double s = 0.05 * static_cast<double>(bare(words[i]).size() % 3);
      if (label) {
        const double w = *label == target_index ? 1.0 : -0.5;
        s += method == "gradient" ? std::abs(w) : w;
      }
      if (words[i].size() > 7) {
        tokens.push_back(words[i].substr(0, 4));
        tokens.push_back("##" + words[i].substr(4));
        raw.push_back(0.8 * s);
        raw.push_back(s);
        alignment.push_back(i);
        alignment.push_back(i);
      } else {
        tokens.push_back(words[i]);
        raw.push_back(s);
        alignment.push_back(i);
      }
    }
    tokens.push_back("[SEP]");
    alignment.push_back(nullptr);
    const double top = raw.empty() ? 1.0 : *std::max_element(raw.begin(), raw.end());
    scores.push_back(top + 1.0);
    for (double s : raw) scores.push_back(s);
    scores.push_back(0.0);
    return ok(json{{"tokens", tokens},
                   {"scores", scores},
                   {"word_alignment", alignment},
                   {"special_tokens", {0, tokens.size() - 1}}});
  }
};

}  // namespace

std::unique_ptr<Transport> make_mock_transport() { return std::make_unique<MockTransport>(); }

}  // namespace cfgen
