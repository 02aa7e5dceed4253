#include "cfgen/pipeline/generate.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <regex>

#include "cfgen/attribution/important_words.hpp"
#include "cfgen/core/errors.hpp"
#include "cfgen/core/hash.hpp"
#include "cfgen/core/text.hpp"

namespace cfgen {

namespace {

// Runs one stage; recoverable model failures are recorded on the record and
// reported as false. Config, capability and offline cache-miss errors abort.
bool run_stage(CounterfactualRecord& record, std::string_view stage,
               const std::function<void()>& body) {
  try {
    body();
    return true;
  } catch (const Error& error) {
    switch (error.category()) {
      case Error::Category::kTransport:
      case Error::Category::kProtocol:
      case Error::Category::kGeneration:
      case Error::Category::kMetric:
        record.failed_stage = std::string(stage);
        record.error = error.what();
        return false;
      default:
        throw;
    }
  }
}

CounterfactualRecord start_record(const Instance& instance, GenerationMethod method,
                                  const PipelineContext& ctx) {
  if (ctx.models.classifier == nullptr) throw ConfigError("models.classifier: not configured");
  if (ctx.models.generator == nullptr) throw ConfigError("models.generator: not configured");
  CounterfactualRecord record;
  record.instance = instance;
  record.method = method;
  record.generator_model = ctx.models.generator->model_name();
  return record;
}

// Attribution towards the predicted label, then top-n word extraction. With
// important words ablated nothing is called.
bool attribute_words(CounterfactualRecord& record, const PipelineContext& ctx) {
  if (!ctx.config.include_important_words) return true;
  const AttributionMethod method = ctx.config.attribution_method;
  record.attribution_method = method;
  return run_stage(record, kStageAttribution, [&] {
    const std::uint64_t seed = derive_seed(
        ctx.config.seed,
        "attribution/" + std::string(to_string(method)) + "/" + record.instance.id);
    AttributionResult attr =
        compute_attribution(method, record.instance.text, record.predicted_label,
                            *ctx.models.classifier, ctx.models.attributor, ctx.config, seed);
    record.important_words =
        extract_important_words(attr, record.instance.text, ctx.config.num_important_words);
    for (auto& note : attr.notes) record.notes.push_back("attribution: " + note);
  });
}

std::string word_list_of(const CounterfactualRecord& record) {
  if (!record.important_words) return format_word_list({});
  return format_word_list(record.important_words->words);
}

bool generate_text(CounterfactualRecord& record, const std::string& prompt,
                   const PipelineContext& ctx) {
  return run_stage(record, kStageGeneration, [&] {
    record.counterfactual_text = ctx.models.generator->generate(prompt);
    record.no_edit = is_no_edit(record.instance.text, record.counterfactual_text);
  });
}

std::string trim_copy(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(begin, end - begin + 1));
}

std::string lower_ascii(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

bool is_no_edit(std::string_view original, std::string_view edited) {
  return normalized_word_tokens(original) == normalized_word_tokens(edited);
}

FlipVerdict verify_flip(std::string_view original, std::string_view counterfactual,
                        Classifier& classifier) {
  if (trim_copy(counterfactual).empty()) return FlipVerdict::kRejected;
  const std::string before = classifier.classify(original).label;
  const std::string after = classifier.classify(counterfactual).label;
  return before != after ? FlipVerdict::kAccepted : FlipVerdict::kRejected;
}

std::string counterpart_label(const Prediction& prediction, const LabelSet& label_set) {
  if (label_set.size() == 2) {
    return label_set[label_set[0] == prediction.label ? 1 : 0];
  }
  return prediction.labels[prediction.second_argmax()];
}

ParsedWordList parse_word_list(std::string_view answer) {
  ParsedWordList out;
  std::string text = trim_copy(answer);
  if (text.size() >= 2 && text.front() == '[' && text.back() == ']') {
    text = trim_copy(std::string_view(text).substr(1, text.size() - 2));
  }
  const std::string lowered = lower_ascii(text);
  if (text.empty() || lowered == "none" || lowered == "none.") return out;

  std::vector<std::string> items;
  std::string current;
  for (char c : text) {
    if (c == ',' || c == '\n') {
      items.push_back(current);
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  items.push_back(current);

  for (std::string item : items) {
    item = trim_copy(item);
    // Leading bullets and enumerations: "- x", "* x", "1. x", "2) x".
    static const std::regex kBullet(R"(^(?:[-*]|[0-9]+[.)])\s+)");
    item = std::regex_replace(item, kBullet, "");
    while (item.size() >= 2 && (item.front() == '\'' || item.front() == '"') && item.back() == item.front()) {
      item = trim_copy(std::string_view(item).substr(1, item.size() - 2));
    }
    if (!item.empty() && item.back() == '.') item.pop_back();
    if (item.empty()) continue;
    // More than three words in one item reads as prose, not a word list.
    if (normalized_word_tokens(item).size() > 3) {
      out.parsed = false;
      out.words.clear();
      return out;
    }
    if (std::find(out.words.begin(), out.words.end(), item) == out.words.end()) out.words.push_back(item);
  }
  return out;
}

CounterfactualRecord zerocf_generate(const Instance& instance, const PipelineContext& ctx) {
  CounterfactualRecord record = start_record(instance, GenerationMethod::kZeroCF, ctx);
  if (!run_stage(record, kStageClassify,
                 [&] { record.predicted_label = ctx.models.classifier->classify(instance.text).label; })) {
    return record;
  }
  if (!attribute_words(record, ctx)) return record;

  auto values = label_set_values(ctx.config.label_set);
  values["prediction"] = record.predicted_label;
  values["important_words"] = word_list_of(record);
  values["input_text"] = instance.text;
  const std::string prompt = ctx.prompts.get("zerocf").render(values);
  generate_text(record, prompt, ctx);
  return record;
}

CounterfactualRecord fizle_generate(const Instance& instance, const PipelineContext& ctx) {
  CounterfactualRecord record = start_record(instance, GenerationMethod::kFizle, ctx);
  if (!run_stage(record, kStageClassify,
                 [&] { record.predicted_label = ctx.models.classifier->classify(instance.text).label; })) {
    return record;
  }
  auto values = label_set_values(ctx.config.label_set);
  values["prediction"] = record.predicted_label;
  values["input_text"] = instance.text;

  ImportantWords proposed;
  if (ctx.config.include_important_words) {
    std::string answer;
    try {
      answer = ctx.models.generator->generate(ctx.prompts.get("fizle_words").render(values));
    } catch (const GenerationError&) {
      answer.clear();  // nothing left after cleaning: an empty list
    } catch (const Error& error) {
      if (error.category() != Error::Category::kTransport &&
          error.category() != Error::Category::kProtocol) {
        throw;
      }
      record.failed_stage = std::string(kStageWordExtraction);
      record.error = error.what();
      return record;
    }
    const ParsedWordList parsed = parse_word_list(answer);
    if (!parsed.parsed) {
      record.failed_stage = std::string(kStageWordExtraction);
      record.error = "word step answer is not a word list";
      return record;
    }
    if (parsed.words.empty()) record.notes.push_back("word step proposed no words");
    proposed.words = parsed.words;
    for (const auto& word : parsed.words) {
      if (!occurs_verbatim(word, instance.text)) record.hallucinated_words.push_back(word);
    }
    record.important_words = proposed;
  }

  values["important_words"] = format_word_list(proposed.words);
  const std::string prompt = ctx.prompts.get("fizle_edit").render(values);
  generate_text(record, prompt, ctx);
  return record;
}

CounterfactualRecord fitcf_generate(const Instance& instance,
                                    std::span<const Demonstration> demonstrations,
                                    const PipelineContext& ctx) {
  if (demonstrations.empty()) throw ConfigError("fitcf needs at least one demonstration");
  CounterfactualRecord record = start_record(instance, GenerationMethod::kFitCF, ctx);
  Prediction prediction;
  if (!run_stage(record, kStageClassify, [&] {
        prediction = ctx.models.classifier->classify(instance.text);
        record.predicted_label = prediction.label;
      })) {
    return record;
  }
  if (!attribute_words(record, ctx)) return record;

  auto values = label_set_values(ctx.config.label_set);
  values["prediction"] = record.predicted_label;
  values["important_words"] = word_list_of(record);
  values["counterpart"] = counterpart_label(prediction, ctx.config.label_set);
  values["demonstrations"] = format_demonstrations(demonstrations);
  values["input_text"] = instance.text;
  const std::string prompt = ctx.prompts.get("fitcf").render(values);
  if (!generate_text(record, prompt, ctx)) return record;

  run_stage(record, kStageVerification, [&] {
    record.flip_verified =
        verify_flip(instance.text, record.counterfactual_text, *ctx.models.classifier);
  });
  return record;
}

}  // namespace cfgen
