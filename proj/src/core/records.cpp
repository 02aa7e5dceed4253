#include "cfgen/core/records.hpp"

#include <fstream>

#include "cfgen/core/errors.hpp"

namespace cfgen {

using nlohmann::json;

json to_json(const CounterfactualRecord& r) {
  json important = nullptr;
  if (r.important_words) {
    important = {{"words", r.important_words->words}, {"scores", r.important_words->source_scores}};
  }
  json out = {
      {"id", r.instance.id},
      {"text", r.instance.text},
      {"gold_label", r.instance.gold_label ? json(*r.instance.gold_label) : json(nullptr)},
      {"predicted_label", r.predicted_label},
      {"counterfactual_text", r.counterfactual_text},
      {"method", to_string(r.method)},
      {"attribution_method",
       r.attribution_method ? json(to_string(*r.attribution_method)) : json(nullptr)},
      {"important_words", important},
      {"flip_verified", to_string(r.flip_verified)},
      {"generator_model", r.generator_model},
      {"failed_stage", r.failed_stage},
      {"error", r.error},
      {"no_edit", r.no_edit},
      {"hallucinated_words", r.hallucinated_words},
      {"notes", r.notes},
  };
  return out;
}

json to_json(const Demonstration& d) {
  return {{"instance_id", d.instance_id},
          {"original_text", d.original_text},
          {"edited_text", d.edited_text},
          {"cluster_id", d.cluster_id},
          {"rank_in_cluster", d.rank_in_cluster}};
}

CounterfactualRecord record_from_json(const json& tree) {
  try {
    CounterfactualRecord r;
    r.instance.id = tree.at("id").get<std::string>();
    r.instance.text = tree.at("text").get<std::string>();
    if (tree.contains("gold_label") && !tree["gold_label"].is_null()) {
      r.instance.gold_label = tree["gold_label"].get<std::string>();
    }
    r.predicted_label = tree.at("predicted_label").get<std::string>();
    r.counterfactual_text = tree.at("counterfactual_text").get<std::string>();
    r.method = parse_generation_method(tree.at("method").get<std::string>());
    if (!tree.at("attribution_method").is_null()) {
      r.attribution_method = parse_attribution_method(tree["attribution_method"].get<std::string>());
    }
    if (!tree.at("important_words").is_null()) {
      ImportantWords words;
      words.words = tree["important_words"].at("words").get<std::vector<std::string>>();
      words.source_scores = tree["important_words"].at("scores").get<std::vector<double>>();
      r.important_words = std::move(words);
    }
    r.flip_verified = parse_flip_verdict(tree.at("flip_verified").get<std::string>());
    r.generator_model = tree.at("generator_model").get<std::string>();
    r.failed_stage = tree.at("failed_stage").get<std::string>();
    r.error = tree.at("error").get<std::string>();
    r.no_edit = tree.at("no_edit").get<bool>();
    r.hallucinated_words = tree.at("hallucinated_words").get<std::vector<std::string>>();
    r.notes = tree.at("notes").get<std::vector<std::string>>();
    return r;
  } catch (const json::exception& e) {
    throw DatasetError(std::string("malformed record: ") + e.what());
  } catch (const ConfigError& e) {
    throw DatasetError(std::string("malformed record: ") + e.what());
  }
}

void write_records(const std::filesystem::path& path, const std::vector<CounterfactualRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Error::Category::kInternal, "cannot write " + path.string());
  for (const auto& record : records) out << to_json(record).dump() << '\n';
}

std::vector<CounterfactualRecord> read_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot read " + path.string());
  std::vector<CounterfactualRecord> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json tree;
    try {
      tree = json::parse(line);
    } catch (const json::exception&) {
      throw DatasetError(path.string() + ": malformed JSON at line " + std::to_string(number));
    }
    try {
      out.push_back(record_from_json(tree));
    } catch (const DatasetError& e) {
      throw DatasetError(path.string() + ": line " + std::to_string(number) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace cfgen
