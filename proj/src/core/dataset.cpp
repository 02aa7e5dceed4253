#include "cfgen/core/dataset.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "cfgen/core/errors.hpp"
#include "cfgen/core/text.hpp"

namespace cfgen {

namespace {

std::string at_line(std::size_t line) { return " at line " + std::to_string(line); }

Instance parse_line(const std::string& raw, std::size_t line, const LabelSet& label_set) {
  nlohmann::json obj;
  try {
    obj = nlohmann::json::parse(raw);
  } catch (const nlohmann::json::parse_error& e) {
    throw DatasetError("malformed JSON" + at_line(line) + ": " + e.what());
  }
  if (!obj.is_object()) throw DatasetError("expected a JSON object" + at_line(line));

  Instance instance;
  auto id = obj.find("id");
  if (id == obj.end() || !id->is_string()) {
    throw DatasetError("missing string field 'id'" + at_line(line));
  }
  instance.id = id->get<std::string>();

  auto text = obj.find("text");
  if (text == obj.end() || !text->is_string()) {
    throw DatasetError("missing string field 'text'" + at_line(line));
  }
  instance.text = text->get<std::string>();
  if (normalized_word_tokens(instance.text).empty()) {
    throw DatasetError("empty text" + at_line(line));
  }

  if (auto label = obj.find("label"); label != obj.end() && !label->is_null()) {
    if (!label->is_string()) throw DatasetError("field 'label' must be a string" + at_line(line));
    std::string name = label->get<std::string>();
    if (!label_set.contains(name)) {
      throw DatasetError("unknown label '" + name + "'" + at_line(line));
    }
    instance.gold_label = std::move(name);
  }
  return instance;
}

}  // namespace

std::vector<Instance> parse_dataset(std::istream& in, const LabelSet& label_set) {
  std::vector<Instance> instances;
  std::unordered_set<std::string> ids;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (trim(raw).empty()) continue;
    Instance instance = parse_line(raw, line, label_set);
    if (!ids.insert(instance.id).second) {
      throw DatasetError("duplicate id '" + instance.id + "'" + at_line(line));
    }
    instances.push_back(std::move(instance));
  }
  if (instances.empty()) throw DatasetError("dataset is empty");
  return instances;
}

std::vector<Instance> load_dataset(const std::filesystem::path& path, const LabelSet& label_set) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open dataset '" + path.string() + "'");
  try {
    return parse_dataset(in, label_set);
  } catch (const DatasetError& e) {
    throw DatasetError(path.string() + ": " + e.what());
  }
}

nlohmann::json to_json(const Instance& instance) {
  nlohmann::json obj{{"id", instance.id}, {"text", instance.text}};
  if (instance.gold_label) obj["label"] = *instance.gold_label;
  return obj;
}

void write_dataset(std::ostream& out, const std::vector<Instance>& instances) {
  for (const auto& instance : instances) out << to_json(instance).dump() << '\n';
}

}  // namespace cfgen
