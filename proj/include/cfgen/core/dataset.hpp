#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cfgen/core/types.hpp"

namespace cfgen {

// JSON-lines, one {"id", "text", optional "label"} object per line. Blank
// lines are skipped. Errors carry the 1-based line number.
std::vector<Instance> load_dataset(const std::filesystem::path& path, const LabelSet& label_set);
std::vector<Instance> parse_dataset(std::istream& in, const LabelSet& label_set);

void write_dataset(std::ostream& out, const std::vector<Instance>& instances);

nlohmann::json to_json(const Instance& instance);

}  // namespace cfgen
