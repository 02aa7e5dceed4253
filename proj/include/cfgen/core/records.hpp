#pragma once

#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "cfgen/core/types.hpp"

namespace cfgen {

nlohmann::json to_json(const CounterfactualRecord& record);
nlohmann::json to_json(const Demonstration& demonstration);
// Throws DatasetError naming the missing or mistyped field.
CounterfactualRecord record_from_json(const nlohmann::json& tree);

// One compact JSON object per line, in the given order.
void write_records(const std::filesystem::path& path, const std::vector<CounterfactualRecord>& records);
std::vector<CounterfactualRecord> read_records(const std::filesystem::path& path);

}  // namespace cfgen
