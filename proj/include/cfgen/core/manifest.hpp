#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cfgen/core/run_config.hpp"

namespace cfgen {

// Everything needed to replay a run: the resolved config, the overrides that
// produced it, and the content hashes of every model call it made.
struct RunManifest {
  nlohmann::json config;
  std::string config_hash;
  std::string code_version;
  std::uint64_t seed = 0;
  std::vector<std::string> overrides;
  // Sorted, unique cache keys of every model call.
  std::vector<std::string> transcript_hashes;
  std::string simd_backend;
};

RunManifest make_manifest(const RunConfig& config, const std::vector<std::string>& overrides,
                          std::vector<std::string> transcript_hashes);

nlohmann::json to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const nlohmann::json& tree);

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);
RunManifest read_manifest(const std::filesystem::path& path);

std::string code_version();

}  // namespace cfgen
