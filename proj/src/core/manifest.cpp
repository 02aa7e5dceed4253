#include "cfgen/core/manifest.hpp"

#include <algorithm>
#include <fstream>

#include "cfgen/core/errors.hpp"
#include "cfgen/simd/kernels.hpp"

#ifndef CFGEN_VERSION
#define CFGEN_VERSION "0.0.0"
#endif

namespace cfgen {

std::string code_version() { return "cfgen " CFGEN_VERSION; }

RunManifest make_manifest(const RunConfig& config, const std::vector<std::string>& overrides,
                          std::vector<std::string> transcript_hashes) {
  std::sort(transcript_hashes.begin(), transcript_hashes.end());
  transcript_hashes.erase(std::unique(transcript_hashes.begin(), transcript_hashes.end()),
                          transcript_hashes.end());
  RunManifest manifest;
  manifest.config = to_json(config);
  manifest.config_hash = config_hash(config);
  manifest.code_version = code_version();
  manifest.seed = config.seed;
  manifest.overrides = overrides;
  manifest.transcript_hashes = std::move(transcript_hashes);
  manifest.simd_backend = std::string(simd::active_backend_name());
  return manifest;
}

nlohmann::json to_json(const RunManifest& manifest) {
  return nlohmann::json{{"config", manifest.config},
                        {"config_hash", manifest.config_hash},
                        {"code_version", manifest.code_version},
                        {"seed", manifest.seed},
                        {"overrides", manifest.overrides},
                        {"transcript_hashes", manifest.transcript_hashes},
                        {"simd_backend", manifest.simd_backend}};
}

RunManifest manifest_from_json(const nlohmann::json& tree) {
  try {
    RunManifest m;
    m.config = tree.at("config");
    m.config_hash = tree.at("config_hash").get<std::string>();
    m.code_version = tree.at("code_version").get<std::string>();
    m.seed = tree.at("seed").get<std::uint64_t>();
    m.overrides = tree.at("overrides").get<std::vector<std::string>>();
    m.transcript_hashes = tree.at("transcript_hashes").get<std::vector<std::string>>();
    m.simd_backend = tree.value("simd_backend", "");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("manifest: ") + e.what());
  }
}

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Error::Category::kInternal, "cannot write " + path.string());
  out << to_json(manifest).dump(2) << '\n';
}

RunManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open manifest");
  auto tree = nlohmann::json::parse(in, nullptr, false);
  if (tree.is_discarded()) throw ConfigError(path.string() + ": manifest is not valid JSON");
  return manifest_from_json(tree);
}

}  // namespace cfgen
