#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cfgen/core/binding.hpp"

namespace cfgen {

// Content-addressed store of raw endpoint responses.
//
// Key: SHA-256 over (kind, model name, canonical request JSON). nlohmann's
// default object type keeps keys sorted, so two requests differing only in
// key order serialize identically and share a key.
//
// On disk each entry is one file named by its hex key: a single-line JSON
// metadata header, a newline, then the raw response bytes. Entries are
// written once (temp file + rename) and never modified. With an empty
// directory path the cache lives in memory only.
class ResponseCache {
 public:
  struct Entry {
    std::string key;
    nlohmann::json header;
    std::string value;
  };

  explicit ResponseCache(std::filesystem::path directory = {});

  static std::string make_key(EndpointKind kind, const std::string& model_name,
                              const nlohmann::json& request);

  std::optional<std::string> get(const std::string& key) const;
  // No-op when the key already exists.
  void put(const std::string& key, EndpointKind kind, const std::string& model_name,
           const nlohmann::json& request, const std::string& value);

  // Reads one entry file (header + value). Throws ProtocolError on corruption.
  static Entry read_entry(const std::filesystem::path& file);

  std::vector<std::string> keys() const;
  const std::filesystem::path& directory() const { return directory_; }

 private:
  std::filesystem::path directory_;
  mutable std::shared_mutex mutex_;
  mutable std::map<std::string, std::string> memory_;
};

}  // namespace cfgen
