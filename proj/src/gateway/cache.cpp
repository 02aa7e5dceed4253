#include "cfgen/gateway/cache.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "cfgen/core/errors.hpp"
#include "cfgen/core/hash.hpp"

namespace cfgen {

namespace {

bool is_hex_key(const std::string& name) {
  if (name.size() != 64) return false;
  for (char c : name) {
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
  }
  return true;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

ResponseCache::ResponseCache(std::filesystem::path directory) : directory_(std::move(directory)) {
  if (!directory_.empty()) std::filesystem::create_directories(directory_);
}

std::string ResponseCache::make_key(EndpointKind kind, const std::string& model_name,
                                    const nlohmann::json& request) {
  std::string material(to_string(kind));
  material += '\n';
  material += model_name;
  material += '\n';
  material += request.dump();
  return sha256_hex(material);
}

ResponseCache::Entry ResponseCache::read_entry(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ProtocolError("cannot read cache entry " + file.string());
  std::string header_line;
  std::getline(in, header_line);
  std::ostringstream rest;
  rest << in.rdbuf();
  auto header = nlohmann::json::parse(header_line, nullptr, false);
  if (header.is_discarded() || !header.is_object()) {
    throw ProtocolError("corrupt cache entry header in " + file.string());
  }
  return Entry{file.filename().string(), std::move(header), rest.str()};
}

std::optional<std::string> ResponseCache::get(const std::string& key) const {
  {
    std::shared_lock lock(mutex_);
    if (auto it = memory_.find(key); it != memory_.end()) return it->second;
  }
  if (directory_.empty()) return std::nullopt;
  const auto file = directory_ / key;
  std::error_code ec;
  if (!std::filesystem::exists(file, ec)) return std::nullopt;
  Entry entry = read_entry(file);
  std::unique_lock lock(mutex_);
  return memory_.emplace(key, std::move(entry.value)).first->second;
}

void ResponseCache::put(const std::string& key, EndpointKind kind, const std::string& model_name,
                        const nlohmann::json& request, const std::string& value) {
  std::unique_lock lock(mutex_);
  if (!memory_.emplace(key, value).second) return;
  if (directory_.empty()) return;
  const auto file = directory_ / key;
  if (std::filesystem::exists(file)) return;

  const nlohmann::json header{{"kind", to_string(kind)},
                              {"model", model_name},
                              {"created_at", utc_timestamp()},
                              {"request", request}};
  std::ostringstream tmp_name;
  tmp_name << key << ".tmp." << std::this_thread::get_id();
  const auto tmp = directory_ / tmp_name.str();
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error(Error::Category::kInternal, "cannot write cache entry " + tmp.string());
    out << header.dump() << '\n' << value;
  }
  std::filesystem::rename(tmp, file);
}

std::vector<std::string> ResponseCache::keys() const {
  std::vector<std::string> out;
  if (directory_.empty()) {
    std::shared_lock lock(mutex_);
    for (const auto& [key, value] : memory_) out.push_back(key);
    return out;
  }
  for (const auto& entry : std::filesystem::directory_iterator(directory_)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && is_hex_key(name)) out.push_back(name);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace cfgen
