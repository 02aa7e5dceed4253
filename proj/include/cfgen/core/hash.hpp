#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace cfgen {

// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view data);

// Stable 64-bit seed derived from a run seed and a string key. Independent of
// platform and scheduling.
std::uint64_t derive_seed(std::uint64_t run_seed, std::string_view key);

}  // namespace cfgen
