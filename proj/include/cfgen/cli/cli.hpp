#pragma once

#include <filesystem>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "cfgen/core/errors.hpp"
#include "cfgen/gateway/transport.hpp"

namespace cfgen::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitEndpoint = 3;
inline constexpr int kExitFatalInput = 4;

int exit_code_for(Error::Category category);

struct CommandOutcome {
  int exit_code = kExitOk;
  std::vector<std::filesystem::path> artifacts;
};

// Parses argv and runs one subcommand. `transport` replaces the default
// (HTTP plus mock:// routing) and lets tests count calls.
CommandOutcome run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
                       std::shared_ptr<Transport> transport = nullptr);

}  // namespace cfgen::cli
