#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "json.hpp"

#include "tcbm/config.hpp"

namespace tcbm {

enum class Command { simulate, verify, optimize, scan, tower };

std::string to_string(Command command);
Command command_from_string(const std::string& name);

struct CommandResult {
    int exit_code = 0;  // 0 all verdicts pass, 1 some verdict failed, 2 error
    nlohmann::json summary;
};

/// Runs one command and writes its artifacts plus summary.json and the resolved
/// config.ini into `out`. Output files do not depend on `workers`. Timing goes to
/// `log` only. Errors are caught and reported in summary.json with exit code 2.
CommandResult run_command(Command command, const RunConfig& config,
                          const std::filesystem::path& out, unsigned workers = 1,
                          std::ostream* log = nullptr);

// Writes a summary.json for a run that failed before a config was available.
CommandResult write_error_summary(Command command, const std::filesystem::path& out,
                                  const std::string& message);

}  // namespace tcbm
