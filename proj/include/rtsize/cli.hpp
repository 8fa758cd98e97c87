#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace rtsize {

// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitValidation = 2;

// Environment variable naming the default config file.
inline constexpr const char* kConfigEnv = "RTSIZE_CONFIG";

// Entry point of the `rtsize` tool; subcommands ingest, score, analyze,
// simulate and report.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rtsize
