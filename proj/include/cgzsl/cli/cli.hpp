#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace cgzsl::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitIo = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumeric = 3;

/// Runs one subcommand (synth, split, train, eval, report). args[0] is the
/// program name. Returns the process exit code; never throws.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cgzsl::cli
