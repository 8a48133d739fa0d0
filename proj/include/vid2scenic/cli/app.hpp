#pragma once

#include <ostream>
#include <vector>
#include <string>

namespace vid2scenic::cli {

// Stable exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitGate = 1;      // validation errors, similarity gate failed
inline constexpr int kExitUsage = 2;     // bad arguments or config
inline constexpr int kExitPipeline = 3;  // a run ended without acceptance
inline constexpr int kExitIo = 4;        // unreadable input or output

/// Parses `args` (without the program name) and runs one command. Never
/// throws; everything ends in an exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vid2scenic::cli
