#pragma once

#include <sys/types.h>

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace vid2scenic::util {

struct ProcessOptions {
    std::optional<std::chrono::milliseconds> timeout;
    std::filesystem::path cwd;
    /// Extra environment entries layered over the parent's environment.
    std::map<std::string, std::string> env;
    /// Called in the parent right after fork with the child's pid (which is
    /// also its process-group id).
    std::function<void(pid_t)> on_start;
};

struct ProcessResult {
    int exit_code = -1;    // valid when term_signal == 0
    int term_signal = 0;   // signal that ended the child, if any
    bool timed_out = false;
    bool spawn_failed = false;
    std::string out;
    std::string err;
    double wall_s = 0.0;

    bool ok() const { return !timed_out && !spawn_failed && term_signal == 0 && exit_code == 0; }
};

/// Runs argv[0] (PATH lookup) in its own process group without a shell.
/// On timeout the whole group gets SIGKILL. After the direct child exits,
/// any process still left in its group is killed too, so nothing started by
/// the tool outlives the call. The direct child is also SIGKILLed if the
/// calling process dies first.
ProcessResult run_process(const std::vector<std::string>& argv, const ProcessOptions& opts = {});

/// Splits a command template into words. Whitespace separates words; single
/// and double quotes group, backslash escapes the next character outside
/// single quotes. No expansion of any kind.
std::vector<std::string> split_command(const std::string& command);

/// Replaces `{key}` occurrences in every word. Unknown placeholders stay.
std::vector<std::string> substitute(std::vector<std::string> words,
                                    const std::map<std::string, std::string>& values);

}  // namespace vid2scenic::util
