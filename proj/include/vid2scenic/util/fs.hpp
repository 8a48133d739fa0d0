#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

namespace vid2scenic::util {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file, flushes, then renames over `path`, so
/// readers see either the old content or the new content.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Fresh directory `<parent>/<prefix>XXXXXX`.
std::filesystem::path make_temp_dir(const std::filesystem::path& parent, std::string_view prefix);

/// Replaces `target` (if present) with the directory `staged` via rename.
void publish_dir(const std::filesystem::path& staged, const std::filesystem::path& target);

}  // namespace vid2scenic::util
