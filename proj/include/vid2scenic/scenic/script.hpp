#pragma once

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "vid2scenic/scenic/ast.hpp"
#include "vid2scenic/scenic/diagnostic.hpp"

namespace vid2scenic::scenic {

/// An accepted scenario: its source text and parsed tree. Immutable once
/// constructed by `parse`.
class ScenicScript {
public:
    ScenicScript(std::string source, ScenarioTree tree);

    const std::string& source() const { return source_; }
    const ScenarioTree& tree() const { return tree_; }
    /// Number of lines that contain something other than whitespace.
    int line_count() const { return line_count_; }

private:
    std::string source_;
    ScenarioTree tree_;
    int line_count_ = 0;
};

int count_nonblank_lines(std::string_view text);

/// Either a script or the error diagnostics explaining why there is none.
class ParseResult {
public:
    ParseResult(ScenicScript script) : value_(std::move(script)) {}
    ParseResult(std::vector<Diagnostic> errors) : value_(std::move(errors)) {}

    bool has_value() const { return std::holds_alternative<ScenicScript>(value_); }
    explicit operator bool() const { return has_value(); }

    const ScenicScript& value() const& { return std::get<ScenicScript>(value_); }
    ScenicScript&& value() && { return std::get<ScenicScript>(std::move(value_)); }
    const std::vector<Diagnostic>& diagnostics() const {
        return std::get<std::vector<Diagnostic>>(value_);
    }

private:
    std::variant<ScenicScript, std::vector<Diagnostic>> value_;
};

/// Parses the supported dialect. On success the tree satisfies the
/// structural invariants (exactly one `ego`, no repeated specifier kind per
/// object); catalog checks are left to `validate`.
ParseResult parse(std::string_view source);

}  // namespace vid2scenic::scenic
