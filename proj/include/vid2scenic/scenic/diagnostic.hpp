#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace vid2scenic::scenic {

/// Half-open byte range into the source text, plus 1-based line/column
/// positions of its first and last byte. Columns count bytes.
struct Span {
    std::size_t begin = 0;
    std::size_t end = 0;
    int line = 1;
    int col = 1;
    int end_line = 1;
    int end_col = 1;

    friend bool operator==(const Span&, const Span&) = default;
};

enum class Severity { error, warning };

// Stable codes. The string forms are part of the JSON-lines contract.
namespace code {
inline constexpr std::string_view lex = "LEX";
inline constexpr std::string_view syntax = "SYNTAX";
inline constexpr std::string_view missing_ego = "MISSING_EGO";
inline constexpr std::string_view duplicate_ego = "DUPLICATE_EGO";
inline constexpr std::string_view duplicate_specifier = "DUPLICATE_SPECIFIER";
inline constexpr std::string_view duplicate_model = "DUPLICATE_MODEL";
inline constexpr std::string_view unknown_class = "CATALOG_UNKNOWN_CLASS";
inline constexpr std::string_view unknown_behavior = "CATALOG_UNKNOWN_BEHAVIOR";
inline constexpr std::string_view unknown_weather = "CATALOG_UNKNOWN_WEATHER";
inline constexpr std::string_view unknown_param = "CATALOG_UNKNOWN_PARAM";
inline constexpr std::string_view unknown_specifier = "CATALOG_UNKNOWN_SPECIFIER";
inline constexpr std::string_view behavior_arity = "BEHAVIOR_ARITY";
inline constexpr std::string_view duplicate_binding = "DUPLICATE_BINDING";
}  // namespace code

struct Diagnostic {
    Severity severity = Severity::error;
    std::string code;
    Span span;
    std::string message;
    std::optional<std::string> hint;

    bool is_error() const { return severity == Severity::error; }
};

std::string_view to_string(Severity s);

bool has_errors(const std::vector<Diagnostic>& diags);

/// `{code, severity, line, col, end_line, end_col, message, hint}`
nlohmann::json to_json(const Diagnostic& d);
Diagnostic diagnostic_from_json(const nlohmann::json& j);

/// One JSON object per line, newline-terminated.
std::string to_json_lines(const std::vector<Diagnostic>& diags);
std::vector<Diagnostic> diagnostics_from_json_lines(std::string_view text);

/// `file:line:col: error[CODE]: message` with an optional `  hint: ...` line.
std::string format_text(const Diagnostic& d, std::string_view file_name);

}  // namespace vid2scenic::scenic
