#include "vid2scenic/scenic/diagnostic.hpp"

#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

namespace vid2scenic::scenic {

std::string_view to_string(Severity s) { return s == Severity::error ? "error" : "warning"; }

bool has_errors(const std::vector<Diagnostic>& diags) {
    for (const auto& d : diags) {
        if (d.is_error()) return true;
    }
    return false;
}

nlohmann::json to_json(const Diagnostic& d) {
    nlohmann::json j;
    j["code"] = d.code;
    j["severity"] = to_string(d.severity);
    j["line"] = d.span.line;
    j["col"] = d.span.col;
    j["end_line"] = d.span.end_line;
    j["end_col"] = d.span.end_col;
    j["message"] = d.message;
    j["hint"] = d.hint ? nlohmann::json(*d.hint) : nlohmann::json(nullptr);
    return j;
}

Diagnostic diagnostic_from_json(const nlohmann::json& j) {
    Diagnostic d;
    d.code = j.at("code").get<std::string>();
    auto sev = j.at("severity").get<std::string>();
    if (sev == "error") d.severity = Severity::error;
    else if (sev == "warning") d.severity = Severity::warning;
    else throw std::invalid_argument("unknown diagnostic severity: " + sev);
    d.span.line = j.at("line").get<int>();
    d.span.col = j.at("col").get<int>();
    d.span.end_line = j.at("end_line").get<int>();
    d.span.end_col = j.at("end_col").get<int>();
    d.message = j.at("message").get<std::string>();
    if (j.contains("hint") && !j["hint"].is_null()) d.hint = j["hint"].get<std::string>();
    return d;
}

std::string to_json_lines(const std::vector<Diagnostic>& diags) {
    std::string out;
    for (const auto& d : diags) {
        out += to_json(d).dump();
        out += '\n';
    }
    return out;
}

std::vector<Diagnostic> diagnostics_from_json_lines(std::string_view text) {
    std::vector<Diagnostic> out;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        out.push_back(diagnostic_from_json(nlohmann::json::parse(line)));
    }
    return out;
}

std::string format_text(const Diagnostic& d, std::string_view file_name) {
    std::string out = fmt::format("{}:{}:{}: {}[{}]: {}", file_name, d.span.line, d.span.col,
                                  to_string(d.severity), d.code, d.message);
    if (d.hint) out += fmt::format("\n  hint: {}", *d.hint);
    return out;
}

}  // namespace vid2scenic::scenic
