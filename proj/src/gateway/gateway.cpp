#include "vid2scenic/gateway/gateway.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <regex>

#include <fmt/format.h>

namespace vid2scenic::gateway {

namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        if (end == text.size()) break;
        start = end + 1;
    }
    return lines;
}

bool is_blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

bool is_fence(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    return s.substr(0, 3) == "```";
}

// Top-level script lines start with a keyword, a binding, or a comment;
// prose sentences do not.
bool looks_like_script(std::string_view line) {
    static const std::regex start(
        R"(^(#|param\b|model\b|behavior\b|require\b|terminate\b|import\b|from\b|new\b|[A-Za-z_]\w*\s*=[^=]))");
    if (line.empty()) return false;
    if (line.front() == ' ' || line.front() == '\t') return true;
    return std::regex_search(line.begin(), line.end(), start);
}

std::string join(const std::vector<std::string_view>& lines, std::size_t from, std::size_t to) {
    std::string out;
    for (std::size_t i = from; i < to; ++i) {
        out += lines[i];
        out += '\n';
    }
    return out;
}

}  // namespace

std::string strip_to_script(std::string_view completion) {
    auto lines = split_lines(completion);

    std::size_t open = lines.size();
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (is_fence(lines[i])) {
            open = i;
            break;
        }
    }
    if (open < lines.size()) {
        std::size_t close = lines.size();
        for (std::size_t i = open + 1; i < lines.size(); ++i) {
            if (is_fence(lines[i])) {
                close = i;
                break;
            }
        }
        return join(lines, open + 1, close);
    }

    std::size_t first = 0;
    while (first < lines.size() && !looks_like_script(lines[first])) ++first;
    std::size_t last = lines.size();
    while (last > first && (is_blank(lines[last - 1]) || !looks_like_script(lines[last - 1]))) --last;
    if (first >= last) return join(lines, 0, lines.size());
    return join(lines, first, last);
}

ParsedFeatures parse_feature_response(std::string_view text) {
    // First balanced {...} that parses as a JSON object.
    std::optional<nlohmann::json> found;
    for (std::size_t open = text.find('{'); open != std::string_view::npos && !found;
         open = text.find('{', open + 1)) {
        int depth = 0;
        bool in_string = false;
        for (std::size_t i = open; i < text.size(); ++i) {
            char c = text[i];
            if (in_string) {
                if (c == '\\') ++i;
                else if (c == '"') in_string = false;
                continue;
            }
            if (c == '"') in_string = true;
            else if (c == '{') ++depth;
            else if (c == '}' && --depth == 0) {
                auto j = nlohmann::json::parse(text.substr(open, i - open + 1), nullptr, false);
                if (!j.is_discarded() && j.is_object()) found = std::move(j);
                break;
            }
        }
    }
    if (!found) throw GatewayError(ErrorKind::malformed_response, "no JSON object in feature response");

    const auto& tax = features::default_taxonomy();
    ParsedFeatures out;
    features::FeatureVector::Values values{};
    for (std::size_t i = 0; i < tax.size(); ++i) {
        std::string id(tax.at(i).id);
        if (!found->contains(id)) {
            throw GatewayError(ErrorKind::malformed_response, fmt::format("feature response lacks \"{}\"", id));
        }
        const auto& v = (*found)[id];
        if (!v.is_number()) {
            throw GatewayError(ErrorKind::malformed_response, fmt::format("\"{}\" is not a number", id));
        }
        double x = v.get<double>();
        if (!std::isfinite(x) || x < -0.05 || x > 1.05) {
            throw GatewayError(ErrorKind::malformed_response, fmt::format("\"{}\" = {} is not a probability", id, x));
        }
        if (x < 0.0 || x > 1.0) {
            double clamped = std::clamp(x, 0.0, 1.0);
            out.warnings.push_back(fmt::format("clamped \"{}\" from {} to {}", id, x, clamped));
            x = clamped;
        }
        values[i] = x;
    }
    for (const auto& [key, _] : found->items()) {
        if (!tax.index_of(key)) out.warnings.push_back(fmt::format("ignored unknown key \"{}\"", key));
    }
    out.vector = features::FeatureVector(values);
    return out;
}

std::vector<FewShotExample> Gateway::examples_for(Role role) const {
    const auto& all = registry_.examples(role);
    const Capabilities caps = backend_.capabilities();
    std::vector<FewShotExample> out;
    std::size_t images = 0;
    for (const auto& ex : all) {
        if (out.size() >= caps.max_examples) break;
        if (images + ex.frames.images.size() > caps.max_images) break;
        images += ex.frames.images.size();
        out.push_back(ex);
    }
    return out;
}

PromptPayload Gateway::script_prompt(const frames::FramePack& frames, const std::optional<std::string>& feedback,
                                     const std::optional<std::string>& prior) const {
    PromptPayload p{Role::script, script_system_text(), examples_for(Role::script), frames, feedback, prior};
    check_payload(p);
    return p;
}

PromptPayload Gateway::feature_prompt(const frames::FramePack& frames) const {
    PromptPayload p{Role::feature, feature_system_text(), examples_for(Role::feature), frames, std::nullopt,
                    std::nullopt};
    check_payload(p);
    return p;
}

ScriptResult Gateway::generate_script(const frames::FramePack& frames, const std::optional<std::string>& feedback,
                                      const std::optional<std::string>& prior) {
    Completion c = backend_.complete(script_prompt(frames, feedback, prior));
    std::string script = strip_to_script(c.text);
    return ScriptResult{std::move(script), std::move(c)};
}

FeatureResult Gateway::extract_features(const frames::FramePack& frames) {
    Completion c = backend_.complete(feature_prompt(frames));
    ParsedFeatures parsed = parse_feature_response(c.text);
    return FeatureResult{parsed.vector, std::move(parsed.warnings), std::move(c)};
}

}  // namespace vid2scenic::gateway
