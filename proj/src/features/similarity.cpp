#include "vid2scenic/features/similarity.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include <fmt/format.h>

namespace vid2scenic::features {

SimilarityReport similarity(const FeatureVector& real, const FeatureVector& sim,
                            const ThresholdConfig& cfg) {
    if (real.taxonomy_version() != sim.taxonomy_version()) {
        throw ContractViolation(fmt::format("feature vectors use different taxonomies ('{}' vs '{}')",
                                            real.taxonomy_version(), sim.taxonomy_version()));
    }
    SimilarityReport report;
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        const double gap = sim[i] - real[i];
        const double tau = cfg.threshold(i);
        report.gaps[i] = gap;
        if (std::fabs(gap) > tau) {
            report.violations.push_back(Violation{
                i, gap, tau, gap < 0 ? GapDirection::missing_in_sim : GapDirection::extra_in_sim});
        }
    }
    report.passed = report.violations.empty();
    return report;
}

std::string_view to_string(GapDirection d) {
    return d == GapDirection::missing_in_sim ? "missing_in_sim" : "extra_in_sim";
}

nlohmann::json to_json(const SimilarityReport& r) {
    nlohmann::json violations = nlohmann::json::array();
    for (const auto& v : r.violations) {
        violations.push_back({{"feature", v.feature()},
                              {"gap", v.gap},
                              {"threshold", v.threshold},
                              {"direction", to_string(v.direction)}});
    }
    return nlohmann::json{{"gaps", r.gaps}, {"violations", violations}, {"passed", r.passed}};
}

SimilarityReport similarity_report_from_json(const nlohmann::json& j) {
    SimilarityReport r;
    const auto& gaps = j.at("gaps");
    if (!gaps.is_array() || gaps.size() != kFeatureCount) {
        throw ContractViolation("similarity report needs exactly 10 gaps");
    }
    for (std::size_t i = 0; i < kFeatureCount; ++i) r.gaps[i] = gaps[i].get<double>();
    for (const auto& v : j.at("violations")) {
        auto id = v.at("feature").get<std::string>();
        auto index = default_taxonomy().index_of(id);
        if (!index) throw ContractViolation("similarity report names unknown feature " + id);
        auto dir = v.at("direction").get<std::string>();
        r.violations.push_back(Violation{
            *index, v.at("gap").get<double>(), v.at("threshold").get<double>(),
            dir == "missing_in_sim" ? GapDirection::missing_in_sim : GapDirection::extra_in_sim});
    }
    r.passed = j.at("passed").get<bool>();
    return r;
}

std::string feedback_sentence(const Violation& v) {
    const auto& d = default_taxonomy().at(v.feature_index);
    std::string name(d.display_name);
    std::transform(name.begin(), name.end(), name.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    const char* noun = d.kind == FeatureKind::environment ? "condition" : "behavior";
    const char* lead = v.direction == GapDirection::missing_in_sim ? "there should be" : "there shouldn't be";
    return fmt::format("{} a {} {}, please improve on that", lead, name, noun);
}

std::string synthesize_feedback(std::vector<Violation> violations) {
    if (violations.empty()) throw ContractViolation("feedback requires at least one violation");
    std::stable_sort(violations.begin(), violations.end(),
                     [](const Violation& a, const Violation& b) { return a.feature_index < b.feature_index; });
    std::string out;
    for (std::size_t i = 0; i < violations.size(); ++i) {
        if (i) out += '\n';
        out += feedback_sentence(violations[i]);
    }
    return out;
}

std::vector<FeedbackItem> parse_feedback(std::string_view text) {
    std::vector<FeedbackItem> items;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
        for (std::size_t i = 0; i < kFeatureCount; ++i) {
            bool matched = false;
            for (auto dir : {GapDirection::missing_in_sim, GapDirection::extra_in_sim}) {
                if (line == feedback_sentence(Violation{i, 0.0, 0.0, dir})) {
                    items.push_back(FeedbackItem{i, dir});
                    matched = true;
                    break;
                }
            }
            if (matched) break;
        }
        start = end + 1;
    }
    return items;
}

}  // namespace vid2scenic::features
