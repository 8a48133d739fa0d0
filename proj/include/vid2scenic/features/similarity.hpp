#pragma once

#include <array>
#include <string>
#include <vector>

#include <json.hpp>

#include "vid2scenic/features/feature_vector.hpp"

namespace vid2scenic::features {

enum class GapDirection { missing_in_sim, extra_in_sim };

struct Violation {
    std::size_t feature_index = 0;
    double gap = 0.0;
    double threshold = 0.0;
    GapDirection direction = GapDirection::missing_in_sim;

    FeatureId feature() const { return default_taxonomy().at(feature_index).id; }
    friend bool operator==(const Violation&, const Violation&) = default;
};

struct SimilarityReport {
    /// gap_i = sim_i - real_i: negative when the simulation lacks something
    /// the real video shows.
    std::array<double, kFeatureCount> gaps{};
    std::vector<Violation> violations;  // taxonomy order
    bool passed = true;

    friend bool operator==(const SimilarityReport&, const SimilarityReport&) = default;
};

/// Gates every component: a violation is recorded iff |gap_i| > tau_i, so a
/// gap exactly at the threshold passes. Throws ContractViolation when the
/// two vectors come from different taxonomy versions.
SimilarityReport similarity(const FeatureVector& real, const FeatureVector& sim,
                            const ThresholdConfig& cfg = {});

std::string_view to_string(GapDirection d);

/// `{"gaps": [...], "violations": [{"feature", "gap", "threshold", "direction"}], "passed": bool}`
nlohmann::json to_json(const SimilarityReport& r);
SimilarityReport similarity_report_from_json(const nlohmann::json& j);

/// One sentence per violation in taxonomy order, newline separated:
///   missing -> "there should be a <name> behavior, please improve on that"
///   extra   -> "there shouldn't be a <name> behavior, please improve on that"
/// Environment features say "condition" instead of "behavior". Throws
/// ContractViolation for an empty list.
std::string synthesize_feedback(std::vector<Violation> violations);

/// The sentence for a single violation, without trailing newline.
std::string feedback_sentence(const Violation& v);

struct FeedbackItem {
    std::size_t feature_index = 0;
    GapDirection direction = GapDirection::missing_in_sim;
    friend bool operator==(const FeedbackItem&, const FeedbackItem&) = default;
};

/// Recovers the (feature, direction) pairs from text produced by
/// `synthesize_feedback`. Lines that are not feedback sentences are skipped.
std::vector<FeedbackItem> parse_feedback(std::string_view text);

}  // namespace vid2scenic::features
