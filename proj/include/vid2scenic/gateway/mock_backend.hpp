#pragma once

#include <map>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "vid2scenic/features/similarity.hpp"
#include "vid2scenic/gateway/backend.hpp"
#include "vid2scenic/scenic/catalog.hpp"
#include "vid2scenic/scenic/hints.hpp"

namespace vid2scenic::gateway {

/// How the mock ScriptGPT answers feedback.
///  faithful:      repairs every fed-back feature and nothing else
///  one_at_a_time: repairs only the first fed-back feature
///  stall:         returns the prior script unchanged
enum class MockMode { faithful, one_at_a_time, stall };
MockMode mock_mode_from_string(std::string_view s);
std::string_view to_string(MockMode m);

/// Feature vector the mock FeatureGPT reports for a set of hints: 1 for
/// each evidenced behavior, 0 otherwise; for two-sided environment
/// features 1 (first label), 0 (second label) or 0.5 when neither shows.
features::FeatureVector hint_vector(const scenic::FeatureHints& hints);

/// Scripted edit for feature feedback. Objects evidencing an unwanted
/// feature are removed; any wanted feature no longer evidenced gets a
/// minimal object added; environment features flip the weather / map params.
scenic::ScenarioTree apply_feature_feedback(const scenic::ScenarioTree& tree,
                                            const std::vector<features::FeedbackItem>& items);

/// Scripted fix for catalog errors: unknown classes become Pedestrian,
/// unknown object behaviors and specifiers are dropped, unknown sub-behavior
/// calls become Idle(), unknown params are removed, unknown weather is reset
/// and surplus behavior arguments truncated.
scenic::ScenarioTree repair_for_catalog(const scenic::ScenarioTree& tree, const scenic::Catalog& catalog);

/// Deterministic stand-in for both model roles. Reads the token frames
/// produced from `.mockvid` documents:
///   feature role: "features" (array or id map) > "script" text > "fixture"
///                 name, whose script's static hints become the vector
///   script role:  "initial_script" text > "fixture" canned script; with
///                 feedback it edits the prior script per MockMode
/// "fail_feature" / "fail_script" (an ErrorKind name) make the role fail.
class MockBackend : public CompletionBackend {
public:
    MockBackend(const FewShotRegistry& registry, scenic::Catalog catalog, MockMode mode);

    Completion complete(const PromptPayload& payload) override;

    int calls(Role role) const;
    /// Calls whose query video is the document `video`.
    int calls(Role role, const nlohmann::json& video) const;

private:
    std::string script_answer(const nlohmann::json& video, const PromptPayload& p) const;
    std::string feature_answer(const nlohmann::json& video) const;

    const FewShotRegistry& registry_;
    scenic::Catalog catalog_;
    MockMode mode_;
    mutable std::mutex mu_;
    std::map<std::pair<Role, std::string>, int> counts_;
};

}  // namespace vid2scenic::gateway
