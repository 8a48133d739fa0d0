#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vid2scenic/features/feature_vector.hpp"
#include "vid2scenic/gateway/backend.hpp"

namespace vid2scenic::gateway {

/// Removes markdown fences and surrounding prose, leaving candidate script
/// text terminated by a newline.
std::string strip_to_script(std::string_view completion);

struct ParsedFeatures {
    features::FeatureVector vector;
    std::vector<std::string> warnings;
};

/// Lenient reading of a FeatureGPT answer: the first JSON object in the
/// text must carry all ten taxonomy ids. Unknown keys are ignored with a
/// warning; values up to 0.05 outside [0, 1] are clamped with a warning.
/// Anything else is a malformed_response GatewayError.
ParsedFeatures parse_feature_response(std::string_view text);

struct ScriptResult {
    std::string script;
    Completion call;
};

struct FeatureResult {
    features::FeatureVector vector;
    std::vector<std::string> warnings;
    Completion call;
};

/// Assembles prompts from the registry and runs them on a backend.
class Gateway {
public:
    Gateway(CompletionBackend& backend, const FewShotRegistry& registry)
        : backend_(backend), registry_(registry) {}

    PromptPayload script_prompt(const frames::FramePack& frames, const std::optional<std::string>& feedback,
                                const std::optional<std::string>& prior) const;
    PromptPayload feature_prompt(const frames::FramePack& frames) const;

    ScriptResult generate_script(const frames::FramePack& frames,
                                 const std::optional<std::string>& feedback = std::nullopt,
                                 const std::optional<std::string>& prior = std::nullopt);
    FeatureResult extract_features(const frames::FramePack& frames);

private:
    std::vector<FewShotExample> examples_for(Role role) const;

    CompletionBackend& backend_;
    const FewShotRegistry& registry_;
};

}  // namespace vid2scenic::gateway
