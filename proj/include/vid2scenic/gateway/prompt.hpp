#pragma once

#include <cstddef>
#include <filesystem>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "vid2scenic/features/feature_vector.hpp"
#include "vid2scenic/frames/frame_pack.hpp"

namespace vid2scenic::gateway {

enum class Role { script, feature };
std::string_view to_string(Role r);

struct FewShotExample {
    std::string label;
    frames::FramePack frames;
    /// Script text for the script role, a feature vector for the feature role.
    std::variant<std::string, features::FeatureVector> payload;
};

struct PromptPayload {
    Role role = Role::script;
    std::string system_text;
    std::vector<FewShotExample> examples;
    frames::FramePack query_frames;
    std::optional<std::string> feedback;
    std::optional<std::string> prior_script;
};

/// Throws std::invalid_argument when feedback is given without a prior
/// script or an example's payload does not match the role.
void check_payload(const PromptPayload& p);

class RegistryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Few-shot pairs loaded from `<dir>/script/<name>/{frames/, script.scenic}`
/// and `<dir>/feature/<name>/{frames/, features.json}`. Registration order
/// is the lexicographic order of the names.
class FewShotRegistry {
public:
    FewShotRegistry() = default;
    static FewShotRegistry load(const std::filesystem::path& fixtures_dir);

    void add(Role role, FewShotExample example);
    const std::vector<FewShotExample>& examples(Role role) const;
    /// Script text of the script example called `label`, if any.
    const std::string* script(std::string_view label) const;

private:
    std::vector<FewShotExample> script_examples_;
    std::vector<FewShotExample> feature_examples_;
};

/// Instruction blocks for the two roles.
std::string script_system_text();
std::string feature_system_text();

/// Text of a feature payload as shown to the model: a JSON object keyed by
/// taxonomy id.
std::string feature_payload_text(const features::FeatureVector& v);

}  // namespace vid2scenic::gateway
