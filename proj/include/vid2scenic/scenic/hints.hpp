#pragma once

#include <set>
#include <string>
#include <string_view>

#include "vid2scenic/features/taxonomy.hpp"
#include "vid2scenic/scenic/ast.hpp"
#include "vid2scenic/scenic/script.hpp"

namespace vid2scenic::scenic {

/// Taxonomy labels a script syntactically evidences. Behavior features
/// contribute their feature id; two-sided environment features contribute
/// one of their labels ("sunny"/"rainy", "urban"/"highway").
using FeatureHints = std::set<std::string, std::less<>>;

/// How a non-ego object relates to the ego vehicle, read off its specifiers.
enum class Role { none, leading, parallel, behind, opposite };

/// What an object's behavior does, folded over nested behavior calls.
struct ActionSet {
    bool cruise = false;
    bool stop = false;
    bool lane_change = false;
    bool turn = false;
    bool walk = false;
};

bool is_vehicle_class(std::string_view object_class);
Role role_of(const ObjectDecl& object);
ActionSet actions_of(const ObjectDecl& object, const ScenarioTree& tree);

/// Feature labels evidenced by one non-ego object (empty for ego).
FeatureHints object_hints(const ObjectDecl& object, const ScenarioTree& tree);

/// Pure function of the tree:
///  - weather param whose presets are all rainy (all clear) -> rainy (sunny)
///  - map/carla_map naming a highway town (urban town) -> highway (urban)
///  - any non-vehicle, non-ego object -> random object on road
///  - vehicles by role x action, e.g. leading + stop -> leading vehicle stopped;
///    a vehicle with no behavior is parked, i.e. stopped.
FeatureHints static_feature_hints(const ScenarioTree& tree);
FeatureHints static_feature_hints(const ScenicScript& script);

}  // namespace vid2scenic::scenic
