#include "vid2scenic/scenic/hints.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <regex>

namespace vid2scenic::scenic {

namespace {

namespace fid = features::feature_id;

constexpr std::array<std::string_view, 7> kVehicleClasses = {
    "Car", "NPCCar", "Truck", "Bus", "Van", "Motorcycle", "Bicycle",
};

constexpr std::array<std::string_view, 5> kCruiseBehaviors = {
    "FollowLaneBehavior", "FollowTrajectoryBehavior", "ConstantThrottleBehavior",
    "AccelerateForwardBehavior", "DriveAvoidingCollisions",
};

constexpr std::array<std::string_view, 3> kWalkBehaviors = {
    "WalkForwardBehavior", "CrossingBehavior", "WalkBehavior",
};

constexpr std::array<std::string_view, 6> kUrbanTowns = {
    "Town01", "Town02", "Town03", "Town05", "Town07", "Town10HD",
};

constexpr std::array<std::string_view, 2> kHighwayTowns = {"Town04", "Town06"};

template <std::size_t N>
bool contains(const std::array<std::string_view, N>& set, std::string_view v) {
    for (auto s : set) {
        if (s == v) return true;
    }
    return false;
}

void merge(ActionSet& into, const ActionSet& from) {
    into.cruise |= from.cruise;
    into.stop |= from.stop;
    into.lane_change |= from.lane_change;
    into.turn |= from.turn;
    into.walk |= from.walk;
}

std::string ref_name(const Expr& e) {
    if (e.kind == ExprKind::call) return e.callee_name();
    if (e.kind == ExprKind::name) return e.text;
    return {};
}

class ActionCollector {
public:
    explicit ActionCollector(const ScenarioTree& tree) : tree_(tree) {}

    ActionSet behavior(const std::string& name) {
        ActionSet out;
        if (name.empty()) return out;
        if (name == "LaneChangeBehavior") out.lane_change = true;
        else if (name == "TurnBehavior") out.turn = true;
        else if (name == "Idle") out.stop = true;
        else if (contains(kCruiseBehaviors, name)) out.cruise = true;
        else if (contains(kWalkBehaviors, name)) out.walk = true;
        else if (const BehaviorDecl* decl = tree_.find_behavior(name)) {
            if (std::find(stack_.begin(), stack_.end(), name) != stack_.end()) return out;
            stack_.push_back(name);
            block(decl->body, out);
            stack_.pop_back();
        }
        return out;
    }

private:
    void block(const std::vector<Stmt>& body, ActionSet& out) {
        for (const auto& s : body) {
            if (s.kind == StmtKind::do_ && !s.exprs.empty()) merge(out, behavior(ref_name(s.exprs[0])));
            if (s.kind == StmtKind::take) {
                for (const auto& action : s.exprs) {
                    auto n = ref_name(action);
                    if (n == "SetBrakeAction" || n == "SetHandBrakeAction") out.stop = true;
                }
            }
            block(s.body, out);
            for (const auto& h : s.handlers) block(h.body, out);
            block(s.orelse, out);
        }
    }

    const ScenarioTree& tree_;
    std::vector<std::string> stack_;
};

std::optional<double> numeric(const Expr& e) {
    if (e.kind == ExprKind::number) return std::strtod(e.text.c_str(), nullptr);
    if (e.kind == ExprKind::unary && e.args.size() == 1) {
        auto v = numeric(e.args[0]);
        if (!v) return std::nullopt;
        if (e.text == "-") return -*v;
        if (e.text == "+") return *v;
    }
    return std::nullopt;
}

bool mentions_half_turn(const Expr& e) {
    if (auto v = numeric(e); v && std::fabs(std::fabs(*v) - 180.0) < 1e-9) return true;
    for (const auto& a : e.args) {
        if (mentions_half_turn(a)) return true;
    }
    return false;
}

void collect_strings(const Expr& e, std::vector<std::string>& out) {
    if (e.kind == ExprKind::string) out.push_back(e.text);
    for (const auto& a : e.args) collect_strings(a, out);
}

}  // namespace

bool is_vehicle_class(std::string_view object_class) { return contains(kVehicleClasses, object_class); }

Role role_of(const ObjectDecl& object) {
    for (const auto& s : object.specifiers) {
        if ((s.kind == "facing" || s.kind == "facing toward") && mentions_half_turn(s.value)) {
            return Role::opposite;
        }
    }
    for (const auto& s : object.specifiers) {
        if (s.kind == "ahead of") return Role::leading;
        if (s.kind == "behind") return Role::behind;
        if (s.kind == "left of" || s.kind == "right of") return Role::parallel;
        if (s.kind == "offset by" && s.value.kind == ExprKind::tuple && s.value.args.size() >= 2) {
            auto dx = numeric(s.value.args[0]);
            auto dy = numeric(s.value.args[1]);
            if (!dx || !dy) continue;
            if (std::fabs(*dx) >= 2.0) return Role::parallel;
            if (*dy > 0) return Role::leading;
            if (*dy < 0) return Role::behind;
        }
    }
    return Role::none;
}

ActionSet actions_of(const ObjectDecl& object, const ScenarioTree& tree) {
    if (!object.behavior) {
        ActionSet parked;
        parked.stop = true;
        return parked;
    }
    return ActionCollector(tree).behavior(ref_name(*object.behavior));
}

FeatureHints object_hints(const ObjectDecl& object, const ScenarioTree& tree) {
    FeatureHints hints;
    if (object.binding == "ego") return hints;
    if (!is_vehicle_class(object.object_class)) {
        hints.emplace(fid::random_object_on_road);
        return hints;
    }
    const ActionSet a = actions_of(object, tree);
    switch (role_of(object)) {
        case Role::leading:
            if (a.cruise) hints.emplace(fid::leading_vehicle_cruising);
            if (a.stop) hints.emplace(fid::leading_vehicle_stopped);
            break;
        case Role::parallel:
            if (a.lane_change) hints.emplace(fid::parallel_vehicle_cutting_in);
            if (a.cruise) hints.emplace(fid::parallel_vehicle_cruising);
            if (a.stop) hints.emplace(fid::parallel_vehicle_stopped);
            break;
        case Role::behind:
            if (a.lane_change) hints.emplace(fid::behind_vehicle_overtaking);
            break;
        case Role::opposite:
            if (a.turn) hints.emplace(fid::opposite_vehicle_turning);
            break;
        case Role::none:
            break;
    }
    return hints;
}

FeatureHints static_feature_hints(const ScenarioTree& tree) {
    FeatureHints hints;

    if (const ParamDecl* weather = tree.find_param("weather")) {
        std::vector<std::string> presets;
        collect_strings(weather->value, presets);
        bool all_rain = !presets.empty();
        bool all_clear = !presets.empty();
        for (const auto& p : presets) {
            all_rain &= p.find("Rain") != std::string::npos;
            all_clear &= p.rfind("Clear", 0) == 0;
        }
        if (all_rain) hints.emplace(features::label::rainy);
        else if (all_clear) hints.emplace(features::label::sunny);
    }

    static const std::regex town(R"(Town\d+(HD)?)");
    for (const char* key : {"carla_map", "map"}) {
        const ParamDecl* p = tree.find_param(key);
        if (!p) continue;
        std::vector<std::string> literals;
        collect_strings(p->value, literals);
        std::smatch m;
        for (const auto& lit : literals) {
            if (!std::regex_search(lit, m, town)) continue;
            if (contains(kHighwayTowns, m.str())) hints.emplace(features::label::highway);
            else if (contains(kUrbanTowns, m.str())) hints.emplace(features::label::urban);
        }
        if (hints.count(features::label::urban) || hints.count(features::label::highway)) break;
    }

    for (const auto& obj : tree.objects) hints.merge(object_hints(obj, tree));
    return hints;
}

FeatureHints static_feature_hints(const ScenicScript& script) {
    return static_feature_hints(script.tree());
}

}  // namespace vid2scenic::scenic
