#include "vid2scenic/gateway/mock_backend.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "vid2scenic/scenic/printer.hpp"
#include "vid2scenic/scenic/script.hpp"
#include "vid2scenic/util/digest.hpp"

using nlohmann::json;

namespace vid2scenic::gateway {

namespace fid = features::feature_id;
using scenic::ExprKind;
using scenic::ObjectDecl;
using scenic::ScenarioTree;

MockMode mock_mode_from_string(std::string_view s) {
    if (s == "faithful") return MockMode::faithful;
    if (s == "one_at_a_time") return MockMode::one_at_a_time;
    if (s == "stall") return MockMode::stall;
    throw std::invalid_argument(fmt::format("unknown mock mode '{}'", s));
}

std::string_view to_string(MockMode m) {
    switch (m) {
        case MockMode::faithful: return "faithful";
        case MockMode::one_at_a_time: return "one_at_a_time";
        case MockMode::stall: return "stall";
    }
    return "faithful";
}

features::FeatureVector hint_vector(const scenic::FeatureHints& hints) {
    const auto& t = features::default_taxonomy();
    features::FeatureVector::Values v{};
    for (std::size_t i = 0; i < t.size(); ++i) {
        const auto& d = t.at(i);
        if (d.kind == features::FeatureKind::environment) {
            v[i] = hints.count(d.first_label) ? 1.0 : hints.count(d.second_label) ? 0.0 : 0.5;
        } else {
            v[i] = hints.count(d.id) ? 1.0 : 0.0;
        }
    }
    return features::FeatureVector(v);
}

namespace {

ObjectDecl snippet_object(std::string_view decl) {
    auto r = scenic::parse(fmt::format("ego = new Car at (0, 0)\n{}\n", decl));
    if (!r.has_value()) throw std::logic_error(fmt::format("bad mock snippet: {}", decl));
    return r.value().tree().objects.at(1);
}

scenic::Expr snippet_expr(std::string_view text) {
    auto r = scenic::parse(fmt::format("ego = new Car at (0, 0)\nv = {}\n", text));
    if (!r.has_value()) throw std::logic_error(fmt::format("bad mock expression: {}", text));
    return r.value().tree().constants.at(0).value;
}

// Minimal object evidencing exactly one behavior feature.
std::pair<std::string, std::string> snippet_for(std::string_view feature) {
    if (feature == fid::random_object_on_road) return {"obstacle", "new Trash ahead of ego by 30"};
    if (feature == fid::leading_vehicle_cruising)
        return {"lead", "new Car ahead of ego by 20, with behavior FollowLaneBehavior(target_speed=8)"};
    if (feature == fid::leading_vehicle_stopped)
        return {"stopped", "new Car ahead of ego by 25, with behavior Idle()"};
    if (feature == fid::parallel_vehicle_cutting_in)
        return {"cutter", "new Car left of ego by 3.5, with behavior "
                          "LaneChangeBehavior(laneSectionToSwitch=ego.laneSection, target_speed=9)"};
    if (feature == fid::parallel_vehicle_cruising)
        return {"neighbour", "new Car right of ego by 3.5, with behavior FollowLaneBehavior(target_speed=8)"};
    if (feature == fid::parallel_vehicle_stopped)
        return {"parked", "new Car right of ego by 3.5, with behavior Idle()"};
    if (feature == fid::behind_vehicle_overtaking)
        return {"overtaker", "new Car behind ego by 15, with behavior "
                             "LaneChangeBehavior(laneSectionToSwitch=ego.laneSection, target_speed=14)"};
    if (feature == fid::opposite_vehicle_turning)
        return {"turner", "new Car offset by (-3.5, 40), facing 180 deg relative to ego.heading, "
                          "with behavior TurnBehavior(target_speed=6)"};
    throw std::logic_error(fmt::format("no snippet for feature {}", feature));
}

std::string fresh_binding(const ScenarioTree& t, const std::string& base) {
    auto taken = [&](const std::string& n) {
        return t.find_object(n) || t.find_behavior(n) ||
               std::any_of(t.constants.begin(), t.constants.end(), [&](const auto& c) { return c.name == n; });
    };
    if (!taken(base)) return base;
    for (int i = 2;; ++i) {
        std::string n = fmt::format("{}_{}", base, i);
        if (!taken(n)) return n;
    }
}

void set_param(ScenarioTree& t, const std::string& name, const scenic::Expr& value) {
    for (auto& p : t.params) {
        if (p.name == name) {
            p.value = value;
            return;
        }
    }
    t.params.push_back(scenic::ParamDecl{name, value, {}});
}

void set_environment(ScenarioTree& t, std::size_t index, bool first_label) {
    if (index == 0) {
        set_param(t, "weather", snippet_expr(first_label ? "'ClearNoon'" : "'HardRainNoon'"));
        return;
    }
    const std::string town = first_label ? "Town05" : "Town04";
    set_param(t, "carla_map", snippet_expr(fmt::format("'{}'", town)));
    if (t.find_param("map")) {
        set_param(t, "map", snippet_expr(fmt::format("localPath('../assets/maps/CARLA/{}.xodr')", town)));
    }
}

}  // namespace

ScenarioTree apply_feature_feedback(const ScenarioTree& tree, const std::vector<features::FeedbackItem>& items) {
    const auto& tax = features::default_taxonomy();
    ScenarioTree out = tree;
    std::set<std::string> missing, extra;
    for (const auto& it : items) {
        const auto& d = tax.at(it.feature_index);
        if (d.kind == features::FeatureKind::environment) {
            set_environment(out, it.feature_index, it.direction == features::GapDirection::missing_in_sim);
            continue;
        }
        (it.direction == features::GapDirection::missing_in_sim ? missing : extra).insert(std::string(d.id));
    }

    std::set<std::string> lost;
    std::vector<ObjectDecl> kept;
    for (const auto& obj : out.objects) {
        auto h = scenic::object_hints(obj, tree);
        bool unwanted = std::any_of(h.begin(), h.end(), [&](const std::string& f) { return extra.count(f) != 0; });
        if (unwanted) {
            for (const auto& f : h) {
                if (!extra.count(f)) lost.insert(f);
            }
        } else {
            kept.push_back(obj);
        }
    }
    out.objects = std::move(kept);

    std::set<std::string> have;
    for (const auto& obj : out.objects) have.merge(scenic::object_hints(obj, out));
    for (std::size_t i = 0; i < tax.size(); ++i) {
        std::string id(tax.at(i).id);
        if (tax.at(i).kind != features::FeatureKind::behavior) continue;
        if ((missing.count(id) || lost.count(id)) && !have.count(id)) {
            auto [base, decl] = snippet_for(id);
            ObjectDecl obj = snippet_object(decl);
            obj.binding = fresh_binding(out, base);
            out.objects.push_back(std::move(obj));
        }
    }
    return out;
}

namespace {

bool behavior_known(const ScenarioTree& t, const scenic::Catalog& c, const std::string& name) {
    return c.has_behavior(name) || t.find_behavior(name);
}

void repair_block(std::vector<scenic::Stmt>& body, const ScenarioTree& t, const scenic::Catalog& c) {
    for (auto& s : body) {
        if (s.kind == scenic::StmtKind::do_ && !s.exprs.empty() && s.exprs[0].kind == ExprKind::call) {
            const std::string& name = s.exprs[0].callee_name();
            if (!name.empty() && !behavior_known(t, c, name)) s.exprs[0] = snippet_expr("Idle()");
        }
        repair_block(s.body, t, c);
        for (auto& h : s.handlers) repair_block(h.body, t, c);
        repair_block(s.orelse, t, c);
    }
}

}  // namespace

ScenarioTree repair_for_catalog(const ScenarioTree& tree, const scenic::Catalog& catalog) {
    ScenarioTree out = tree;
    std::vector<scenic::ParamDecl> params;
    for (auto& p : out.params) {
        if (!catalog.param_names.count(p.name)) continue;
        if (p.name == "weather") {
            bool ok = p.value.kind == ExprKind::string && catalog.weather_values.count(p.value.text);
            if (!ok) p.value = snippet_expr("'ClearNoon'");
        }
        params.push_back(p);
    }
    out.params = std::move(params);

    for (auto& b : out.behaviors) repair_block(b.body, tree, catalog);

    for (auto& obj : out.objects) {
        if (!catalog.has_class(obj.object_class)) obj.object_class = "Pedestrian";
        std::vector<scenic::Specifier> specs;
        for (auto& s : obj.specifiers) {
            if (catalog.specifier_kinds.count(s.kind)) specs.push_back(s);
        }
        obj.specifiers = std::move(specs);
        if (obj.behavior && obj.behavior->kind == ExprKind::call) {
            std::string name = obj.behavior->callee_name();
            if (!behavior_known(tree, catalog, name)) {
                obj.behavior.reset();
            } else if (auto it = catalog.builtin_behaviors.find(name);
                       it != catalog.builtin_behaviors.end() && !tree.find_behavior(name) &&
                       obj.behavior->call_arity() > static_cast<std::size_t>(it->second)) {
                obj.behavior->args.resize(static_cast<std::size_t>(it->second) + 1);
            }
        }
    }
    return out;
}

MockBackend::MockBackend(const FewShotRegistry& registry, scenic::Catalog catalog, MockMode mode)
    : registry_(registry), catalog_(std::move(catalog)), mode_(mode) {}

namespace {

json video_of(const PromptPayload& p) {
    if (p.query_frames.images.empty() || p.query_frames.images[0].format != "token") {
        throw GatewayError(ErrorKind::refusal, "mock backend only understands token frames from .mockvid videos");
    }
    json tok = json::parse(p.query_frames.images[0].bytes, nullptr, false);
    if (tok.is_discarded() || !tok.contains("video")) {
        throw GatewayError(ErrorKind::malformed_response, "query frame is not a mock token");
    }
    return tok["video"];
}

void maybe_fail(const json& video, const char* key) {
    if (!video.contains(key)) return;
    std::string kind = video[key].get<std::string>();
    for (auto k : {ErrorKind::transport, ErrorKind::rate_limited, ErrorKind::deadline, ErrorKind::malformed_response,
                   ErrorKind::refusal}) {
        if (to_string(k) == kind) throw GatewayError(k, "scripted mock failure");
    }
    throw GatewayError(ErrorKind::refusal, "scripted mock failure");
}

std::string with_prose(const std::string& json_text) {
    return "Estimated probabilities:\n```json\n" + json_text + "\n```\n";
}

}  // namespace

Completion MockBackend::complete(const PromptPayload& payload) {
    check_payload(payload);
    json video = video_of(payload);
    {
        std::lock_guard lk(mu_);
        ++counts_[{payload.role, ""}];
        ++counts_[{payload.role, util::sha256_hex(video.dump())}];
    }
    Completion c;
    c.model = fmt::format("mock-{}", to_string(payload.role));
    c.temperature = 0.0;
    c.text = payload.role == Role::script ? script_answer(video, payload) : feature_answer(video);
    return c;
}

int MockBackend::calls(Role role) const {
    std::lock_guard lk(mu_);
    auto it = counts_.find({role, ""});
    return it == counts_.end() ? 0 : it->second;
}

int MockBackend::calls(Role role, const json& video) const {
    std::lock_guard lk(mu_);
    auto it = counts_.find({role, util::sha256_hex(video.dump())});
    return it == counts_.end() ? 0 : it->second;
}

std::string MockBackend::feature_answer(const json& video) const {
    maybe_fail(video, "fail_feature");
    const auto& tax = features::default_taxonomy();
    if (video.contains("features")) {
        const json& f = video["features"];
        if (f.is_object()) return with_prose(f.dump());
        json out = json::object();
        for (std::size_t i = 0; i < tax.size() && i < f.size(); ++i) out[std::string(tax.at(i).id)] = f[i];
        return with_prose(out.dump());
    }
    std::string text;
    if (video.contains("script")) {
        text = video["script"].get<std::string>();
    } else if (video.contains("fixture")) {
        const std::string* s = registry_.script(video["fixture"].get<std::string>());
        if (!s) throw GatewayError(ErrorKind::refusal, "unknown mock fixture");
        text = *s;
    } else {
        throw GatewayError(ErrorKind::refusal, "mock video carries no scene description");
    }
    auto parsed = scenic::parse(text);
    if (!parsed.has_value()) throw GatewayError(ErrorKind::refusal, "mock video script does not parse");
    return with_prose(feature_payload_text(hint_vector(scenic::static_feature_hints(parsed.value()))));
}

std::string MockBackend::script_answer(const json& video, const PromptPayload& p) const {
    maybe_fail(video, "fail_script");
    std::string initial;
    if (video.contains("initial_script")) {
        initial = video["initial_script"].get<std::string>();
    } else if (video.contains("fixture")) {
        const std::string* s = registry_.script(video["fixture"].get<std::string>());
        if (!s) throw GatewayError(ErrorKind::refusal, "unknown mock fixture");
        initial = *s;
    } else {
        throw GatewayError(ErrorKind::refusal, "mock video names no fixture");
    }
    if (!p.feedback) return initial;
    if (mode_ == MockMode::stall) return *p.prior_script;

    auto prior = scenic::parse(*p.prior_script);
    if (!prior.has_value()) {
        // nothing to edit: fall back to the canned answer from the fixture
        if (video.contains("fixture")) return *registry_.script(video["fixture"].get<std::string>());
        return *p.prior_script;
    }
    auto items = features::parse_feedback(*p.feedback);
    if (items.empty()) return scenic::render(repair_for_catalog(prior.value().tree(), catalog_));
    if (mode_ == MockMode::one_at_a_time) items.resize(1);
    return scenic::render(apply_feature_feedback(prior.value().tree(), items));
}

}  // namespace vid2scenic::gateway
