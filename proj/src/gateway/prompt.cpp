#include "vid2scenic/gateway/prompt.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "vid2scenic/util/fs.hpp"

namespace fs = std::filesystem;

namespace vid2scenic::gateway {

std::string_view to_string(Role r) { return r == Role::script ? "script" : "feature"; }

void check_payload(const PromptPayload& p) {
    if (p.feedback && !p.prior_script) {
        throw std::invalid_argument("feedback requires the prior script it refers to");
    }
    for (const auto& ex : p.examples) {
        bool is_script = std::holds_alternative<std::string>(ex.payload);
        if (is_script != (p.role == Role::script)) {
            throw std::invalid_argument(
                fmt::format("example '{}' does not carry a {} payload", ex.label, to_string(p.role)));
        }
    }
}

namespace {

std::vector<std::string> sorted_subdirs(const fs::path& dir) {
    std::vector<std::string> names;
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) return names;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_directory()) names.push_back(e.path().filename().string());
    }
    std::sort(names.begin(), names.end());
    return names;
}

frames::FramePack load_frames(const fs::path& dir) {
    try {
        return frames::load_frame_pack(dir);
    } catch (const std::exception& e) {
        throw RegistryError(fmt::format("few-shot frames {}: {}", dir.string(), e.what()));
    }
}

}  // namespace

FewShotRegistry FewShotRegistry::load(const fs::path& fixtures_dir) {
    if (!fs::is_directory(fixtures_dir)) {
        throw RegistryError(fmt::format("fixtures directory {} does not exist", fixtures_dir.string()));
    }
    FewShotRegistry reg;
    for (const auto& name : sorted_subdirs(fixtures_dir / "script")) {
        fs::path d = fixtures_dir / "script" / name;
        std::string text;
        try {
            text = util::read_file(d / "script.scenic");
        } catch (const util::IoError& e) {
            throw RegistryError(e.what());
        }
        reg.add(Role::script, FewShotExample{name, load_frames(d / "frames"), std::move(text)});
    }
    for (const auto& name : sorted_subdirs(fixtures_dir / "feature")) {
        fs::path d = fixtures_dir / "feature" / name;
        try {
            auto v = features::feature_vector_from_json(nlohmann::json::parse(util::read_file(d / "features.json")));
            reg.add(Role::feature, FewShotExample{name, load_frames(d / "frames"), v});
        } catch (const RegistryError&) {
            throw;
        } catch (const std::exception& e) {
            throw RegistryError(fmt::format("{}: {}", (d / "features.json").string(), e.what()));
        }
    }
    return reg;
}

void FewShotRegistry::add(Role role, FewShotExample example) {
    bool is_script = std::holds_alternative<std::string>(example.payload);
    if (is_script != (role == Role::script)) {
        throw RegistryError(fmt::format("example '{}' registered under the wrong role", example.label));
    }
    (role == Role::script ? script_examples_ : feature_examples_).push_back(std::move(example));
}

const std::vector<FewShotExample>& FewShotRegistry::examples(Role role) const {
    return role == Role::script ? script_examples_ : feature_examples_;
}

const std::string* FewShotRegistry::script(std::string_view label) const {
    for (const auto& ex : script_examples_) {
        if (ex.label == label) return &std::get<std::string>(ex.payload);
    }
    return nullptr;
}

std::string script_system_text() {
    return "You write SCENIC scenario scripts for the CARLA simulator from dashcam crash videos.\n"
           "Each video is given as an ordered sequence of frames sampled uniformly over its length.\n"
           "Reproduce the road type, weather and the behavior of every relevant traffic participant.\n"
           "Use only classes, behaviors, weather presets and specifiers that appear in the examples.\n"
           "Bind the camera vehicle to `ego`. Answer with the script only.\n"
           "When a current script and feedback are given, revise that script to address the feedback "
           "and change nothing else.";
}

std::string feature_system_text() {
    const auto& t = features::default_taxonomy();
    std::string s =
        "You classify dashcam driving videos given as ordered frame sequences. For each category below, "
        "estimate the probability (0 to 1) that it is present in the video.\n";
    for (std::size_t i = 0; i < t.size(); ++i) {
        const auto& d = t.at(i);
        if (d.kind == features::FeatureKind::environment) {
            s += fmt::format("- {}: {} (1 = {}, 0 = {})\n", d.id, d.display_name, d.first_label, d.second_label);
        } else {
            s += fmt::format("- {}: {}\n", d.id, d.display_name);
        }
    }
    s += "Answer with one JSON object mapping every id above to its probability.";
    return s;
}

std::string feature_payload_text(const features::FeatureVector& v) {
    nlohmann::json j = nlohmann::json::object();
    const auto& t = features::default_taxonomy();
    for (std::size_t i = 0; i < t.size(); ++i) j[std::string(t.at(i).id)] = v[i];
    return j.dump();
}

}  // namespace vid2scenic::gateway
