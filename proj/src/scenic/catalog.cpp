#include "vid2scenic/scenic/catalog.hpp"

#include <fstream>

#include <fmt/format.h>

namespace vid2scenic::scenic {

namespace {

std::set<std::string> string_set(const nlohmann::json& j, const char* key) {
    if (!j.contains(key)) throw CatalogError(fmt::format("catalog: missing key '{}'", key));
    const auto& arr = j[key];
    if (!arr.is_array()) throw CatalogError(fmt::format("catalog: '{}' must be an array", key));
    std::set<std::string> out;
    for (const auto& v : arr) {
        if (!v.is_string()) {
            throw CatalogError(fmt::format("catalog: '{}' must contain only strings", key));
        }
        out.insert(v.get<std::string>());
    }
    if (out.empty()) throw CatalogError(fmt::format("catalog: '{}' must not be empty", key));
    return out;
}

}  // namespace

Catalog catalog_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw CatalogError("catalog: expected a JSON object");
    Catalog c;
    c.object_classes = string_set(j, "object_classes");
    c.weather_values = string_set(j, "weather_values");
    c.param_names = string_set(j, "param_names");
    c.specifier_kinds = string_set(j, "specifier_kinds");
    if (!j.contains("builtin_behaviors") || !j["builtin_behaviors"].is_object()) {
        throw CatalogError("catalog: 'builtin_behaviors' must be an object of name -> arity");
    }
    for (const auto& [name, arity] : j["builtin_behaviors"].items()) {
        if (!arity.is_number_integer() || arity.get<int>() < 0) {
            throw CatalogError(fmt::format("catalog: arity of '{}' must be a non-negative integer", name));
        }
        c.builtin_behaviors.emplace(name, arity.get<int>());
    }
    if (c.builtin_behaviors.empty()) throw CatalogError("catalog: 'builtin_behaviors' must not be empty");
    return c;
}

Catalog load_catalog(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw CatalogError(fmt::format("catalog: cannot open {}", path.string()));
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw CatalogError(fmt::format("catalog: {}: {}", path.string(), e.what()));
    }
    return catalog_from_json(j);
}

nlohmann::json to_json(const Catalog& c) {
    return nlohmann::json{{"object_classes", c.object_classes},
                          {"builtin_behaviors", c.builtin_behaviors},
                          {"weather_values", c.weather_values},
                          {"param_names", c.param_names},
                          {"specifier_kinds", c.specifier_kinds}};
}

}  // namespace vid2scenic::scenic
