#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace vid2scenic::scenic {

/// What the target simulator understands. Loaded from a data file so it can
/// be extended without rebuilding. Lookups are case-sensitive.
struct Catalog {
    std::set<std::string> object_classes;
    std::map<std::string, int> builtin_behaviors;  // name -> max argument count
    std::set<std::string> weather_values;
    std::set<std::string> param_names;
    std::set<std::string> specifier_kinds;

    bool has_class(const std::string& c) const { return object_classes.count(c) != 0; }
    bool has_behavior(const std::string& b) const { return builtin_behaviors.count(b) != 0; }
};

class CatalogError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Throws CatalogError on missing keys, wrong types, or empty sets.
Catalog catalog_from_json(const nlohmann::json& j);
Catalog load_catalog(const std::filesystem::path& path);
nlohmann::json to_json(const Catalog& c);

}  // namespace vid2scenic::scenic
