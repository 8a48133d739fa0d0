#include "vid2scenic/features/feature_vector.hpp"

#include <cmath>

#include <fmt/format.h>

namespace vid2scenic::features {

FeatureVector::FeatureVector(const Values& values, std::string taxonomy_version)
    : values_(values), version_(std::move(taxonomy_version)) {
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!(values_[i] >= 0.0 && values_[i] <= 1.0)) {
            throw ContractViolation(fmt::format("feature '{}' has probability {} outside [0, 1]",
                                                default_taxonomy().at(i).id, values_[i]));
        }
    }
}

FeatureVector FeatureVector::from_span(std::span<const double> values, std::string taxonomy_version) {
    if (values.size() != kFeatureCount) {
        throw ContractViolation(fmt::format("feature vector has {} components, expected {}",
                                            values.size(), kFeatureCount));
    }
    Values v{};
    std::copy(values.begin(), values.end(), v.begin());
    return FeatureVector(v, std::move(taxonomy_version));
}

nlohmann::json to_json(const FeatureVector& v) {
    return nlohmann::json{{"taxonomy_version", v.taxonomy_version()}, {"values", v.values()}};
}

FeatureVector feature_vector_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("values") || !j["values"].is_array()) {
        throw ContractViolation("feature vector JSON needs a \"values\" array");
    }
    std::vector<double> values;
    for (const auto& x : j["values"]) {
        if (!x.is_number()) throw ContractViolation("feature vector values must be numbers");
        values.push_back(x.get<double>());
    }
    std::string version = j.value("taxonomy_version", std::string(kTaxonomyVersion));
    return FeatureVector::from_span(values, std::move(version));
}

ThresholdConfig::ThresholdConfig(std::map<std::string, double> overrides)
    : overrides_(std::move(overrides)) {
    for (const auto& [id, tau] : overrides_) {
        if (!default_taxonomy().index_of(id)) {
            throw ContractViolation(fmt::format("threshold override for unknown feature '{}'", id));
        }
        if (!(tau > 0.0 && tau <= 1.0)) {
            throw ContractViolation(fmt::format("threshold for '{}' must be in (0, 1], got {}", id, tau));
        }
    }
}

double ThresholdConfig::threshold(std::size_t feature_index) const {
    const auto& d = default_taxonomy().at(feature_index);
    auto it = overrides_.find(std::string(d.id));
    return it == overrides_.end() ? d.default_threshold : it->second;
}

}  // namespace vid2scenic::features
