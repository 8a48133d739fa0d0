#pragma once

#include <array>
#include <map>
#include <span>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "vid2scenic/features/taxonomy.hpp"

namespace vid2scenic::features {

/// Raised when inputs break an operation's stated preconditions (wrong
/// dimension, out-of-range probability, mismatched taxonomy).
class ContractViolation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// One probability per taxonomy entry, in taxonomy order.
class FeatureVector {
public:
    using Values = std::array<double, kFeatureCount>;

    FeatureVector() { values_.fill(0.0); }
    /// Throws ContractViolation unless every value is within [0, 1].
    explicit FeatureVector(const Values& values,
                           std::string taxonomy_version = std::string(kTaxonomyVersion));
    /// Throws ContractViolation on a length other than the taxonomy size.
    static FeatureVector from_span(std::span<const double> values,
                                   std::string taxonomy_version = std::string(kTaxonomyVersion));

    double operator[](std::size_t i) const { return values_[i]; }
    const Values& values() const { return values_; }
    const std::string& taxonomy_version() const { return version_; }

    friend bool operator==(const FeatureVector&, const FeatureVector&) = default;

private:
    Values values_{};
    std::string version_ = std::string(kTaxonomyVersion);
};

/// `{"taxonomy_version": string, "values": [10 numbers]}`
nlohmann::json to_json(const FeatureVector& v);
FeatureVector feature_vector_from_json(const nlohmann::json& j);

/// Per-feature threshold overrides keyed by feature id.
class ThresholdConfig {
public:
    ThresholdConfig() = default;
    /// Throws ContractViolation for unknown ids or values outside (0, 1].
    explicit ThresholdConfig(std::map<std::string, double> overrides);

    double threshold(std::size_t feature_index) const;
    const std::map<std::string, double>& overrides() const { return overrides_; }

private:
    std::map<std::string, double> overrides_;
};

}  // namespace vid2scenic::features
