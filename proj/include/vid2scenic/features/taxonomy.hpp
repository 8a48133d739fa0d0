#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace vid2scenic::features {

inline constexpr std::size_t kFeatureCount = 10;
inline constexpr std::string_view kTaxonomyVersion = "driving-features-v1";

enum class FeatureKind { environment, behavior };

/// Snake-case identifier, stable across releases (used as JSON keys).
using FeatureId = std::string_view;

struct FeatureDescriptor {
    FeatureId id;
    std::string_view display_name;
    double default_threshold;
    FeatureKind kind;
    /// Label a probability near 1 stands for. For two-sided environment
    /// features ("Sunny / Rainy") this is the first-named label and
    /// `second_label` the one near 0; behaviors use their id and no second.
    std::string_view first_label;
    std::string_view second_label;
};

struct FeatureTaxonomy {
    std::array<FeatureDescriptor, kFeatureCount> features;

    std::optional<std::size_t> index_of(std::string_view id) const;
    const FeatureDescriptor& at(std::size_t i) const { return features.at(i); }
    constexpr std::size_t size() const { return kFeatureCount; }
};

/// The ten predefined driving feature categories in their fixed order:
/// two environment features (threshold 0.3) then eight behaviors (0.2).
const FeatureTaxonomy& default_taxonomy();

namespace feature_id {
inline constexpr FeatureId sunny_rainy = "sunny_rainy";
inline constexpr FeatureId urban_highway = "urban_highway";
inline constexpr FeatureId random_object_on_road = "random_object_on_road";
inline constexpr FeatureId leading_vehicle_cruising = "leading_vehicle_cruising";
inline constexpr FeatureId leading_vehicle_stopped = "leading_vehicle_stopped";
inline constexpr FeatureId parallel_vehicle_cutting_in = "parallel_vehicle_cutting_in";
inline constexpr FeatureId parallel_vehicle_cruising = "parallel_vehicle_cruising";
inline constexpr FeatureId parallel_vehicle_stopped = "parallel_vehicle_stopped";
inline constexpr FeatureId behind_vehicle_overtaking = "behind_vehicle_overtaking";
inline constexpr FeatureId opposite_vehicle_turning = "opposite_vehicle_turning";
}  // namespace feature_id

namespace label {
inline constexpr std::string_view sunny = "sunny";
inline constexpr std::string_view rainy = "rainy";
inline constexpr std::string_view urban = "urban";
inline constexpr std::string_view highway = "highway";
}  // namespace label

}  // namespace vid2scenic::features
