#include "vid2scenic/features/taxonomy.hpp"

namespace vid2scenic::features {

std::optional<std::size_t> FeatureTaxonomy::index_of(std::string_view id) const {
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (features[i].id == id) return i;
    }
    return std::nullopt;
}

const FeatureTaxonomy& default_taxonomy() {
    using K = FeatureKind;
    namespace f = feature_id;
    static const FeatureTaxonomy taxonomy{{{
        {f::sunny_rainy, "Sunny / Rainy", 0.3, K::environment, label::sunny, label::rainy},
        {f::urban_highway, "Urban / Highway", 0.3, K::environment, label::urban, label::highway},
        {f::random_object_on_road, "Random Object on Road", 0.2, K::behavior, f::random_object_on_road, ""},
        {f::leading_vehicle_cruising, "Leading Vehicle Cruising", 0.2, K::behavior, f::leading_vehicle_cruising, ""},
        {f::leading_vehicle_stopped, "Leading Vehicle Stopped", 0.2, K::behavior, f::leading_vehicle_stopped, ""},
        {f::parallel_vehicle_cutting_in, "Parallel Vehicle Cutting in", 0.2, K::behavior, f::parallel_vehicle_cutting_in, ""},
        {f::parallel_vehicle_cruising, "Parallel Vehicle Cruising", 0.2, K::behavior, f::parallel_vehicle_cruising, ""},
        {f::parallel_vehicle_stopped, "Parallel Vehicle Stopped", 0.2, K::behavior, f::parallel_vehicle_stopped, ""},
        {f::behind_vehicle_overtaking, "Behind Vehicle Overtaking", 0.2, K::behavior, f::behind_vehicle_overtaking, ""},
        {f::opposite_vehicle_turning, "Opposite Vehicle Turning", 0.2, K::behavior, f::opposite_vehicle_turning, ""},
    }}};
    return taxonomy;
}

}  // namespace vid2scenic::features
