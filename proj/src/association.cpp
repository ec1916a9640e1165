#include "rofusion/association.hpp"

#include <cmath>

#include "rofusion/errors.hpp"

namespace rofusion::assoc {

std::string to_string(PointClass c) {
    switch (c) {
        case PointClass::Full: return "full";
        case PointClass::RangeOnly: return "range_only";
        case PointClass::AzimuthOnly: return "azimuth_only";
        case PointClass::Background: return "background";
    }
    return "?";
}

AssociationResult associate(const Frame& frame, const std::vector<BBox2D>& boxes) {
    AssociationResult res;
    for (const BBox2D& box : boxes) {
        if (!box.well_formed()) {
            throw ConfigError("associate: malformed box (min > max)");
        }
        CandidateSet set;
        set.object_id = box.object_id.value_or(-1);
        set.box = box;
        for (int i = 0; i < static_cast<int>(frame.points.size()); ++i) {
            const auto& p = frame.points[i];
            if (geom::in_bbox(p.u, p.v, box)) set.point_indices.push_back(i);
        }
        if (set.point_indices.empty()) {
            ++res.dropped_empty;
            continue;
        }
        res.sets.push_back(std::move(set));
    }
    return res;
}

PointClass classify_point(const geom::RadarPoint& point, double center_r, double center_a,
                          const codec::CodecConfig& cfg) {
    const bool r_in = std::abs(point.r - center_r) <= cfg.span_r();
    const bool a_in = std::abs(point.a - center_a) <= cfg.span_a();
    if (r_in && a_in) return PointClass::Full;
    if (r_in) return PointClass::RangeOnly;
    if (a_in) return PointClass::AzimuthOnly;
    return PointClass::Background;
}

TrainingMask training_mask(PointClass c) {
    switch (c) {
        case PointClass::Full: return {true, {true, true}};
        case PointClass::RangeOnly: return {true, {true, false}};
        case PointClass::AzimuthOnly: return {true, {false, true}};
        case PointClass::Background: return {false, {false, false}};
    }
    return {false, {false, false}};
}

}  // namespace rofusion::assoc
