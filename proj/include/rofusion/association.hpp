#pragma once

#include <array>
#include <string>
#include <vector>

#include "rofusion/local_codec.hpp"
#include "rofusion/types.hpp"

namespace rofusion::assoc {

enum class PointClass { Full, RangeOnly, AzimuthOnly, Background };

std::string to_string(PointClass c);

// All radar points whose image projection falls inside one 2D box. A point
// inside two overlapping boxes appears in both sets.
struct CandidateSet {
    int object_id = -1;  // from the box when present, else -1
    BBox2D box;
    std::vector<int> point_indices;            // into Frame.points
    std::vector<PointClass> point_class;       // filled by classification passes
};

struct AssociationResult {
    std::vector<CandidateSet> sets;
    int dropped_empty = 0;  // boxes that contained no points
};

AssociationResult associate(const Frame& frame, const std::vector<BBox2D>& boxes);

// Axis is "in range" iff |delta| <= half-span of that axis's bin lattice.
PointClass classify_point(const geom::RadarPoint& point, double center_r, double center_a,
                          const codec::CodecConfig& cfg);

inline PointClass classify_point(const geom::RadarPoint& point, const ObjectGT& obj,
                                 const codec::CodecConfig& cfg) {
    return classify_point(point, obj.center_r, obj.center_a, cfg);
}

struct TrainingMask {
    bool use_point = false;
    std::array<bool, 2> axis_mask{false, false};  // [range, azimuth]
};

// Full points supervise both axes; non-trivial points only their in-lattice
// axis; background points never reach the network.
TrainingMask training_mask(PointClass c);

}  // namespace rofusion::assoc
