#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rofusion/geometry.hpp"

namespace rofusion {

// Image-space box, inclusive edges. object_id ties oracle/jittered boxes back
// to the simulated object; it is bookkeeping and is never used for metric
// matching.
struct BBox2D {
    double u_min = 0.0;
    double v_min = 0.0;
    double u_max = 0.0;
    double v_max = 0.0;
    std::optional<int> object_id;
    std::optional<double> score;

    bool well_formed() const { return u_min <= u_max && v_min <= v_max; }
};

struct ObjectGT {
    int id = 0;
    double center_r = 0.0;   // meters
    double center_a = 0.0;   // degrees
    double length = 4.0;     // meters, along range
    double width_deg = 1.0;  // angular extent
    double velocity = 0.0;   // m/s, Doppler of scatterers
    double z_height = 0.0;   // meters
};

// Deterministic continuous field standing in for a dense CNN feature map.
// Queried at (r, a) for the radar field and (u, v) for the image field.
struct FeatureField {
    int channels = 0;
    std::function<void(double, double, double*)> eval_into;

    std::vector<double> eval(double c0, double c1) const {
        std::vector<double> out(channels, 0.0);
        if (eval_into) eval_into(c0, c1, out.data());
        return out;
    }
};

enum class Difficulty { Easy, Hard };

std::string to_string(Difficulty d);
Difficulty difficulty_from_string(const std::string& s);

// One synchronized observation.
struct Frame {
    std::int64_t frame_id = 0;
    std::uint64_t seed = 0;  // regenerates the feature fields
    Difficulty difficulty = Difficulty::Easy;
    geom::CameraIntrinsics intrinsics;
    geom::CameraExtrinsics extrinsics;
    std::vector<ObjectGT> objects;
    std::vector<geom::RadarPoint> points;
    std::vector<BBox2D> gt_boxes;        // one per object, same order
    std::vector<BBox2D> detector_boxes;  // jittered; misses omitted
    FeatureField radar_feat;             // not serialized
    FeatureField image_feat;             // not serialized
};

// One predicted object.
struct Detection {
    double center_r = 0.0;
    double center_a = 0.0;
    double confidence = 0.0;
    std::optional<int> source_object_id;  // candidate-set identity, diagnostics only
};

}  // namespace rofusion
