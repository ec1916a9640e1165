#pragma once

#include <cstdint>
#include <optional>

#include "rofusion/rng.hpp"
#include "rofusion/types.hpp"

namespace rofusion::sim {

struct JitterConfig {
    double sigma_px = 3.0;
    double p_miss = 0.08;
};

// Everything the generator needs. All draws flow through CounterRng streams
// derived from the frame seed; the stream ids are fixed below, so identical
// (cfg, seed) pairs produce bit-identical frames.
struct SimConfig {
    int n_objects_min = 1;
    int n_objects_max = 3;
    double r_min = 5.0;   // object center range bounds, meters
    double r_max = 95.0;
    double a_min = -45.0;  // object center azimuth bounds, degrees
    double a_max = 45.0;
    double obj_length = 4.0;      // meters along range
    double obj_phys_width = 1.8;  // meters; angular width follows from range
    double obj_height = 1.5;      // meters, box corner extent
    double z_min = -1.0;          // object plane height bounds
    double z_max = 0.0;
    double vel_min = -30.0;
    double vel_max = 30.0;
    int min_pts = 3;
    int max_pts = 12;
    double sigma_r = 0.1;  // meters
    double sigma_a = 0.2;  // degrees
    double sigma_d = 0.5;  // m/s
    int n_clutter = 20;
    double hard_factor = 3.0;  // sigma and clutter multiplier on hard frames
    double p_hard = 0.5;
    double box_pad = 4.0;  // pixels around projected corners
    double min_sep_r = 7.0;  // object pairs closer than both are re-drawn
    double min_sep_a = 4.0;
    JitterConfig jitter;
    int img_w = 960;
    int img_h = 540;
    int c_radar = 32;
    int c_image = 32;
    geom::CameraIntrinsics intrinsics;  // defaults suit the +-45 deg field of view
    geom::CameraExtrinsics extrinsics = default_extrinsics();

    static geom::CameraExtrinsics default_extrinsics();
    void validate() const;
};

// RNG stream ids (derived from the frame seed root key).
enum : std::uint64_t {
    kStreamDifficulty = 1,
    kStreamObjects = 2,
    kStreamScatter = 3,  // sub-derived per object index, then per attempt
    kStreamClutter = 4,
    kStreamJitter = 5,   // sub-derived per box index
    kStreamFeatures = 6,
};

// Deterministic synthetic frame: objects, scatterers, clutter, ground-truth
// and jittered boxes, feature fields. Throws ConfigError when an object
// cannot be placed inside the image after 100 attempts.
Frame generate_frame(const SimConfig& cfg, std::uint64_t seed);

// Edge-wise Gaussian jitter clipped to the image; returns nullopt with
// probability p_miss (a missed detection).
std::optional<BBox2D> jitter_bbox(const BBox2D& box, const JitterConfig& noise, int img_w,
                                  int img_h, CounterRng& rng);

// Fills frame.radar_feat / frame.image_feat from (frame.seed, cfg) alone, so
// frames loaded from disk regenerate identical fields. Outputs bounded in
// [-3, 3] and continuous in the query.
void synth_features(Frame& frame, const SimConfig& cfg);

}  // namespace rofusion::sim
