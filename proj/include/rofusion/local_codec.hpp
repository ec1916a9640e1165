#pragma once

#include <array>
#include <string>
#include <vector>

#include "rofusion/types.hpp"

namespace rofusion {
namespace assoc {
struct CandidateSet;
}

namespace codec {

enum class Mode { Local, Global };

std::string to_string(Mode m);
Mode mode_from_string(const std::string& s);

// Object-centric lattice: odd bin counts so a center bin exists. The
// classification head width is n_r_bins + n_az_bins (16 for defaults).
struct CodecConfig {
    int n_az_bins = 5;
    int n_r_bins = 11;
    double az_bin_width = 0.4;  // degrees
    double r_bin_width = 0.5;   // meters
    Mode mode = Mode::Local;

    double span_r() const { return n_r_bins * r_bin_width / 2.0; }
    double span_a() const { return n_az_bins * az_bin_width / 2.0; }
    int cls_width() const { return n_az_bins + n_r_bins; }
    void validate() const;
};

// Per-point supervision. axis order is [range, azimuth] everywhere.
struct LocalTarget {
    int az_bin = 0;
    int r_bin = 0;
    double res_r = 0.0;  // meters
    double res_a = 0.0;  // degrees
    std::array<bool, 2> axis_mask{true, true};
};

// Offset convention: delta = center - point, so decode adds. Bin index is
// round(delta/width) with half-way ties away from zero, clamped to the
// lattice; the residual absorbs whatever the clamp cut off.
LocalTarget encode(const geom::RadarPoint& point, double center_r, double center_a,
                   const CodecConfig& cfg);

// Exact inverse of encode for unclamped axes.
std::array<double, 2> decode(const geom::RadarPoint& point, int az_bin, int r_bin, double res_r,
                             double res_a, const CodecConfig& cfg);

// Inference-time pseudo-center when no ground truth exists: the minimum-range
// candidate is taken as the sensor-facing endpoint, the center sits half an
// object length behind it, and the azimuth is the candidate median.
struct HeuristicOrigin {
    double center_r = 0.0;
    double center_a = 0.0;
};

HeuristicOrigin heuristic_origin(const assoc::CandidateSet& cands, const Frame& frame,
                                 double obj_length_prior);

// Absolute RA grid for the no-local-coordinates ablation.
struct GlobalGridConfig {
    double r_min = 0.0;
    double r_max = 103.0;
    double r_step = 0.8;
    double a_min = -60.0;
    double a_max = 60.0;
    double a_step = 0.8;

    int n_r_bins() const;
    int n_a_bins() const;
    int cls_width() const { return n_r_bins() + n_a_bins(); }
    void validate() const;
};

struct GlobalTarget {
    int az_bin = 0;
    int r_bin = 0;
    double res_r = 0.0;
    double res_a = 0.0;
};

// Nearest grid node with the same round/tie rules as encode; centers whose
// nearest node falls outside the grid raise IndexError.
GlobalTarget encode_global(double center_r, double center_a, const GlobalGridConfig& grid);

std::array<double, 2> decode_global(int az_bin, int r_bin, double res_r, double res_a,
                                    const GlobalGridConfig& grid);

}  // namespace codec
}  // namespace rofusion
