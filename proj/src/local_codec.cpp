#include "rofusion/local_codec.hpp"

#include <algorithm>
#include <cmath>

#include "rofusion/association.hpp"
#include "rofusion/errors.hpp"

namespace rofusion::codec {

std::string to_string(Mode m) { return m == Mode::Local ? "local" : "global"; }

Mode mode_from_string(const std::string& s) {
    if (s == "local") return Mode::Local;
    if (s == "global") return Mode::Global;
    throw ConfigError("codec.mode: unknown value '" + s + "'");
}

void CodecConfig::validate() const {
    if (n_az_bins < 1 || n_az_bins % 2 == 0) {
        throw ConfigError("codec.n_az_bins: must be odd and >= 1, got " +
                          std::to_string(n_az_bins));
    }
    if (n_r_bins < 1 || n_r_bins % 2 == 0) {
        throw ConfigError("codec.n_r_bins: must be odd and >= 1, got " + std::to_string(n_r_bins));
    }
    if (!(az_bin_width > 0.0)) throw ConfigError("codec.az_bin_width: must be > 0");
    if (!(r_bin_width > 0.0)) throw ConfigError("codec.r_bin_width: must be > 0");
}

namespace {

// round(delta/width) with half-way ties away from zero (std::round's rule),
// clamped to +-half. Returns the signed bin offset.
int signed_bin(double delta, double width, int n_bins, double* residual) {
    const int half = (n_bins - 1) / 2;
    double k = std::round(delta / width);
    k = std::clamp(k, static_cast<double>(-half), static_cast<double>(half));
    *residual = delta - k * width;
    return static_cast<int>(k);
}

}  // namespace

LocalTarget encode(const geom::RadarPoint& point, double center_r, double center_a,
                   const CodecConfig& cfg) {
    if (cfg.mode != Mode::Local) {
        throw ConfigError("encode: codec mode is not 'local'");
    }
    LocalTarget t;
    const int half_r = (cfg.n_r_bins - 1) / 2;
    const int half_a = (cfg.n_az_bins - 1) / 2;
    t.r_bin = half_r + signed_bin(center_r - point.r, cfg.r_bin_width, cfg.n_r_bins, &t.res_r);
    t.az_bin = half_a + signed_bin(center_a - point.a, cfg.az_bin_width, cfg.n_az_bins, &t.res_a);
    return t;
}

std::array<double, 2> decode(const geom::RadarPoint& point, int az_bin, int r_bin, double res_r,
                             double res_a, const CodecConfig& cfg) {
    if (r_bin < 0 || r_bin >= cfg.n_r_bins) {
        throw IndexError("decode: r_bin " + std::to_string(r_bin) + " out of [0," +
                         std::to_string(cfg.n_r_bins) + ")");
    }
    if (az_bin < 0 || az_bin >= cfg.n_az_bins) {
        throw IndexError("decode: az_bin " + std::to_string(az_bin) + " out of [0," +
                         std::to_string(cfg.n_az_bins) + ")");
    }
    const double r = point.r + (r_bin - (cfg.n_r_bins - 1) / 2) * cfg.r_bin_width + res_r;
    const double a = point.a + (az_bin - (cfg.n_az_bins - 1) / 2) * cfg.az_bin_width + res_a;
    return {r, a};
}

HeuristicOrigin heuristic_origin(const assoc::CandidateSet& cands, const Frame& frame,
                                 double obj_length_prior) {
    if (cands.point_indices.empty()) {
        throw IndexError("heuristic_origin: empty candidate set");
    }
    double facing_r = frame.points[cands.point_indices[0]].r;
    std::vector<double> azimuths;
    azimuths.reserve(cands.point_indices.size());
    for (int idx : cands.point_indices) {
        facing_r = std::min(facing_r, frame.points[idx].r);
        azimuths.push_back(frame.points[idx].a);
    }
    std::sort(azimuths.begin(), azimuths.end());
    const std::size_t n = azimuths.size();
    const double median =
        n % 2 == 1 ? azimuths[n / 2] : 0.5 * (azimuths[n / 2 - 1] + azimuths[n / 2]);
    return {facing_r + obj_length_prior / 2.0, median};
}

int GlobalGridConfig::n_r_bins() const {
    return static_cast<int>(std::floor((r_max - r_min) / r_step)) + 1;
}

int GlobalGridConfig::n_a_bins() const {
    return static_cast<int>(std::floor((a_max - a_min) / a_step)) + 1;
}

void GlobalGridConfig::validate() const {
    if (!(r_step > 0.0)) throw ConfigError("grid.r_step: must be > 0");
    if (!(a_step > 0.0)) throw ConfigError("grid.a_step: must be > 0");
    if (!(r_max > r_min)) throw ConfigError("grid.r_max: must exceed grid.r_min");
    if (!(a_max > a_min)) throw ConfigError("grid.a_max: must exceed grid.a_min");
}

namespace {

int global_bin(double c, double lo, double step, int n, double* residual, const char* axis) {
    const double k = std::round((c - lo) / step);
    if (k < 0.0 || k >= static_cast<double>(n)) {
        throw IndexError(std::string("encode_global: ") + axis + " center " + std::to_string(c) +
                         " outside grid extent");
    }
    *residual = c - (lo + k * step);
    return static_cast<int>(k);
}

}  // namespace

GlobalTarget encode_global(double center_r, double center_a, const GlobalGridConfig& grid) {
    GlobalTarget t;
    t.r_bin = global_bin(center_r, grid.r_min, grid.r_step, grid.n_r_bins(), &t.res_r, "range");
    t.az_bin = global_bin(center_a, grid.a_min, grid.a_step, grid.n_a_bins(), &t.res_a, "azimuth");
    return t;
}

std::array<double, 2> decode_global(int az_bin, int r_bin, double res_r, double res_a,
                                    const GlobalGridConfig& grid) {
    if (r_bin < 0 || r_bin >= grid.n_r_bins()) {
        throw IndexError("decode_global: r_bin out of range");
    }
    if (az_bin < 0 || az_bin >= grid.n_a_bins()) {
        throw IndexError("decode_global: az_bin out of range");
    }
    return {grid.r_min + r_bin * grid.r_step + res_r, grid.a_min + az_bin * grid.a_step + res_a};
}

}  // namespace rofusion::codec
