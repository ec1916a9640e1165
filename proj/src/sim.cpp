#include "rofusion/sim.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "rofusion/errors.hpp"

namespace rofusion::sim {

geom::CameraExtrinsics SimConfig::default_extrinsics() {
    // Ego (x fwd, y left, z up) to camera (x right, y down, z fwd).
    geom::CameraExtrinsics e;
    e.R = {0, -1, 0, 0, 0, -1, 1, 0, 0};
    e.t = {0, 0, 0};
    return e;
}

void SimConfig::validate() const {
    if (n_objects_min < 1 || n_objects_max > 6 || n_objects_min > n_objects_max) {
        throw ConfigError("sim.n_objects: must satisfy 1 <= min <= max <= 6");
    }
    if (r_min < 5.0 || r_max > 100.0 || r_min >= r_max) {
        throw ConfigError("sim.r_min/r_max: must satisfy 5 <= r_min < r_max <= 100");
    }
    if (a_min < -60.0 || a_max > 60.0 || a_min >= a_max) {
        throw ConfigError("sim.a_min/a_max: must satisfy -60 <= a_min < a_max <= 60");
    }
    if (!(obj_length > 0.0)) throw ConfigError("sim.obj_length: must be > 0");
    if (!(obj_phys_width > 0.0)) throw ConfigError("sim.obj_phys_width: must be > 0");
    if (min_pts < 1 || min_pts > max_pts) {
        throw ConfigError("sim.min_pts/max_pts: must satisfy 1 <= min <= max");
    }
    if (sigma_r < 0.0 || sigma_a < 0.0 || sigma_d < 0.0) {
        throw ConfigError("sim.sigma_*: must be >= 0");
    }
    if (n_clutter < 0) throw ConfigError("sim.n_clutter: must be >= 0");
    if (!(hard_factor >= 1.0)) throw ConfigError("sim.hard_factor: must be >= 1");
    if (p_hard < 0.0 || p_hard > 1.0) throw ConfigError("sim.p_hard: must be in [0,1]");
    if (jitter.sigma_px < 0.0) throw ConfigError("sim.jitter.sigma_px: must be >= 0");
    if (jitter.p_miss < 0.0 || jitter.p_miss > 1.0) {
        throw ConfigError("sim.jitter.p_miss: must be in [0,1]");
    }
    if (img_w < 1 || img_h < 1) throw ConfigError("sim.img_w/img_h: must be >= 1");
    if (c_radar < 9) throw ConfigError("sim.c_radar: must be >= 9 (8 object channels + code)");
    if (c_image < 9) throw ConfigError("sim.c_image: must be >= 9 (8 signature channels + code)");
    if (z_min > z_max) throw ConfigError("sim.z_min/z_max: must satisfy z_min <= z_max");
    intrinsics.validate();
    extrinsics.validate();
}

namespace {

// Slant range r at plane height z: ground distance sqrt(r^2 - z^2), so the
// stored Cartesian triple satisfies r^2 = x^2 + y^2 + z^2 exactly.
geom::RadarPoint make_point(double r, double a, double d, double z, const SimConfig& cfg) {
    geom::RadarPoint p;
    p.r = r;
    p.a = a;
    p.d = d;
    p.z = z;
    const double ground = std::sqrt(std::max(0.0, r * r - z * z));
    const auto xy = geom::polar_to_cartesian(ground, a);
    p.x = xy[0];
    p.y = xy[1];
    const auto uv = geom::project_point({p.x, p.y, p.z}, cfg.intrinsics, cfg.extrinsics);
    p.u = uv[0];
    p.v = uv[1];
    return p;
}

std::vector<std::array<double, 2>> project_corners(const ObjectGT& obj, const SimConfig& cfg) {
    std::vector<std::array<double, 2>> uv;
    uv.reserve(8);
    for (int ir = -1; ir <= 1; ir += 2) {
        for (int ia = -1; ia <= 1; ia += 2) {
            for (int iz = -1; iz <= 1; iz += 2) {
                const double r = obj.center_r + ir * obj.length / 2.0;
                const double a = obj.center_a + ia * obj.width_deg / 2.0;
                const double z = obj.z_height + iz * cfg.obj_height / 2.0;
                const double ground = std::sqrt(std::max(0.0, r * r - z * z));
                const auto xy = geom::polar_to_cartesian(ground, a);
                uv.push_back(geom::project_point({xy[0], xy[1], z}, cfg.intrinsics,
                                                 cfg.extrinsics));
            }
        }
    }
    return uv;
}

BBox2D box_around(const std::vector<std::array<double, 2>>& uv, double pad, int object_id) {
    BBox2D b;
    b.u_min = b.u_max = uv[0][0];
    b.v_min = b.v_max = uv[0][1];
    for (const auto& p : uv) {
        b.u_min = std::min(b.u_min, p[0]);
        b.u_max = std::max(b.u_max, p[0]);
        b.v_min = std::min(b.v_min, p[1]);
        b.v_max = std::max(b.v_max, p[1]);
    }
    b.u_min -= pad;
    b.v_min -= pad;
    b.u_max += pad;
    b.v_max += pad;
    b.object_id = object_id;
    return b;
}

bool inside_image(const std::vector<std::array<double, 2>>& uv, const SimConfig& cfg) {
    for (const auto& p : uv) {
        if (p[0] < 0.0 || p[0] > cfg.img_w || p[1] < 0.0 || p[1] > cfg.img_h) return false;
    }
    return true;
}

std::vector<geom::RadarPoint> draw_scatterers(const ObjectGT& obj, const SimConfig& cfg,
                                              double noise_mult, CounterRng rng) {
    const int n = rng.uniform_int(cfg.min_pts, cfg.max_pts);
    std::vector<geom::RadarPoint> pts;
    pts.reserve(n);
    for (int i = 0; i < n; ++i) {
        const double r = obj.center_r + rng.uniform(-obj.length / 2.0, obj.length / 2.0) +
                         rng.gaussian(0.0, cfg.sigma_r * noise_mult);
        const double a = obj.center_a + rng.uniform(-obj.width_deg / 2.0, obj.width_deg / 2.0) +
                         rng.gaussian(0.0, cfg.sigma_a * noise_mult);
        const double d = obj.velocity + rng.gaussian(0.0, cfg.sigma_d * noise_mult);
        const double safe_r = std::max(r, std::abs(obj.z_height) + 0.1);
        pts.push_back(make_point(safe_r, a, d, obj.z_height, cfg));
    }
    return pts;
}

}  // namespace

std::optional<BBox2D> jitter_bbox(const BBox2D& box, const JitterConfig& noise, int img_w,
                                  int img_h, CounterRng& rng) {
    if (rng.uniform01() < noise.p_miss) return std::nullopt;
    BBox2D out = box;
    out.u_min = std::clamp(box.u_min + rng.gaussian(0.0, noise.sigma_px), 0.0, double(img_w));
    out.v_min = std::clamp(box.v_min + rng.gaussian(0.0, noise.sigma_px), 0.0, double(img_h));
    out.u_max = std::clamp(box.u_max + rng.gaussian(0.0, noise.sigma_px), 0.0, double(img_w));
    out.v_max = std::clamp(box.v_max + rng.gaussian(0.0, noise.sigma_px), 0.0, double(img_h));
    if (out.u_min > out.u_max) std::swap(out.u_min, out.u_max);
    if (out.v_min > out.v_max) std::swap(out.v_min, out.v_max);
    return out;
}

Frame generate_frame(const SimConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    const CounterRng root = CounterRng::from_seed(seed);

    Frame frame;
    frame.seed = seed;
    frame.intrinsics = cfg.intrinsics;
    frame.extrinsics = cfg.extrinsics;

    CounterRng rng_diff = root.derive(kStreamDifficulty);
    frame.difficulty = rng_diff.uniform01() < cfg.p_hard ? Difficulty::Hard : Difficulty::Easy;
    const bool hard = frame.difficulty == Difficulty::Hard;
    const double noise_mult = hard ? cfg.hard_factor : 1.0;
    const int n_clutter =
        hard ? static_cast<int>(std::lround(cfg.n_clutter * cfg.hard_factor)) : cfg.n_clutter;

    // Objects: rejection-sample placements whose corners project inside the
    // image and that keep minimum separation from already placed objects.
    CounterRng rng_obj = root.derive(kStreamObjects);
    const int n_obj = rng_obj.uniform_int(cfg.n_objects_min, cfg.n_objects_max);
    for (int oi = 0; oi < n_obj; ++oi) {
        bool placed = false;
        for (int attempt = 0; attempt < 100 && !placed; ++attempt) {
            ObjectGT obj;
            obj.id = oi;
            obj.center_r = rng_obj.uniform(cfg.r_min, cfg.r_max);
            obj.center_a = rng_obj.uniform(cfg.a_min, cfg.a_max);
            obj.z_height = rng_obj.uniform(cfg.z_min, cfg.z_max);
            obj.velocity = rng_obj.uniform(cfg.vel_min, cfg.vel_max);
            obj.length = cfg.obj_length;
            obj.width_deg =
                2.0 * std::atan2(cfg.obj_phys_width / 2.0, obj.center_r) * 180.0 / M_PI;
            bool separated = true;
            for (const ObjectGT& other : frame.objects) {
                if (std::abs(other.center_r - obj.center_r) < cfg.min_sep_r &&
                    std::abs(other.center_a - obj.center_a) < cfg.min_sep_a) {
                    separated = false;
                    break;
                }
            }
            if (!separated) continue;
            const auto corners = project_corners(obj, cfg);
            if (!inside_image(corners, cfg)) continue;
            frame.objects.push_back(obj);
            frame.gt_boxes.push_back(box_around(corners, cfg.box_pad, obj.id));
            placed = true;
        }
        if (!placed) {
            throw ConfigError("generate_frame: could not place object " + std::to_string(oi) +
                              " inside the image after 100 attempts");
        }
    }

    // Scatterers; redraw until at least one lands inside the object's box so
    // every ground-truth object is detectable from radar evidence.
    const CounterRng rng_scatter_root = root.derive(kStreamScatter);
    for (int oi = 0; oi < n_obj; ++oi) {
        const CounterRng obj_stream = rng_scatter_root.derive(static_cast<std::uint64_t>(oi));
        bool ok = false;
        for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
            auto pts = draw_scatterers(frame.objects[oi], cfg, noise_mult,
                                       obj_stream.derive(static_cast<std::uint64_t>(attempt)));
            for (const auto& p : pts) {
                if (geom::in_bbox(p.u, p.v, frame.gt_boxes[oi])) {
                    ok = true;
                    break;
                }
            }
            if (ok) frame.points.insert(frame.points.end(), pts.begin(), pts.end());
        }
        if (!ok) {
            throw ConfigError("generate_frame: object " + std::to_string(oi) +
                              " kept no radar point inside its box after 100 attempts");
        }
    }

    CounterRng rng_clutter = root.derive(kStreamClutter);
    for (int i = 0; i < n_clutter; ++i) {
        const double r = rng_clutter.uniform(cfg.r_min, cfg.r_max);
        const double a = rng_clutter.uniform(cfg.a_min, cfg.a_max);
        const double d = rng_clutter.uniform(cfg.vel_min, cfg.vel_max);
        const double z = rng_clutter.uniform(-1.5, 0.5);
        frame.points.push_back(make_point(r, a, d, z, cfg));
    }

    const CounterRng rng_jitter_root = root.derive(kStreamJitter);
    for (std::size_t bi = 0; bi < frame.gt_boxes.size(); ++bi) {
        CounterRng rng_box = rng_jitter_root.derive(bi);
        auto jittered = jitter_bbox(frame.gt_boxes[bi], cfg.jitter, cfg.img_w, cfg.img_h, rng_box);
        if (jittered) frame.detector_boxes.push_back(*jittered);
    }

    synth_features(frame, cfg);
    return frame;
}

namespace {

// Sinusoidal positional code: channel k carries sin(w x + phi) of one axis,
// axes alternating, frequencies log-spaced so absolute position is
// recoverable across scales.
struct PosCode {
    std::vector<double> freq;
    std::vector<double> phase;
    std::vector<int> axis;
    double scale0 = 1.0, scale1 = 1.0;

    static PosCode make(int channels, double scale0, double scale1, CounterRng rng) {
        PosCode pc;
        pc.scale0 = scale0;
        pc.scale1 = scale1;
        pc.freq.resize(channels);
        pc.phase.resize(channels);
        pc.axis.resize(channels);
        for (int k = 0; k < channels; ++k) {
            pc.axis[k] = k % 2;
            pc.freq[k] = 0.5 * std::pow(1.35, k / 2);
            pc.phase[k] = rng.uniform(0.0, 2.0 * M_PI);
        }
        return pc;
    }

    void eval(double c0, double c1, double* out) const {
        for (std::size_t k = 0; k < freq.size(); ++k) {
            const double x = axis[k] == 0 ? c0 / scale0 : c1 / scale1;
            out[k] = std::sin(freq[k] * x + phase[k]);
        }
    }
};

struct BumpScale {
    double sr, sa;   // Gaussian widths
    double tr, ta;   // tanh scales for the offset channels
};

// 8 object channels: {presence, delta-r, delta-a} at a tight and a wide
// kernel, plus two fine-scale offset channels for sub-bin resolution. All
// sums are squashed by 1.5*tanh, so the field stays inside [-3,3] no matter
// how many objects overlap.
struct RadarBumps {
    std::vector<std::array<double, 2>> centers;  // (r, a)

    static constexpr BumpScale kTight{1.0, 0.5, 1.5, 0.6};
    static constexpr BumpScale kWide{3.0, 1.5, 1.5, 0.6};
    static constexpr BumpScale kFine{0.35, 0.2, 0.3, 0.15};

    void eval(double r, double a, double* out) const {
        double acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
        for (const auto& c : centers) {
            const double dr = c[0] - r;  // center minus query, the codec's convention
            const double da = c[1] - a;
            const auto g = [&](const BumpScale& s) {
                return std::exp(-0.5 * (dr * dr / (s.sr * s.sr) + da * da / (s.sa * s.sa)));
            };
            const double gt = g(kTight), gw = g(kWide), gf = g(kFine);
            acc[0] += gt;
            acc[1] += gt * std::tanh(dr / kTight.tr);
            acc[2] += gt * std::tanh(da / kTight.ta);
            acc[3] += gw;
            acc[4] += gw * std::tanh(dr / kWide.tr);
            acc[5] += gw * std::tanh(da / kWide.ta);
            acc[6] += gf * std::tanh(dr / kFine.tr);
            acc[7] += gf * std::tanh(da / kFine.ta);
        }
        for (int k = 0; k < 8; ++k) out[k] = 1.5 * std::tanh(acc[k]);
    }
};

// Per-object constant signature inside its box, faded to zero over fade_px
// at the borders to keep the field continuous.
struct ImageSignatures {
    std::vector<BBox2D> boxes;
    std::vector<std::array<double, 8>> sig;
    static constexpr double kFadePx = 8.0;

    static double window(double x, double lo, double hi) {
        const double t = std::clamp(std::min(x - lo, hi - x) / kFadePx, 0.0, 1.0);
        return t * t * (3.0 - 2.0 * t);
    }

    void eval(double u, double v, double* out) const {
        double acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
        for (std::size_t i = 0; i < boxes.size(); ++i) {
            const double w =
                window(u, boxes[i].u_min, boxes[i].u_max) * window(v, boxes[i].v_min, boxes[i].v_max);
            if (w <= 0.0) continue;
            for (int k = 0; k < 8; ++k) acc[k] += w * sig[i][k];
        }
        for (int k = 0; k < 8; ++k) out[k] = 1.5 * std::tanh(acc[k]);
    }
};

}  // namespace

void synth_features(Frame& frame, const SimConfig& cfg) {
    const CounterRng feat_root = CounterRng::from_seed(frame.seed).derive(kStreamFeatures);

    const int n_bump = 8;
    const int n_pos_r = cfg.c_radar - n_bump;
    auto radar_code = std::make_shared<PosCode>(
        PosCode::make(n_pos_r, 10.0, 10.0, feat_root.derive(1)));
    auto bumps = std::make_shared<RadarBumps>();
    for (const ObjectGT& o : frame.objects) bumps->centers.push_back({o.center_r, o.center_a});

    frame.radar_feat.channels = cfg.c_radar;
    frame.radar_feat.eval_into = [radar_code, bumps, n_pos_r](double r, double a, double* out) {
        radar_code->eval(r, a, out);
        bumps->eval(r, a, out + n_pos_r);
    };

    const int n_sig = 8;
    const int n_pos_i = cfg.c_image - n_sig;
    auto image_code = std::make_shared<PosCode>(
        PosCode::make(n_pos_i, 100.0, 100.0, feat_root.derive(2)));
    auto sigs = std::make_shared<ImageSignatures>();
    CounterRng rng_sig = feat_root.derive(3);
    for (std::size_t i = 0; i < frame.gt_boxes.size(); ++i) {
        CounterRng rng_obj = rng_sig.derive(i);
        std::array<double, 8> s;
        for (double& v : s) v = rng_obj.uniform(-1.5, 1.5);
        sigs->boxes.push_back(frame.gt_boxes[i]);
        sigs->sig.push_back(s);
    }

    frame.image_feat.channels = cfg.c_image;
    frame.image_feat.eval_into = [image_code, sigs, n_pos_i](double u, double v, double* out) {
        image_code->eval(u, v, out);
        sigs->eval(u, v, out + n_pos_i);
    };
}

}  // namespace rofusion::sim
