#include "rofusion/config.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "rofusion/errors.hpp"

namespace rofusion {

using nlohmann::json;

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("train.epochs: must be >= 1");
    if (batch_frames < 1) throw ConfigError("train.batch_frames: must be >= 1");
    if (!(lr > 0.0)) throw ConfigError("train.lr: must be > 0");
    if (!(alpha > 0.0)) throw ConfigError("train.alpha: must be > 0");
    if (!(adam.beta1 > 0.0 && adam.beta1 < 1.0)) throw ConfigError("train.adam.beta1: in (0,1)");
    if (!(adam.beta2 > 0.0 && adam.beta2 < 1.0)) throw ConfigError("train.adam.beta2: in (0,1)");
    if (!(adam.eps > 0.0)) throw ConfigError("train.adam.eps: must be > 0");
    if (n_train < 1) throw ConfigError("train.n_train: must be >= 1");
    if (n_val < 0) throw ConfigError("train.n_val: must be >= 0");
    if (n_test < 0) throw ConfigError("train.n_test: must be >= 0");
    // split seed intervals must not overlap
    const auto overlaps = [](std::uint64_t a0, int an, std::uint64_t b0, int bn) {
        return an > 0 && bn > 0 && a0 < b0 + bn && b0 < a0 + an;
    };
    if (overlaps(split_offset_train, n_train, split_offset_val, n_val) ||
        overlaps(split_offset_train, n_train, split_offset_test, n_test) ||
        overlaps(split_offset_val, n_val, split_offset_test, n_test)) {
        throw ConfigError("train.split_offset_*: split seed ranges overlap");
    }
}

std::string to_string(BoxSource s) { return s == BoxSource::Oracle ? "oracle" : "jittered"; }

BoxSource box_source_from_string(const std::string& s) {
    if (s == "oracle") return BoxSource::Oracle;
    if (s == "jittered") return BoxSource::Jittered;
    throw ConfigError("eval.box_source: unknown value '" + s + "'");
}

std::string to_string(OriginMode m) { return m == OriginMode::Gt ? "gt" : "hLC"; }

OriginMode origin_mode_from_string(const std::string& s) {
    if (s == "gt") return OriginMode::Gt;
    if (s == "hLC") return OriginMode::HLc;
    throw ConfigError("eval.origin_mode: unknown value '" + s + "'");
}

void EvalConfig::validate() const {
    if (!(iou_thr > 0.0 && iou_thr <= 1.0)) throw ConfigError("eval.iou_thr: must be in (0,1]");
    if (!(template_length > 0.0)) throw ConfigError("eval.template_length: must be > 0");
    if (!(template_width > 0.0)) throw ConfigError("eval.template_width: must be > 0");
    if (!(obj_length_prior > 0.0)) throw ConfigError("eval.obj_length_prior: must be > 0");
}

void ExperimentConfig::validate() const {
    sim.validate();
    codec.validate();
    grid.validate();
    arch.validate();
    train.validate();
    eval.validate();
    if (arch.c_radar_in != sim.c_radar) {
        throw ConfigError("arch.c_radar_in: " + std::to_string(arch.c_radar_in) +
                          " does not match sim.c_radar " + std::to_string(sim.c_radar));
    }
    if (arch.c_image_in != sim.c_image) {
        throw ConfigError("arch.c_image_in: " + std::to_string(arch.c_image_in) +
                          " does not match sim.c_image " + std::to_string(sim.c_image));
    }
    if (codec.mode == codec::Mode::Local) {
        if (arch.cls_r_out != codec.n_r_bins || arch.cls_a_out != codec.n_az_bins) {
            throw ConfigError("arch.cls_r_out/cls_a_out: (" + std::to_string(arch.cls_r_out) +
                              "," + std::to_string(arch.cls_a_out) +
                              ") must match codec bins (" + std::to_string(codec.n_r_bins) + "," +
                              std::to_string(codec.n_az_bins) + ")");
        }
    } else {
        if (arch.cls_r_out != grid.n_r_bins() || arch.cls_a_out != grid.n_a_bins()) {
            throw ConfigError("arch.cls_r_out/cls_a_out: (" + std::to_string(arch.cls_r_out) +
                              "," + std::to_string(arch.cls_a_out) +
                              ") must match grid bins (" + std::to_string(grid.n_r_bins()) + "," +
                              std::to_string(grid.n_a_bins()) + ")");
        }
    }
    if (arch.reg_out != 2) throw ConfigError("arch.reg_out: must be 2 (range, azimuth residual)");
}

namespace {

// Strict object reader: every get() must be consumed, nothing extra allowed.
class StrictObj {
public:
    StrictObj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
    }

    const json& get(const std::string& key) {
        const auto it = j_.find(key);
        if (it == j_.end()) throw ConfigError(path_ + "." + key + ": missing");
        seen_.insert(key);
        return *it;
    }

    double num(const std::string& key) {
        const json& v = get(key);
        if (!v.is_number()) throw ConfigError(path_ + "." + key + ": expected a number");
        return v.get<double>();
    }

    int integer(const std::string& key) {
        const json& v = get(key);
        if (!v.is_number_integer()) throw ConfigError(path_ + "." + key + ": expected an integer");
        return v.get<int>();
    }

    std::uint64_t u64(const std::string& key) {
        const json& v = get(key);
        if (!v.is_number_unsigned() && !v.is_number_integer()) {
            throw ConfigError(path_ + "." + key + ": expected an unsigned integer");
        }
        return v.get<std::uint64_t>();
    }

    bool boolean(const std::string& key) {
        const json& v = get(key);
        if (!v.is_boolean()) throw ConfigError(path_ + "." + key + ": expected a boolean");
        return v.get<bool>();
    }

    std::string str(const std::string& key) {
        const json& v = get(key);
        if (!v.is_string()) throw ConfigError(path_ + "." + key + ": expected a string");
        return v.get<std::string>();
    }

    std::vector<int> int_list(const std::string& key) {
        const json& v = get(key);
        if (!v.is_array()) throw ConfigError(path_ + "." + key + ": expected an array");
        std::vector<int> out;
        for (const auto& e : v) {
            if (!e.is_number_integer()) {
                throw ConfigError(path_ + "." + key + ": expected integers");
            }
            out.push_back(e.get<int>());
        }
        return out;
    }

    void finish() {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) {
                throw ConfigError(path_ + "." + it.key() + ": unknown field");
            }
        }
    }

    const std::string& path() const { return path_; }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

json calib_to_json(const geom::CameraIntrinsics& K, const geom::CameraExtrinsics& E) {
    json j;
    j["fx"] = K.fx;
    j["fy"] = K.fy;
    j["px"] = K.px;
    j["py"] = K.py;
    j["sign_convention"] = geom::to_string(K.sign_convention);
    j["R"] = E.R;
    j["t"] = E.t;
    return j;
}

void calib_from_json(const json& j, const std::string& path, geom::CameraIntrinsics* K,
                     geom::CameraExtrinsics* E) {
    StrictObj o(j, path);
    K->fx = o.num("fx");
    K->fy = o.num("fy");
    K->px = o.num("px");
    K->py = o.num("py");
    K->sign_convention = geom::sign_convention_from_string(o.str("sign_convention"));
    const json& r = o.get("R");
    if (!r.is_array() || r.size() != 9) throw ConfigError(path + ".R: expected 9 numbers");
    for (int i = 0; i < 9; ++i) E->R[i] = r[i].get<double>();
    const json& t = o.get("t");
    if (!t.is_array() || t.size() != 3) throw ConfigError(path + ".t: expected 3 numbers");
    for (int i = 0; i < 3; ++i) E->t[i] = t[i].get<double>();
    o.finish();
}

}  // namespace

std::string config_to_json_text(const ExperimentConfig& cfg) {
    json j;
    json& s = j["sim"];
    s["n_objects_min"] = cfg.sim.n_objects_min;
    s["n_objects_max"] = cfg.sim.n_objects_max;
    s["r_min"] = cfg.sim.r_min;
    s["r_max"] = cfg.sim.r_max;
    s["a_min"] = cfg.sim.a_min;
    s["a_max"] = cfg.sim.a_max;
    s["obj_length"] = cfg.sim.obj_length;
    s["obj_phys_width"] = cfg.sim.obj_phys_width;
    s["obj_height"] = cfg.sim.obj_height;
    s["z_min"] = cfg.sim.z_min;
    s["z_max"] = cfg.sim.z_max;
    s["vel_min"] = cfg.sim.vel_min;
    s["vel_max"] = cfg.sim.vel_max;
    s["min_pts"] = cfg.sim.min_pts;
    s["max_pts"] = cfg.sim.max_pts;
    s["sigma_r"] = cfg.sim.sigma_r;
    s["sigma_a"] = cfg.sim.sigma_a;
    s["sigma_d"] = cfg.sim.sigma_d;
    s["n_clutter"] = cfg.sim.n_clutter;
    s["hard_factor"] = cfg.sim.hard_factor;
    s["p_hard"] = cfg.sim.p_hard;
    s["box_pad"] = cfg.sim.box_pad;
    s["min_sep_r"] = cfg.sim.min_sep_r;
    s["min_sep_a"] = cfg.sim.min_sep_a;
    s["jitter_sigma_px"] = cfg.sim.jitter.sigma_px;
    s["jitter_p_miss"] = cfg.sim.jitter.p_miss;
    s["img_w"] = cfg.sim.img_w;
    s["img_h"] = cfg.sim.img_h;
    s["c_radar"] = cfg.sim.c_radar;
    s["c_image"] = cfg.sim.c_image;
    s["calibration"] = calib_to_json(cfg.sim.intrinsics, cfg.sim.extrinsics);

    json& c = j["codec"];
    c["n_az_bins"] = cfg.codec.n_az_bins;
    c["n_r_bins"] = cfg.codec.n_r_bins;
    c["az_bin_width"] = cfg.codec.az_bin_width;
    c["r_bin_width"] = cfg.codec.r_bin_width;
    c["mode"] = codec::to_string(cfg.codec.mode);

    json& g = j["grid"];
    g["r_min"] = cfg.grid.r_min;
    g["r_max"] = cfg.grid.r_max;
    g["r_step"] = cfg.grid.r_step;
    g["a_min"] = cfg.grid.a_min;
    g["a_max"] = cfg.grid.a_max;
    g["a_step"] = cfg.grid.a_step;

    json& a = j["arch"];
    a["c_radar_in"] = cfg.arch.c_radar_in;
    a["c_image_in"] = cfg.arch.c_image_in;
    a["branch_dims"] = cfg.arch.branch_dims;
    a["fused_dims"] = cfg.arch.fused_dims;
    a["head_dims"] = cfg.arch.head_dims;
    a["cls_r_out"] = cfg.arch.cls_r_out;
    a["cls_a_out"] = cfg.arch.cls_a_out;
    a["reg_out"] = cfg.arch.reg_out;

    json& t = j["train"];
    t["epochs"] = cfg.train.epochs;
    t["batch_frames"] = cfg.train.batch_frames;
    t["lr"] = cfg.train.lr;
    t["alpha"] = cfg.train.alpha;
    t["adam_beta1"] = cfg.train.adam.beta1;
    t["adam_beta2"] = cfg.train.adam.beta2;
    t["adam_eps"] = cfg.train.adam.eps;
    t["seed"] = cfg.train.seed;
    t["n_train"] = cfg.train.n_train;
    t["n_val"] = cfg.train.n_val;
    t["n_test"] = cfg.train.n_test;
    t["split_offset_train"] = cfg.train.split_offset_train;
    t["split_offset_val"] = cfg.train.split_offset_val;
    t["split_offset_test"] = cfg.train.split_offset_test;
    t["augment_nontrivial"] = cfg.train.augment_nontrivial;
    t["use_image_features"] = cfg.train.use_image_features;

    json& e = j["eval"];
    e["iou_thr"] = cfg.eval.iou_thr;
    e["template_length"] = cfg.eval.template_length;
    e["template_width"] = cfg.eval.template_width;
    e["box_source"] = to_string(cfg.eval.box_source);
    e["origin_mode"] = to_string(cfg.eval.origin_mode);
    e["obj_length_prior"] = cfg.eval.obj_length_prior;

    return j.dump(2) + "\n";
}

ExperimentConfig config_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: JSON parse error: ") + e.what());
    }
    StrictObj root(j, "config");
    ExperimentConfig cfg;

    {
        StrictObj s(root.get("sim"), "sim");
        cfg.sim.n_objects_min = s.integer("n_objects_min");
        cfg.sim.n_objects_max = s.integer("n_objects_max");
        cfg.sim.r_min = s.num("r_min");
        cfg.sim.r_max = s.num("r_max");
        cfg.sim.a_min = s.num("a_min");
        cfg.sim.a_max = s.num("a_max");
        cfg.sim.obj_length = s.num("obj_length");
        cfg.sim.obj_phys_width = s.num("obj_phys_width");
        cfg.sim.obj_height = s.num("obj_height");
        cfg.sim.z_min = s.num("z_min");
        cfg.sim.z_max = s.num("z_max");
        cfg.sim.vel_min = s.num("vel_min");
        cfg.sim.vel_max = s.num("vel_max");
        cfg.sim.min_pts = s.integer("min_pts");
        cfg.sim.max_pts = s.integer("max_pts");
        cfg.sim.sigma_r = s.num("sigma_r");
        cfg.sim.sigma_a = s.num("sigma_a");
        cfg.sim.sigma_d = s.num("sigma_d");
        cfg.sim.n_clutter = s.integer("n_clutter");
        cfg.sim.hard_factor = s.num("hard_factor");
        cfg.sim.p_hard = s.num("p_hard");
        cfg.sim.box_pad = s.num("box_pad");
        cfg.sim.min_sep_r = s.num("min_sep_r");
        cfg.sim.min_sep_a = s.num("min_sep_a");
        cfg.sim.jitter.sigma_px = s.num("jitter_sigma_px");
        cfg.sim.jitter.p_miss = s.num("jitter_p_miss");
        cfg.sim.img_w = s.integer("img_w");
        cfg.sim.img_h = s.integer("img_h");
        cfg.sim.c_radar = s.integer("c_radar");
        cfg.sim.c_image = s.integer("c_image");
        calib_from_json(s.get("calibration"), "sim.calibration", &cfg.sim.intrinsics,
                        &cfg.sim.extrinsics);
        s.finish();
    }
    {
        StrictObj c(root.get("codec"), "codec");
        cfg.codec.n_az_bins = c.integer("n_az_bins");
        cfg.codec.n_r_bins = c.integer("n_r_bins");
        cfg.codec.az_bin_width = c.num("az_bin_width");
        cfg.codec.r_bin_width = c.num("r_bin_width");
        cfg.codec.mode = codec::mode_from_string(c.str("mode"));
        c.finish();
    }
    {
        StrictObj g(root.get("grid"), "grid");
        cfg.grid.r_min = g.num("r_min");
        cfg.grid.r_max = g.num("r_max");
        cfg.grid.r_step = g.num("r_step");
        cfg.grid.a_min = g.num("a_min");
        cfg.grid.a_max = g.num("a_max");
        cfg.grid.a_step = g.num("a_step");
        g.finish();
    }
    {
        StrictObj a(root.get("arch"), "arch");
        cfg.arch.c_radar_in = a.integer("c_radar_in");
        cfg.arch.c_image_in = a.integer("c_image_in");
        cfg.arch.branch_dims = a.int_list("branch_dims");
        cfg.arch.fused_dims = a.int_list("fused_dims");
        cfg.arch.head_dims = a.int_list("head_dims");
        cfg.arch.cls_r_out = a.integer("cls_r_out");
        cfg.arch.cls_a_out = a.integer("cls_a_out");
        cfg.arch.reg_out = a.integer("reg_out");
        a.finish();
    }
    {
        StrictObj t(root.get("train"), "train");
        cfg.train.epochs = t.integer("epochs");
        cfg.train.batch_frames = t.integer("batch_frames");
        cfg.train.lr = t.num("lr");
        cfg.train.alpha = t.num("alpha");
        cfg.train.adam.beta1 = t.num("adam_beta1");
        cfg.train.adam.beta2 = t.num("adam_beta2");
        cfg.train.adam.eps = t.num("adam_eps");
        cfg.train.seed = t.u64("seed");
        cfg.train.n_train = t.integer("n_train");
        cfg.train.n_val = t.integer("n_val");
        cfg.train.n_test = t.integer("n_test");
        cfg.train.split_offset_train = t.u64("split_offset_train");
        cfg.train.split_offset_val = t.u64("split_offset_val");
        cfg.train.split_offset_test = t.u64("split_offset_test");
        cfg.train.augment_nontrivial = t.boolean("augment_nontrivial");
        cfg.train.use_image_features = t.boolean("use_image_features");
        t.finish();
    }
    {
        StrictObj e(root.get("eval"), "eval");
        cfg.eval.iou_thr = e.num("iou_thr");
        cfg.eval.template_length = e.num("template_length");
        cfg.eval.template_width = e.num("template_width");
        cfg.eval.box_source = box_source_from_string(e.str("box_source"));
        cfg.eval.origin_mode = origin_mode_from_string(e.str("origin_mode"));
        cfg.eval.obj_length_prior = e.num("obj_length_prior");
        e.finish();
    }
    root.finish();
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("config: cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return config_from_json_text(text);
}

void save_config(const std::string& path, const ExperimentConfig& cfg) {
    std::ofstream out(path);
    if (!out) throw IoError("config: cannot write " + path);
    out << config_to_json_text(cfg);
    if (!out) throw IoError("config: write failed for " + path);
}

}  // namespace rofusion
