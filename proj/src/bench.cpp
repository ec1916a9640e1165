#include "rofusion/bench.hpp"

#include <cstdio>
#include <filesystem>

#include <json.hpp>

#include "rofusion/errors.hpp"
#include "rofusion/frame_io.hpp"
#include "rofusion/pipeline.hpp"
#include "rofusion/training.hpp"

namespace rofusion::bench {

using nlohmann::json;

ExperimentConfig make_radar_only(ExperimentConfig cfg) {
    cfg.train.use_image_features = false;
    return cfg;
}

ExperimentConfig make_global_mode(ExperimentConfig cfg) {
    cfg.codec.mode = codec::Mode::Global;
    cfg.arch.cls_r_out = cfg.grid.n_r_bins();
    cfg.arch.cls_a_out = cfg.grid.n_a_bins();
    return cfg;
}

namespace {

double pct(const std::optional<double>& v) { return v ? *v * 100.0 : 0.0; }

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

}  // namespace

AblationResult run_ablation(const ExperimentConfig& cfg, const std::string& work_dir,
                            const std::function<void(const std::string&)>& log) {
    std::filesystem::create_directories(work_dir);
    const std::string train_path = work_dir + "/ablation_train.jsonl";
    const std::string val_path = work_dir + "/ablation_val.jsonl";
    const std::string test_path = work_dir + "/ablation_test.jsonl";
    io::write_frames(train_path, pipeline::make_split(cfg, cfg.train.split_offset_train,
                                                      cfg.train.n_train));
    io::write_frames(val_path,
                     pipeline::make_split(cfg, cfg.train.split_offset_val, cfg.train.n_val));
    io::write_frames(test_path,
                     pipeline::make_split(cfg, cfg.train.split_offset_test, cfg.train.n_test));
    const std::uint64_t hash0 = io::hash_file(train_path) ^ io::hash_file(val_path) ^
                                io::hash_file(test_path);

    AblationResult result;
    result.frames_hash = hash0;

    const std::vector<std::pair<std::string, ExperimentConfig>> variants = {
        {"w/o LC", make_global_mode(cfg)},
        {"radar-only", make_radar_only(cfg)},
        {"full", cfg},
    };
    for (const auto& [name, vcfg] : variants) {
        const std::uint64_t hash_now = io::hash_file(train_path) ^ io::hash_file(val_path) ^
                                       io::hash_file(test_path);
        if (hash_now != hash0) {
            throw IoError("run_ablation: frame files changed between variant runs");
        }
        if (log) log("ablation variant '" + name + "': training");
        const auto train_frames = io::read_frames(train_path, vcfg.sim);
        const auto val_frames = io::read_frames(val_path, vcfg.sim);
        const auto test_frames = io::read_frames(test_path, vcfg.sim);
        const auto outcome = train::train_on(vcfg, train_frames, val_frames);
        AblationRow row;
        row.variant = name;
        row.report = pipeline::evaluate_frames(test_frames, outcome.best_params, vcfg);
        if (log) {
            log("ablation variant '" + name +
                "': AR overall = " + fmt(pct(row.report.overall.ar)) + "%");
        }
        result.rows.push_back(std::move(row));
    }
    return result;
}

std::string ablation_csv(const AblationResult& res) {
    std::string out = "variant,split,AP,AR,R_err_m,A_err_deg,TP,FP,FN\n";
    for (const AblationRow& row : res.rows) {
        const std::string body = eval::report_csv(row.report);
        // prepend the variant column to every data line
        std::size_t start = body.find('\n') + 1;
        while (start < body.size()) {
            const std::size_t end = body.find('\n', start);
            out += "\"" + row.variant + "\"," + body.substr(start, end - start) + "\n";
            start = end + 1;
        }
    }
    return out;
}

std::string ablation_table(const AblationResult& res) {
    char buf[256];
    std::string out;
    out += "variant     | input       |  AR(%)   R(m)   A(deg) | easy AR  hard AR\n";
    out += "------------+-------------+------------------------+-----------------\n";
    for (const AblationRow& row : res.rows) {
        const char* input = row.variant == "w/o LC"       ? "RD+PC"
                            : row.variant == "radar-only" ? "RD+PC"
                                                          : "IM+RD+PC";
        const auto& o = row.report.overall;
        std::snprintf(buf, sizeof(buf), "%-11s | %-11s | %6.2f %6.3f %7.3f | %7.2f %8.2f\n",
                      row.variant.c_str(), input, pct(o.ar), o.mean_r_err.value_or(0.0),
                      o.mean_a_err.value_or(0.0), pct(row.report.easy.ar),
                      pct(row.report.hard.ar));
        out += buf;
    }
    return out;
}

PresetKind preset_kind_from_string(const std::string& s) {
    if (s == "train_eval") return PresetKind::TrainEval;
    if (s == "overfit") return PresetKind::Overfit;
    if (s == "ablation") return PresetKind::Ablation;
    if (s == "noise_sweep") return PresetKind::NoiseSweep;
    throw ConfigError("manifest.kind: unknown value '" + s + "'");
}

std::string to_string(PresetKind k) {
    switch (k) {
        case PresetKind::TrainEval: return "train_eval";
        case PresetKind::Overfit: return "overfit";
        case PresetKind::Ablation: return "ablation";
        case PresetKind::NoiseSweep: return "noise_sweep";
    }
    return "?";
}

Manifest manifest_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("manifest: JSON parse error: ") + e.what());
    }
    Manifest m;
    if (!j.contains("presets") || !j["presets"].is_object()) {
        throw ConfigError("manifest.presets: missing or not an object");
    }
    for (auto it = j["presets"].begin(); it != j["presets"].end(); ++it) {
        Preset p;
        p.name = it.key();
        const json& pj = it.value();
        p.kind = preset_kind_from_string(pj.at("kind").get<std::string>());
        p.cfg = config_from_json_text(pj.at("config").dump());
        if (pj.contains("sweep_sigmas")) {
            for (const json& s : pj["sweep_sigmas"]) p.sweep_sigmas.push_back(s.get<double>());
        }
        for (auto eit = pj.at("expected").begin(); eit != pj.at("expected").end(); ++eit) {
            const json& r = eit.value();
            if (!r.is_array() || r.size() != 2) {
                throw ConfigError("manifest.presets." + p.name + ".expected." + eit.key() +
                                  ": expected [lo, hi]");
            }
            m.presets[p.name];  // ensure ordering below
            p.expected[eit.key()] = {r[0].get<double>(), r[1].get<double>()};
        }
        m.presets[p.name] = std::move(p);
    }
    return m;
}

Manifest load_manifest(const std::string& path) {
    return manifest_from_json_text(io::read_text(path));
}

std::string manifest_to_json_text(const Manifest& manifest) {
    json j;
    j["presets"] = json::object();
    for (const auto& [name, p] : manifest.presets) {
        json pj;
        pj["kind"] = to_string(p.kind);
        pj["config"] = json::parse(config_to_json_text(p.cfg));
        if (!p.sweep_sigmas.empty()) pj["sweep_sigmas"] = p.sweep_sigmas;
        pj["expected"] = json::object();
        for (const auto& [metric, range] : p.expected) {
            pj["expected"][metric] = {range.lo, range.hi};
        }
        j["presets"][name] = std::move(pj);
    }
    return j.dump(2) + "\n";
}

namespace {

void emit(const std::string& out_dir, const std::string& name, const std::string& text) {
    io::write_text_atomic(out_dir + "/" + name, text);
}

void record(BenchResult* res, const std::string& name, double value) {
    res->metrics[name] = value;
}

}  // namespace

BenchResult run_benchmark(const Preset& preset, const std::string& out_dir,
                          const std::function<void(const std::string&)>& log) {
    std::filesystem::create_directories(out_dir);
    BenchResult res;

    switch (preset.kind) {
        case PresetKind::Overfit: {
            const auto outcome = train::train(preset.cfg);
            emit(out_dir, "epoch_log.csv", train::epoch_log_csv(outcome.log));
            const double first = outcome.log.front().train_loss;
            const double last = outcome.log.back().train_loss;
            record(&res, "final_loss_ratio", first > 0.0 ? last / first : 0.0);
            break;
        }
        case PresetKind::TrainEval: {
            const auto outcome = train::train(preset.cfg);
            emit(out_dir, "epoch_log.csv", train::epoch_log_csv(outcome.log));
            const auto test_frames = pipeline::make_split(
                preset.cfg, preset.cfg.train.split_offset_test, preset.cfg.train.n_test);
            std::vector<eval::FrameDetections> dets;
            const auto report =
                pipeline::evaluate_frames(test_frames, outcome.best_params, preset.cfg, &dets);
            emit(out_dir, "report.csv", eval::report_csv(report));
            emit(out_dir, "report.txt", eval::report_table(report));
            emit(out_dir, "predictions.csv", eval::predictions_csv(dets));
            record(&res, "ar_overall_pct", pct(report.overall.ar));
            record(&res, "ap_overall_pct", pct(report.overall.ap));
            record(&res, "r_err_m", report.overall.mean_r_err.value_or(0.0));
            record(&res, "a_err_deg", report.overall.mean_a_err.value_or(0.0));
            break;
        }
        case PresetKind::Ablation: {
            const auto abl = run_ablation(preset.cfg, out_dir, log);
            emit(out_dir, "ablation.csv", ablation_csv(abl));
            emit(out_dir, "ablation.txt", ablation_table(abl));
            record(&res, "ar_wo_lc_pct", pct(abl.rows[0].report.overall.ar));
            record(&res, "ar_radar_only_pct", pct(abl.rows[1].report.overall.ar));
            record(&res, "ar_full_pct", pct(abl.rows[2].report.overall.ar));
            record(&res, "gap_full_minus_wo_lc_pct",
                   pct(abl.rows[2].report.overall.ar) - pct(abl.rows[0].report.overall.ar));
            record(&res, "ar_easy_wo_lc_pct", pct(abl.rows[0].report.easy.ar));
            record(&res, "ar_hard_wo_lc_pct", pct(abl.rows[0].report.hard.ar));
            break;
        }
        case PresetKind::NoiseSweep: {
            const auto outcome = train::train(preset.cfg);
            emit(out_dir, "epoch_log.csv", train::epoch_log_csv(outcome.log));
            ExperimentConfig eval_cfg = preset.cfg;
            eval_cfg.eval.box_source = BoxSource::Jittered;
            for (double sigma : preset.sweep_sigmas) {
                eval_cfg.sim.jitter.sigma_px = sigma;
                const auto test_frames = pipeline::make_split(
                    eval_cfg, eval_cfg.train.split_offset_test, eval_cfg.train.n_test);
                const auto report =
                    pipeline::evaluate_frames(test_frames, outcome.best_params, eval_cfg);
                char name[64];
                std::snprintf(name, sizeof(name), "ar_sigma%g_pct", sigma);
                record(&res, name, pct(report.overall.ar));
                std::snprintf(name, sizeof(name), "report_sigma%g.csv", sigma);
                emit(out_dir, name, eval::report_csv(report));
            }
            break;
        }
    }

    std::string summary = "preset: " + preset.name + " (" + to_string(preset.kind) + ")\n";
    for (const auto& [metric, value] : res.metrics) {
        const auto it = preset.expected.find(metric);
        if (it == preset.expected.end()) {
            summary += "  " + metric + " = " + fmt(value) + " (no expectation)\n";
            continue;
        }
        const bool ok = value >= it->second.lo && value <= it->second.hi;
        if (!ok) {
            res.pass = false;
            res.failures.push_back(metric + " = " + fmt(value) + " outside [" +
                                   fmt(it->second.lo) + ", " + fmt(it->second.hi) + "]");
        }
        summary += "  " + metric + " = " + fmt(value) + " expected [" + fmt(it->second.lo) +
                   ", " + fmt(it->second.hi) + "] " + (ok ? "PASS" : "FAIL") + "\n";
    }
    for (const auto& [metric, range] : preset.expected) {
        if (!res.metrics.count(metric)) {
            res.pass = false;
            res.failures.push_back(metric + " expected [" + fmt(range.lo) + ", " + fmt(range.hi) +
                                   "] but was never measured");
            summary += "  " + metric + " MISSING\n";
        }
    }
    summary += res.pass ? "RESULT: PASS\n" : "RESULT: FAIL\n";
    emit(out_dir, "summary.txt", summary);
    if (log) log(summary);
    return res;
}

Manifest default_manifest() {
    Manifest m;

    Preset def;
    def.name = "default";
    def.kind = PresetKind::TrainEval;
    m.presets["default"] = def;

    Preset smoke;
    smoke.name = "overfit-smoke";
    smoke.kind = PresetKind::Overfit;
    smoke.cfg.train.epochs = 200;
    smoke.cfg.train.n_train = 8;
    smoke.cfg.train.n_val = 0;
    smoke.cfg.train.n_test = 0;
    smoke.cfg.sim.sigma_r = 0.0;
    smoke.cfg.sim.sigma_a = 0.0;
    smoke.cfg.sim.sigma_d = 0.0;
    smoke.cfg.sim.n_clutter = 0;
    smoke.cfg.sim.p_hard = 0.0;
    m.presets["overfit-smoke"] = smoke;

    Preset abl;
    abl.name = "ablation";
    abl.kind = PresetKind::Ablation;
    abl.cfg.train.n_train = 160;
    abl.cfg.train.n_val = 24;
    abl.cfg.train.n_test = 48;
    abl.cfg.train.epochs = 16;
    m.presets["ablation"] = abl;

    Preset sweep;
    sweep.name = "noise-sweep";
    sweep.kind = PresetKind::NoiseSweep;
    sweep.cfg.train.n_train = 160;
    sweep.cfg.train.n_val = 24;
    sweep.cfg.train.n_test = 48;
    sweep.cfg.train.epochs = 16;
    sweep.sweep_sigmas = {0.0, 3.0, 6.0};
    m.presets["noise-sweep"] = sweep;

    return m;
}

}  // namespace rofusion::bench
