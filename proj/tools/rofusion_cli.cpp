#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "rofusion/bench.hpp"
#include "rofusion/config.hpp"
#include "rofusion/errors.hpp"
#include "rofusion/frame_io.hpp"
#include "rofusion/pipeline.hpp"
#include "rofusion/training.hpp"

namespace {

using namespace rofusion;

// Exit codes: 0 success, 1 assertion/gradcheck failure, 2 usage or config
// error, 3 I/O error.
enum ExitCode { kOk = 0, kFail = 1, kUsage = 2, kIo = 3 };

int cmd_config(const std::string& out_path) {
    const std::string text = config_to_json_text(ExperimentConfig{});
    if (out_path.empty()) {
        std::cout << text;
    } else {
        io::write_text_atomic(out_path, text);
    }
    return kOk;
}

int cmd_simulate(const std::string& config_path, const std::string& out_path, int n_frames,
                 std::uint64_t seed) {
    const ExperimentConfig cfg = load_config(config_path);
    std::vector<Frame> frames;
    frames.reserve(n_frames);
    std::size_t total_points = 0, total_objects = 0;
    int n_easy = 0, n_hard = 0;
    for (int i = 0; i < n_frames; ++i) {
        Frame f = sim::generate_frame(cfg.sim, seed + i);
        f.frame_id = i;
        total_points += f.points.size();
        total_objects += f.objects.size();
        f.difficulty == Difficulty::Easy ? ++n_easy : ++n_hard;
        frames.push_back(std::move(f));
    }
    io::write_frames(out_path, frames);
    std::printf("wrote %d frames to %s\n", n_frames, out_path.c_str());
    std::printf("objects: %zu, points: %zu, difficulty: easy %d / hard %d\n", total_objects,
                total_points, n_easy, n_hard);
    return kOk;
}

int cmd_train(const std::string& config_path, const std::string& ckpt_path,
              const std::string& log_path, const std::string& resume_path,
              const std::string& last_ckpt_path) {
    const ExperimentConfig cfg = load_config(config_path);

    train::ResumePoint resume;
    const train::ResumePoint* resume_ptr = nullptr;
    if (!resume_path.empty()) {
        const auto ckpt = train::load_checkpoint(resume_path);
        if (!ckpt.has_state) {
            throw ConfigError("train --resume: checkpoint carries no optimizer state");
        }
        resume.params = ckpt.params;
        resume.state = ckpt.state;
        resume.completed_epochs = ckpt.meta.epoch;
        resume_ptr = &resume;
    }

    const auto outcome = train::train(cfg, resume_ptr, [](const train::EpochLogRow& row) {
        std::printf("epoch %3d  train %.6f  val %.6f  (ce_r %.4f ce_a %.4f reg %.6f)\n",
                    row.epoch, row.train_loss, row.val_loss, row.ce_r, row.ce_a, row.reg);
        std::fflush(stdout);
    });

    train::CheckpointMeta meta;
    meta.epoch = outcome.best_epoch;
    meta.val_loss = outcome.best_val;
    meta.seed = cfg.train.seed;
    train::save_checkpoint(ckpt_path, cfg, outcome.best_params, nullptr, meta);
    if (!last_ckpt_path.empty()) {
        train::CheckpointMeta last_meta;
        last_meta.epoch = cfg.train.epochs;
        last_meta.val_loss = outcome.log.empty() ? 0.0 : outcome.log.back().val_loss;
        last_meta.seed = cfg.train.seed;
        train::save_checkpoint(last_ckpt_path, cfg, outcome.last_params, &outcome.last_state,
                               last_meta);
    }
    if (!log_path.empty()) {
        io::write_text_atomic(log_path, train::epoch_log_csv(outcome.log));
    }
    std::printf("best epoch %d, val loss %.6f; checkpoint: %s\n", outcome.best_epoch,
                outcome.best_val, ckpt_path.c_str());
    if (outcome.rejected_batches > 0) {
        std::printf("warning: %d batches rejected for non-finite gradients\n",
                    outcome.rejected_batches);
    }
    return kOk;
}

int cmd_eval(const std::string& ckpt_path, const std::string& frames_path,
             const std::string& box_source, const std::string& origin,
             const std::string& report_prefix, const std::string& pred_path,
             const std::string& config_path) {
    const auto ckpt = train::load_checkpoint(ckpt_path);
    ExperimentConfig cfg = ckpt.cfg;
    if (!config_path.empty()) {
        const ExperimentConfig file_cfg = load_config(config_path);
        const std::string a = config_to_json_text(file_cfg);
        const std::string b = config_to_json_text(cfg);
        if (a != b) {
            std::fprintf(stderr,
                         "eval: --config disagrees with the checkpoint's embedded config.\n"
                         "--- config file ---\n%s--- checkpoint ---\n%s",
                         a.c_str(), b.c_str());
            return kUsage;
        }
    }
    if (!box_source.empty()) cfg.eval.box_source = box_source_from_string(box_source);
    if (!origin.empty()) cfg.eval.origin_mode = origin_mode_from_string(origin);

    const auto frames = io::read_frames(frames_path, cfg.sim);
    std::vector<eval::FrameDetections> dets;
    const auto report = pipeline::evaluate_frames(frames, ckpt.params, cfg, &dets);

    io::write_text_atomic(report_prefix + ".csv", eval::report_csv(report));
    io::write_text_atomic(report_prefix + ".txt", eval::report_table(report));
    if (!pred_path.empty()) {
        io::write_text_atomic(pred_path, eval::predictions_csv(dets));
    }
    std::printf("%s", eval::report_table(report).c_str());
    return kOk;
}

// Registered gradient checks: every tape op plus the composite network.
struct GradCase {
    std::string name;
    ag::GradCheckReport report;
};

std::vector<GradCase> run_gradcheck_cases(const net::ArchConfig& arch) {
    std::vector<GradCase> cases;
    CounterRng rng = CounterRng::from_seed(2024);
    const auto rand_tensor = [&rng](int r, int c) {
        ag::Tensor t(r, c);
        for (double& v : t.data) v = rng.uniform(-2.0, 2.0);
        return t;
    };
    // Scalar wrapper so every op feeds a 1x1 loss: sum of all entries via two
    // chained linears with constant ones (x * ones collapses columns, then
    // ones * col collapses rows).
    const auto reduce_sum = [](ag::Tape& tape, ag::NodeId x) {
        const ag::Tensor& v = tape.value(x);
        ag::Tensor ones_col(v.cols, 1);
        for (double& e : ones_col.data) e = 1.0;
        const ag::NodeId col = tape.linear(x, tape.leaf(ones_col), tape.leaf(ag::Tensor(1, 1)));
        if (v.rows == 1) return col;
        ag::Tensor ones_row(1, v.rows);
        for (double& e : ones_row.data) e = 1.0;
        return tape.linear(tape.leaf(ones_row), col, tape.leaf(ag::Tensor(1, 1)));
    };

    {
        GradCase c{"linear_forward", {}};
        c.report = ag::grad_check(
            [&](ag::Tape& t, const std::vector<ag::NodeId>& in) {
                return reduce_sum(t, t.linear(in[0], in[1], in[2]));
            },
            {rand_tensor(3, 4), rand_tensor(4, 5), rand_tensor(1, 5)});
        cases.push_back(c);
    }
    {
        GradCase c{"relu", {}};
        c.report = ag::grad_check(
            [&](ag::Tape& t, const std::vector<ag::NodeId>& in) {
                return reduce_sum(t, t.relu(in[0]));
            },
            {rand_tensor(3, 4)});
        cases.push_back(c);
    }
    {
        GradCase c{"concat_cols", {}};
        c.report = ag::grad_check(
            [&](ag::Tape& t, const std::vector<ag::NodeId>& in) {
                return reduce_sum(t, t.concat_cols(in[0], in[1]));
            },
            {rand_tensor(3, 2), rand_tensor(3, 3)});
        cases.push_back(c);
    }
    {
        GradCase c{"maxpool_rows", {}};
        c.report = ag::grad_check(
            [&](ag::Tape& t, const std::vector<ag::NodeId>& in) {
                return reduce_sum(t, t.maxpool_rows(in[0]));
            },
            {rand_tensor(4, 3)});
        cases.push_back(c);
    }
    {
        GradCase c{"segment_maxpool", {}};
        const std::vector<int> groups = {0, 1, 0, 1, 2};
        c.report = ag::grad_check(
            [&, groups](ag::Tape& t, const std::vector<ag::NodeId>& in) {
                return reduce_sum(t, t.segment_maxpool(in[0], groups));
            },
            {rand_tensor(5, 3)});
        cases.push_back(c);
    }
    {
        GradCase c{"softmax_cross_entropy", {}};
        const std::vector<int> targets = {1, 0, 3};
        const std::vector<std::uint8_t> mask = {1, 0, 1};
        c.report = ag::grad_check(
            [=](ag::Tape& t, const std::vector<ag::NodeId>& in) {
                return t.softmax_cross_entropy(in[0], targets, mask);
            },
            {rand_tensor(3, 4)});
        cases.push_back(c);
    }
    {
        GradCase c{"smooth_l1", {}};
        const ag::Tensor target = rand_tensor(4, 2);
        const std::vector<std::uint8_t> mask = {1, 1, 0, 1, 1, 0, 1, 1};
        c.report = ag::grad_check(
            [=](ag::Tape& t, const std::vector<ag::NodeId>& in) {
                return t.smooth_l1(in[0], target, mask);
            },
            {rand_tensor(4, 2)});
        cases.push_back(c);
    }
    {
        GradCase c{"add", {}};
        c.report = ag::grad_check(
            [&](ag::Tape& t, const std::vector<ag::NodeId>& in) {
                return reduce_sum(t, t.add(in[0], in[1]));
            },
            {rand_tensor(2, 3), rand_tensor(2, 3)});
        cases.push_back(c);
    }
    {
        GradCase c{"scale", {}};
        c.report = ag::grad_check(
            [&](ag::Tape& t, const std::vector<ag::NodeId>& in) {
                return reduce_sum(t, t.scale(in[0], -1.7));
            },
            {rand_tensor(2, 3)});
        cases.push_back(c);
    }
    {
        // Composite: full fusion forward plus the combined loss on a small
        // 5-point, 2-group instance; every parameter and feature is an input.
        GradCase c{"fusion_network", {}};
        const net::Params params = net::init_params(arch, 7);
        const std::vector<int> groups = {0, 0, 1, 1, 1};
        const std::vector<int> t_r = {2, 5, 7, 0, 4};
        const std::vector<int> t_a = {0, 1, 4, 2, 3};
        const std::vector<std::uint8_t> m_r = {1, 1, 0, 1, 1};
        const std::vector<std::uint8_t> m_a = {1, 0, 1, 1, 1};
        const std::vector<std::uint8_t> m_e = {1, 1, 1, 0, 0, 1, 1, 1, 1, 1};
        ag::Tensor res = rand_tensor(5, 2);
        for (double& v : res.data) v *= 0.2;

        std::vector<ag::Tensor> inputs;
        std::vector<std::string> order;
        for (const auto& [path, tensor] : params) {
            order.push_back(path);
            inputs.push_back(tensor);
        }
        inputs.push_back(rand_tensor(5, arch.c_radar_in));
        inputs.push_back(rand_tensor(5, arch.c_image_in));

        c.report = ag::grad_check(
            [&, groups, t_r, t_a, m_r, m_a, m_e, res](ag::Tape& t,
                                                      const std::vector<ag::NodeId>& in) {
                const auto fwd = net::forward_with_leaves(t, in, order, in[order.size()],
                                                          in[order.size() + 1], groups, arch);
                const ag::NodeId ce_r = t.softmax_cross_entropy(fwd.cls_r, t_r, m_r);
                const ag::NodeId ce_a = t.softmax_cross_entropy(fwd.cls_a, t_a, m_a);
                const ag::NodeId sl = t.smooth_l1(fwd.reg, res, m_e);
                return t.add(t.add(ce_r, ce_a), t.scale(sl, 10.0));
            },
            inputs, 1e-5, 1e-3);
        cases.push_back(c);
    }
    return cases;
}

int cmd_gradcheck(const std::string& preset, const std::string& inject_op) {
    const net::ArchConfig arch =
        preset == "default" ? net::ArchConfig{} : net::ArchConfig::small_preset();
    auto cases = run_gradcheck_cases(arch);
    // Self-test hook: force one op's reported error above threshold to prove
    // the harness fails loudly.
    if (!inject_op.empty()) {
        bool found = false;
        for (auto& c : cases) {
            if (c.name == inject_op) {
                c.report.max_rel_err += 1.0;
                found = true;
            }
        }
        if (!found) {
            std::fprintf(stderr, "gradcheck: unknown op '%s' for --inject-bad-grad\n",
                         inject_op.c_str());
            return kUsage;
        }
    }
    constexpr double kTol = 1e-5;
    bool all_ok = true;
    for (const auto& c : cases) {
        const bool ok = c.report.max_rel_err < kTol;
        all_ok = all_ok && ok;
        std::printf("%-22s max_rel_err %.3e  (%d coords, %d kink-skipped)  %s\n", c.name.c_str(),
                    c.report.max_rel_err, c.report.checked, c.report.skipped_kinks,
                    ok ? "PASS" : "FAIL");
        if (!ok) std::fprintf(stderr, "gradcheck: op '%s' failed\n", c.name.c_str());
    }
    return all_ok ? kOk : kFail;
}

int cmd_ablate(const std::string& config_path, const std::string& out_dir) {
    const ExperimentConfig cfg = load_config(config_path);
    const auto result = bench::run_ablation(cfg, out_dir, [](const std::string& msg) {
        std::printf("%s\n", msg.c_str());
        std::fflush(stdout);
    });
    io::write_text_atomic(out_dir + "/ablation.csv", bench::ablation_csv(result));
    io::write_text_atomic(out_dir + "/ablation.txt", bench::ablation_table(result));
    std::printf("%s", bench::ablation_table(result).c_str());
    std::printf("frame files hash: %016" PRIx64 "\n", result.frames_hash);
    return kOk;
}

int cmd_bench(const std::string& manifest_path, const std::string& preset_name,
              const std::string& out_dir) {
    const auto manifest = bench::load_manifest(manifest_path);
    const auto it = manifest.presets.find(preset_name);
    if (it == manifest.presets.end()) {
        std::fprintf(stderr, "bench: preset '%s' not in manifest\n", preset_name.c_str());
        return kUsage;
    }
    const auto result = bench::run_benchmark(it->second, out_dir, [](const std::string& msg) {
        std::printf("%s", msg.c_str());
        std::fflush(stdout);
    });
    if (!result.pass) {
        for (const auto& f : result.failures) {
            std::fprintf(stderr, "bench: %s\n", f.c_str());
        }
        return kFail;
    }
    return kOk;
}

int cmd_write_manifest(const std::string& path) {
    io::write_text_atomic(path, bench::manifest_to_json_text(bench::default_manifest()));
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ROFusion-style radar-optical detection pipeline on synthetic scenes"};
    app.require_subcommand(1);

    std::string config_path, out_path, ckpt_path, frames_path, log_path, report_prefix;
    std::string resume_path, last_ckpt_path, pred_path, box_source, origin, preset = "small";
    std::string inject_op, manifest_path, preset_name, out_dir, eval_config_path;
    int n_frames = 0;
    std::uint64_t seed = 1;

    auto* c_config = app.add_subcommand("config", "emit the default experiment config");
    c_config->add_option("--out", out_path, "output path (stdout when omitted)");

    auto* c_sim = app.add_subcommand("simulate", "generate a frame file");
    c_sim->add_option("--config", config_path, "experiment config")->required();
    c_sim->add_option("--out", out_path, "output frame file")->required();
    c_sim->add_option("--frames", n_frames, "number of frames")->required();
    c_sim->add_option("--seed", seed, "base seed (frame i uses seed+i)")->required();

    auto* c_train = app.add_subcommand("train", "train the fusion network");
    c_train->add_option("--config", config_path, "experiment config")->required();
    c_train->add_option("--out-ckpt", ckpt_path, "best-validation checkpoint")->required();
    c_train->add_option("--log", log_path, "epoch log CSV");
    c_train->add_option("--resume", resume_path, "continue from a last-state checkpoint");
    c_train->add_option("--last-ckpt", last_ckpt_path,
                        "also save the final epoch state (with optimizer moments)");

    auto* c_eval = app.add_subcommand("eval", "evaluate a checkpoint on a frame file");
    c_eval->add_option("--ckpt", ckpt_path, "checkpoint")->required();
    c_eval->add_option("--frames", frames_path, "frame file")->required();
    c_eval->add_option("--box-source", box_source, "oracle|jittered (default from checkpoint)");
    c_eval->add_option("--origin", origin, "gt|hLC (default from checkpoint)");
    c_eval->add_option("--report", report_prefix, "report path prefix (.csv/.txt)")->required();
    c_eval->add_option("--pred", pred_path, "per-detection predictions CSV");
    c_eval->add_option("--config", eval_config_path,
                       "optional config cross-check against the checkpoint");

    auto* c_grad = app.add_subcommand("gradcheck", "finite-difference check of every op");
    c_grad->add_option("--arch-preset", preset, "small|default")
        ->check(CLI::IsMember({"small", "default"}));
    c_grad->add_option("--inject-bad-grad", inject_op, "self-test: force the named op to fail");

    auto* c_abl = app.add_subcommand("ablate", "train/evaluate w/o LC, radar-only, full");
    c_abl->add_option("--config", config_path, "experiment config")->required();
    c_abl->add_option("--out", out_dir, "output directory")->required();

    auto* c_bench = app.add_subcommand("bench", "run a benchmark preset against the manifest");
    c_bench->add_option("--manifest", manifest_path, "benchmark manifest JSON");
    c_bench->add_option("--preset", preset_name, "preset name");
    c_bench->add_option("--out", out_dir, "report bundle directory");
    c_bench->add_option("--write-manifest", out_path,
                        "write the built-in preset skeleton and exit");

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_config->parsed()) return cmd_config(out_path);
        if (c_sim->parsed()) return cmd_simulate(config_path, out_path, n_frames, seed);
        if (c_train->parsed()) {
            return cmd_train(config_path, ckpt_path, log_path, resume_path, last_ckpt_path);
        }
        if (c_eval->parsed()) {
            return cmd_eval(ckpt_path, frames_path, box_source, origin, report_prefix, pred_path,
                            eval_config_path);
        }
        if (c_grad->parsed()) return cmd_gradcheck(preset, inject_op);
        if (c_abl->parsed()) return cmd_ablate(config_path, out_dir);
        if (c_bench->parsed()) {
            if (!out_path.empty()) return cmd_write_manifest(out_path);
            if (manifest_path.empty() || preset_name.empty() || out_dir.empty()) {
                std::fprintf(stderr, "bench: need --manifest, --preset and --out\n");
                return kUsage;
            }
            return cmd_bench(manifest_path, preset_name, out_dir);
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kUsage;
    } catch (const IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return kIo;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kFail;
    }
    return kUsage;
}
