#include "rofusion/training.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "rofusion/errors.hpp"
#include "rofusion/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace rofusion::train {

using nlohmann::json;

LossNodes compute_loss(ag::Tape& tape, const net::ForwardNodes& fwd,
                       const pipeline::FrameRows& rows, double alpha) {
    LossNodes out;
    const ag::NodeId ce_r =
        tape.softmax_cross_entropy(fwd.cls_r, rows.target_r_bin, rows.mask_r);
    const ag::NodeId ce_a =
        tape.softmax_cross_entropy(fwd.cls_a, rows.target_a_bin, rows.mask_a);
    const ag::NodeId sl1 = tape.smooth_l1(fwd.reg, rows.target_res, rows.mask_entries);
    out.total = tape.add(tape.add(ce_r, ce_a), tape.scale(sl1, alpha));
    out.ce_r = tape.value(ce_r).at(0, 0);
    out.ce_a = tape.value(ce_a).at(0, 0);
    out.reg = tape.value(sl1).at(0, 0);
    const bool any_r = std::any_of(rows.mask_r.begin(), rows.mask_r.end(),
                                   [](std::uint8_t m) { return m != 0; });
    const bool any_a = std::any_of(rows.mask_a.begin(), rows.mask_a.end(),
                                   [](std::uint8_t m) { return m != 0; });
    out.all_masked = !any_r && !any_a;
    return out;
}

std::optional<std::string> adam_step(net::Params& params,
                                     const std::map<std::string, ag::Tensor>& grads,
                                     AdamState& state, double lr, const AdamConfig& hyper) {
    for (const auto& [path, g] : grads) {
        for (double v : g.data) {
            if (!std::isfinite(v)) {
                return "adam_step: non-finite gradient in " + path + ", step rejected";
            }
        }
    }
    const long t = state.step + 1;
    const double bc1 = 1.0 - std::pow(hyper.beta1, t);
    const double bc2 = 1.0 - std::pow(hyper.beta2, t);
    for (auto& [path, p] : params) {
        const auto git = grads.find(path);
        if (git == grads.end()) continue;  // disconnected parameter: no update
        const ag::Tensor& g = git->second;
        if (!g.same_shape(p)) {
            throw DimensionError("adam_step: grad " + g.shape_str() + " vs param " +
                                 p.shape_str() + " for " + path);
        }
        auto mit = state.m.find(path);
        if (mit == state.m.end()) mit = state.m.emplace(path, ag::Tensor(p.rows, p.cols)).first;
        auto vit = state.v.find(path);
        if (vit == state.v.end()) vit = state.v.emplace(path, ag::Tensor(p.rows, p.cols)).first;
        ag::Tensor& m = mit->second;
        ag::Tensor& v = vit->second;
        for (std::size_t i = 0; i < p.size(); ++i) {
            m.data[i] = hyper.beta1 * m.data[i] + (1.0 - hyper.beta1) * g.data[i];
            v.data[i] = hyper.beta2 * v.data[i] + (1.0 - hyper.beta2) * g.data[i] * g.data[i];
            const double mhat = m.data[i] / bc1;
            const double vhat = v.data[i] / bc2;
            p.data[i] -= lr * mhat / (std::sqrt(vhat) + hyper.eps);
        }
    }
    state.step = t;
    return std::nullopt;
}

namespace {

constexpr char kMagic[8] = {'R', 'O', 'F', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), 4);
}

void write_record(std::ostream& out, const std::string& path, const ag::Tensor& t) {
    write_u32(out, static_cast<std::uint32_t>(path.size()));
    out.write(path.data(), static_cast<std::streamsize>(path.size()));
    write_u32(out, static_cast<std::uint32_t>(t.rows));
    write_u32(out, static_cast<std::uint32_t>(t.cols));
    std::vector<float> f(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) f[i] = static_cast<float>(t.data[i]);
    out.write(reinterpret_cast<const char*>(f.data()),
              static_cast<std::streamsize>(f.size() * sizeof(float)));
}

bool read_u32(std::istream& in, std::uint32_t* v) {
    in.read(reinterpret_cast<char*>(v), 4);
    return in.gcount() == 4;
}

void atomic_write(const std::string& path, const std::function<void(std::ostream&)>& writer) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp + " for writing");
        writer(out);
        if (!out) throw IoError("write failed for " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("rename " + tmp + " -> " + path + ": " + ec.message());
}

}  // namespace

void save_checkpoint(const std::string& path, const ExperimentConfig& cfg,
                     const net::Params& params, const AdamState* state,
                     const CheckpointMeta& meta) {
    json blob = json::parse(config_to_json_text(cfg));
    blob["meta"] = {{"epoch", meta.epoch},
                    {"val_loss", meta.val_loss},
                    {"seed", meta.seed},
                    {"adam_step", state ? state->step : 0}};
    const std::string blob_text = blob.dump();

    atomic_write(path, [&](std::ostream& out) {
        out.write(kMagic, 8);
        write_u32(out, kVersion);
        write_u32(out, static_cast<std::uint32_t>(blob_text.size()));
        out.write(blob_text.data(), static_cast<std::streamsize>(blob_text.size()));
        for (const auto& [p, t] : params) write_record(out, p, t);
        if (state) {
            for (const auto& [p, t] : state->m) write_record(out, "adam/m/" + p, t);
            for (const auto& [p, t] : state->v) write_record(out, "adam/v/" + p, t);
        }
    });
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("checkpoint: cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (in.gcount() != 8 || std::memcmp(magic, kMagic, 8) != 0) {
        throw IoError("checkpoint: bad magic in " + path);
    }
    std::uint32_t version = 0;
    if (!read_u32(in, &version)) throw IoError("checkpoint: truncated reading version");
    if (version != kVersion) {
        throw IoError("checkpoint: unsupported version " + std::to_string(version));
    }
    std::uint32_t blob_len = 0;
    if (!read_u32(in, &blob_len)) throw IoError("checkpoint: truncated reading config length");
    std::string blob_text(blob_len, '\0');
    in.read(blob_text.data(), blob_len);
    if (in.gcount() != static_cast<std::streamsize>(blob_len)) {
        throw IoError("checkpoint: truncated reading config blob");
    }

    Checkpoint ckpt;
    json blob;
    try {
        blob = json::parse(blob_text);
    } catch (const json::parse_error& e) {
        throw IoError(std::string("checkpoint: config blob is not valid JSON: ") + e.what());
    }
    if (!blob.contains("meta")) throw IoError("checkpoint: config blob missing meta");
    const json meta = blob["meta"];
    blob.erase("meta");
    ckpt.cfg = config_from_json_text(blob.dump());
    ckpt.meta.epoch = meta.value("epoch", 0);
    ckpt.meta.val_loss = meta.value("val_loss", 0.0);
    ckpt.meta.seed = meta.value("seed", std::uint64_t{0});
    ckpt.state.step = meta.value("adam_step", 0L);

    while (true) {
        std::uint32_t path_len = 0;
        in.read(reinterpret_cast<char*>(&path_len), 4);
        if (in.gcount() == 0) break;  // clean EOF at a record boundary
        if (in.gcount() != 4) throw IoError("checkpoint: truncated reading record path length");
        std::string rec_path(path_len, '\0');
        in.read(rec_path.data(), path_len);
        if (in.gcount() != static_cast<std::streamsize>(path_len)) {
            throw IoError("checkpoint: truncated reading record path");
        }
        std::uint32_t rows = 0, cols = 0;
        if (!read_u32(in, &rows) || !read_u32(in, &cols)) {
            throw IoError("checkpoint: truncated reading shape of " + rec_path);
        }
        std::vector<float> f(static_cast<std::size_t>(rows) * cols);
        in.read(reinterpret_cast<char*>(f.data()),
                static_cast<std::streamsize>(f.size() * sizeof(float)));
        if (in.gcount() != static_cast<std::streamsize>(f.size() * sizeof(float))) {
            throw IoError("checkpoint: truncated reading data of " + rec_path);
        }
        ag::Tensor t(static_cast<int>(rows), static_cast<int>(cols));
        for (std::size_t i = 0; i < f.size(); ++i) t.data[i] = static_cast<double>(f[i]);
        if (rec_path.rfind("adam/m/", 0) == 0) {
            ckpt.state.m.emplace(rec_path.substr(7), std::move(t));
            ckpt.has_state = true;
        } else if (rec_path.rfind("adam/v/", 0) == 0) {
            ckpt.state.v.emplace(rec_path.substr(7), std::move(t));
            ckpt.has_state = true;
        } else {
            ckpt.params.emplace(rec_path, std::move(t));
        }
    }

    // Layer set must match the stored architecture exactly.
    for (const std::string& p : net::layer_paths(ckpt.cfg.arch)) {
        if (!ckpt.params.count(p)) throw IoError("checkpoint: missing parameter " + p);
    }
    if (ckpt.params.size() != net::layer_paths(ckpt.cfg.arch).size()) {
        throw IoError("checkpoint: unexpected extra parameter records");
    }
    return ckpt;
}

std::string epoch_log_csv(const std::vector<EpochLogRow>& rows) {
    std::string out = "epoch,train_loss,val_loss,ce_r,ce_a,reg\n";
    char buf[192];
    for (const EpochLogRow& r : rows) {
        std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g,%.9g,%.9g\n", r.epoch, r.train_loss,
                      r.val_loss, r.ce_r, r.ce_a, r.reg);
        out += buf;
    }
    return out;
}

namespace {

// Stream ids for the training loop, derived from train.seed.
enum : std::uint64_t { kStreamShuffle = 101 };

double frame_loss(const pipeline::FrameRows& rows, const net::Params& params,
                  const ExperimentConfig& cfg) {
    ag::Tape tape;
    const auto fwd = net::forward(tape, rows.radar_feats, rows.image_feats, rows.group_ids,
                                  params, cfg.arch);
    const auto loss = compute_loss(tape, fwd, rows, cfg.train.alpha);
    return tape.value(loss.total).at(0, 0);
}

}  // namespace

TrainOutcome train(const ExperimentConfig& cfg, const ResumePoint* resume,
                   const std::function<void(const EpochLogRow&)>& on_epoch) {
    cfg.validate();
    const auto train_frames =
        pipeline::make_split(cfg, cfg.train.split_offset_train, cfg.train.n_train);
    const auto val_frames = pipeline::make_split(cfg, cfg.train.split_offset_val, cfg.train.n_val);
    return train_on(cfg, train_frames, val_frames, resume, on_epoch);
}

TrainOutcome train_on(const ExperimentConfig& cfg, const std::vector<Frame>& train_frames,
                      const std::vector<Frame>& val_frames, const ResumePoint* resume,
                      const std::function<void(const EpochLogRow&)>& on_epoch) {
    cfg.validate();

    std::vector<pipeline::FrameRows> train_rows;
    train_rows.reserve(train_frames.size());
    std::size_t total_rows = 0;
    for (const Frame& f : train_frames) {
        train_rows.push_back(pipeline::build_training_rows(f, cfg));
        total_rows += train_rows.back().rows();
    }
    if (total_rows == 0) {
        throw ConfigError("train: no valid candidate sets in the training split");
    }
    std::vector<pipeline::FrameRows> val_rows;
    val_rows.reserve(val_frames.size());
    for (const Frame& f : val_frames) val_rows.push_back(pipeline::build_training_rows(f, cfg));

    TrainOutcome out;
    net::Params params =
        resume ? resume->params : net::init_params(cfg.arch, cfg.train.seed);
    AdamState state = resume ? resume->state : AdamState{};
    const int first_epoch = resume ? resume->completed_epochs : 0;

    const CounterRng shuffle_root =
        CounterRng::from_seed(cfg.train.seed).derive(kStreamShuffle);

    out.best_val = std::numeric_limits<double>::infinity();
    for (int epoch = first_epoch; epoch < cfg.train.epochs; ++epoch) {
        std::vector<int> order(train_rows.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
        CounterRng rng = shuffle_root.derive(static_cast<std::uint64_t>(epoch));
        for (int i = static_cast<int>(order.size()) - 1; i > 0; --i) {
            std::swap(order[i], order[rng.uniform_int(0, i)]);
        }

        double loss_sum = 0.0, ce_r_sum = 0.0, ce_a_sum = 0.0, reg_sum = 0.0;
        int batches = 0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.train.batch_frames)) {
            std::vector<const pipeline::FrameRows*> parts;
            for (std::size_t i = start;
                 i < std::min(order.size(), start + cfg.train.batch_frames); ++i) {
                if (train_rows[order[i]].rows() > 0) parts.push_back(&train_rows[order[i]]);
            }
            if (parts.empty()) continue;
            const pipeline::FrameRows batch = pipeline::concat_rows(parts);

            ag::Tape tape;
            const auto fwd = net::forward(tape, batch.radar_feats, batch.image_feats,
                                          batch.group_ids, params, cfg.arch);
            const auto loss = compute_loss(tape, fwd, batch, cfg.train.alpha);
            if (loss.all_masked) continue;
            const auto grads = tape.backward(loss.total);
            std::map<std::string, ag::Tensor> param_grads;
            for (const auto& [path, leaf] : fwd.param_leaves) {
                param_grads.emplace(path, grads[leaf]);
            }
            if (const auto rejected =
                    adam_step(params, param_grads, state, cfg.train.lr, cfg.train.adam)) {
                ++out.rejected_batches;
                continue;
            }
            loss_sum += tape.value(loss.total).at(0, 0);
            ce_r_sum += loss.ce_r;
            ce_a_sum += loss.ce_a;
            reg_sum += loss.reg;
            ++batches;
        }

        double val_sum = 0.0;
        int val_count = 0;
        for (const auto& rows : val_rows) {
            if (rows.rows() == 0) continue;
            val_sum += frame_loss(rows, params, cfg);
            ++val_count;
        }

        EpochLogRow row;
        row.epoch = epoch + 1;
        row.train_loss = batches > 0 ? loss_sum / batches : 0.0;
        row.val_loss = val_count > 0 ? val_sum / val_count : 0.0;
        row.ce_r = batches > 0 ? ce_r_sum / batches : 0.0;
        row.ce_a = batches > 0 ? ce_a_sum / batches : 0.0;
        row.reg = batches > 0 ? reg_sum / batches : 0.0;
        out.log.push_back(row);
        if (on_epoch) on_epoch(row);

        const double val_for_best = val_count > 0 ? row.val_loss : row.train_loss;
        if (val_for_best < out.best_val) {
            out.best_val = val_for_best;
            out.best_epoch = row.epoch;
            out.best_params = params;
        }
    }

    out.last_params = std::move(params);
    out.last_state = std::move(state);
    if (out.best_params.empty()) {
        out.best_params = out.last_params;  // no epochs ran (resume at end)
        out.best_epoch = first_epoch;
    }
    return out;
}

}  // namespace rofusion::train
