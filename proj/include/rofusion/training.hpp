#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rofusion/config.hpp"
#include "rofusion/fusion_net.hpp"
#include "rofusion/pipeline.hpp"

namespace rofusion::train {

struct LossNodes {
    ag::NodeId total = -1;
    double ce_r = 0.0;  // component values, for logging
    double ce_a = 0.0;
    double reg = 0.0;
    bool all_masked = false;  // nothing supervised on either axis
};

// L = CE(range bins) + CE(azimuth bins) + alpha * SmoothL1(residuals), each
// term a mean over its unmasked rows/entries.
LossNodes compute_loss(ag::Tape& tape, const net::ForwardNodes& fwd,
                       const pipeline::FrameRows& rows, double alpha);

struct AdamState {
    std::map<std::string, ag::Tensor> m;
    std::map<std::string, ag::Tensor> v;
    long step = 0;
};

// Standard Adam with bias correction. A non-finite gradient rejects the whole
// step and returns the diagnostic instead of applying anything.
std::optional<std::string> adam_step(net::Params& params,
                                     const std::map<std::string, ag::Tensor>& grads,
                                     AdamState& state, double lr, const AdamConfig& hyper);

struct CheckpointMeta {
    int epoch = 0;
    double val_loss = 0.0;
    std::uint64_t seed = 0;
};

struct Checkpoint {
    ExperimentConfig cfg;
    net::Params params;
    AdamState state;   // empty when the file carries no optimizer arrays
    bool has_state = false;
    CheckpointMeta meta;
};

// Binary layout: 8-byte magic "ROFCKPT1", u32 version, u32-length-prefixed
// JSON blob (config + metadata), then one record per array: u32-length path,
// u32 rows, u32 cols, row-major little-endian float32. Optimizer moments ride
// along as "adam/m/<path>" and "adam/v/<path>" records so training resumes
// reproduce an uninterrupted run within 32-bit rounding.
void save_checkpoint(const std::string& path, const ExperimentConfig& cfg,
                     const net::Params& params, const AdamState* state,
                     const CheckpointMeta& meta);
Checkpoint load_checkpoint(const std::string& path);

struct EpochLogRow {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
    double ce_r = 0.0;
    double ce_a = 0.0;
    double reg = 0.0;
};

std::string epoch_log_csv(const std::vector<EpochLogRow>& rows);

struct TrainOutcome {
    net::Params best_params;  // lowest validation loss
    int best_epoch = 0;
    double best_val = 0.0;
    net::Params last_params;  // state after the final epoch, for resuming
    AdamState last_state;
    std::vector<EpochLogRow> log;
    int rejected_batches = 0;
};

// Deterministic end to end: datasets come from the split seed offsets, epoch
// shuffles from derived streams, and all arithmetic is fixed-order.
// resume, when given, supplies initial params/optimizer state and the number
// of epochs already completed.
struct ResumePoint {
    net::Params params;
    AdamState state;
    int completed_epochs = 0;
};

TrainOutcome train(const ExperimentConfig& cfg, const ResumePoint* resume = nullptr,
                   const std::function<void(const EpochLogRow&)>& on_epoch = nullptr);

// Same loop over caller-supplied frames (the ablation harness feeds every
// variant the same frame files).
TrainOutcome train_on(const ExperimentConfig& cfg, const std::vector<Frame>& train_frames,
                      const std::vector<Frame>& val_frames, const ResumePoint* resume = nullptr,
                      const std::function<void(const EpochLogRow&)>& on_epoch = nullptr);

}  // namespace rofusion::train
