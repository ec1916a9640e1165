#pragma once

#include <cstdint>
#include <vector>

#include "rofusion/config.hpp"
#include "rofusion/evaluation.hpp"
#include "rofusion/fusion_net.hpp"

namespace rofusion::pipeline {

// Training-ready rows for one frame: associated candidates classified against
// their ground-truth object, background dropped, targets encoded, features
// sampled. Groups are candidate sets (one per object box).
struct FrameRows {
    ag::Tensor radar_feats;  // N x c_radar
    ag::Tensor image_feats;  // N x c_image (zeros when image branch disabled)
    std::vector<int> group_ids;
    std::vector<int> target_r_bin;
    std::vector<int> target_a_bin;
    ag::Tensor target_res;  // N x 2 (meters, degrees)
    std::vector<std::uint8_t> mask_r;        // per-row range-axis mask
    std::vector<std::uint8_t> mask_a;        // per-row azimuth-axis mask
    std::vector<std::uint8_t> mask_entries;  // N*2 interleaved [r, a]
    int n_groups = 0;

    int rows() const { return radar_feats.rows; }
};

FrameRows build_training_rows(const Frame& frame, const ExperimentConfig& cfg);

// Concatenation with group-id offsetting; empty inputs allowed.
FrameRows concat_rows(const std::vector<const FrameRows*>& parts);

std::vector<Frame> make_split(const ExperimentConfig& cfg, std::uint64_t offset, int count);

// Full detection path for one frame: associate -> filter by origin -> predict
// -> decode -> aggregate. Local mode keeps only points whose offset to the
// origin (ground truth or heuristic) fits the lattice on both axes; global
// mode keeps every candidate.
std::vector<Detection> detect_frame(const Frame& frame, const net::Params& params,
                                    const ExperimentConfig& cfg);

eval::FrameDetections frame_detections(const Frame& frame, const net::Params& params,
                                       const ExperimentConfig& cfg);

eval::EvalReport evaluate_frames(const std::vector<Frame>& frames, const net::Params& params,
                                 const ExperimentConfig& cfg,
                                 std::vector<eval::FrameDetections>* out_dets = nullptr);

}  // namespace rofusion::pipeline
