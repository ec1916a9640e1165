#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rofusion/association.hpp"
#include "rofusion/tensor.hpp"
#include "rofusion/types.hpp"

namespace rofusion::net {

// Head output ordering is fixed as [cls_r_out range logits | cls_a_out
// azimuth logits | reg]; the checkpoint header records the widths.
struct ArchConfig {
    int c_radar_in = 32;
    int c_image_in = 32;
    std::vector<int> branch_dims{64, 128};
    std::vector<int> fused_dims{256};
    std::vector<int> head_dims{128};
    int cls_r_out = 11;
    int cls_a_out = 5;
    int reg_out = 2;

    int cls_out() const { return cls_r_out + cls_a_out; }
    void validate() const;

    // Tiny widths for gradient checking and unit tests.
    static ArchConfig small_preset();
};

// Named weight matrices and bias vectors, keyed by layer path. std::map so
// iteration order (and thus optimizer order) is stable.
using Params = std::map<std::string, ag::Tensor>;

// Layer paths in checkpoint order: branch_radar/<i>/{W,b},
// branch_image/<i>/{W,b}, fused/<i>/{W,b}, head/<i>/{W,b},
// head/cls_r/{W,b}, head/cls_a/{W,b}, head/reg/{W,b}.
std::vector<std::string> layer_paths(const ArchConfig& arch);

// Glorot-uniform weights, zero biases. Each layer draws from an RNG stream
// keyed by (seed, layer path), so the result is independent of construction
// order.
Params init_params(const ArchConfig& arch, std::uint64_t seed);

struct ForwardNodes {
    ag::NodeId cls_r = -1;  // N x cls_r_out
    ag::NodeId cls_a = -1;  // N x cls_a_out
    ag::NodeId reg = -1;    // N x reg_out
    ag::NodeId cls16 = -1;  // N x cls_out(), range-first concat
    std::map<std::string, ag::NodeId> param_leaves;
};

// Hybrid point-wise fusion: shared per-point MLP branches, low/high-scale
// concatenation, per-group max-pooled global feature broadcast back to the
// group, then the detection heads. group_ids picks the pooling group per row.
ForwardNodes forward(ag::Tape& tape, const ag::Tensor& radar_feats, const ag::Tensor& image_feats,
                     const std::vector<int>& group_ids, const Params& params,
                     const ArchConfig& arch);

// Same graph over leaves already on the tape; param_paths[i] names
// param_leaves[i]. Used by gradient checks, where the parameters themselves
// are the differentiated inputs.
ForwardNodes forward_with_leaves(ag::Tape& tape, const std::vector<ag::NodeId>& param_leaves,
                                 const std::vector<std::string>& param_paths,
                                 ag::NodeId radar_leaf, ag::NodeId image_leaf,
                                 const std::vector<int>& group_ids, const ArchConfig& arch);

struct PointPrediction {
    std::vector<double> prob_r;  // softmax over range bins
    std::vector<double> prob_a;  // softmax over azimuth bins
    int r_bin = 0;
    int az_bin = 0;
    double res_r = 0.0;
    double res_a = 0.0;
    double confidence = 0.0;  // max prob_r * max prob_a
};

// Looks up the frame's feature fields at each candidate point, runs the
// network as one group, and softmaxes the two logit blocks.
std::vector<PointPrediction> predict_points(const Frame& frame, const assoc::CandidateSet& cands,
                                            const Params& params, const ArchConfig& arch);

// Same, for externally assembled feature rows (used by the batched pipeline).
std::vector<PointPrediction> predict_rows(const ag::Tensor& radar_feats,
                                          const ag::Tensor& image_feats,
                                          const std::vector<int>& group_ids, const Params& params,
                                          const ArchConfig& arch);

}  // namespace rofusion::net
