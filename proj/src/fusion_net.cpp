#include "rofusion/fusion_net.hpp"

#include <cmath>

#include "rofusion/errors.hpp"
#include "rofusion/rng.hpp"

namespace rofusion::net {

void ArchConfig::validate() const {
    if (c_radar_in < 1) throw ConfigError("arch.c_radar_in: must be >= 1");
    if (c_image_in < 1) throw ConfigError("arch.c_image_in: must be >= 1");
    if (branch_dims.empty()) throw ConfigError("arch.branch_dims: need at least one layer");
    if (fused_dims.empty()) throw ConfigError("arch.fused_dims: need at least one layer");
    for (int w : branch_dims)
        if (w < 1) throw ConfigError("arch.branch_dims: widths must be >= 1");
    for (int w : fused_dims)
        if (w < 1) throw ConfigError("arch.fused_dims: widths must be >= 1");
    for (int w : head_dims)
        if (w < 1) throw ConfigError("arch.head_dims: widths must be >= 1");
    if (cls_r_out < 1) throw ConfigError("arch.cls_r_out: must be >= 1");
    if (cls_a_out < 1) throw ConfigError("arch.cls_a_out: must be >= 1");
    if (reg_out < 1) throw ConfigError("arch.reg_out: must be >= 1");
}

ArchConfig ArchConfig::small_preset() {
    ArchConfig a;
    a.c_radar_in = 6;
    a.c_image_in = 6;
    a.branch_dims = {8, 10};
    a.fused_dims = {12};
    a.head_dims = {8};
    return a;
}

namespace {

struct LayerShape {
    std::string path;
    int in = 0, out = 0;
};

std::vector<LayerShape> layer_shapes(const ArchConfig& arch) {
    std::vector<LayerShape> shapes;
    auto stack = [&shapes](const std::string& prefix, int in, const std::vector<int>& dims) {
        for (std::size_t i = 0; i < dims.size(); ++i) {
            shapes.push_back({prefix + "/" + std::to_string(i), in, dims[i]});
            in = dims[i];
        }
        return in;
    };
    stack("branch_radar", arch.c_radar_in, arch.branch_dims);
    stack("branch_image", arch.c_image_in, arch.branch_dims);
    const int high = 2 * arch.branch_dims.back();
    const int fused = stack("fused", high, arch.fused_dims);
    const int low = 2 * arch.branch_dims.front();
    const int hybrid = low + fused + fused;
    const int head = stack("head", hybrid, arch.head_dims);
    shapes.push_back({"head/cls_r", head, arch.cls_r_out});
    shapes.push_back({"head/cls_a", head, arch.cls_a_out});
    shapes.push_back({"head/reg", head, arch.reg_out});
    return shapes;
}

}  // namespace

std::vector<std::string> layer_paths(const ArchConfig& arch) {
    std::vector<std::string> out;
    for (const auto& s : layer_shapes(arch)) {
        out.push_back(s.path + "/W");
        out.push_back(s.path + "/b");
    }
    return out;
}

Params init_params(const ArchConfig& arch, std::uint64_t seed) {
    arch.validate();
    const CounterRng root = CounterRng::from_seed(seed);
    Params params;
    for (const auto& s : layer_shapes(arch)) {
        CounterRng rng = root.derive(fnv1a64(s.path.data(), s.path.size()));
        const double bound = std::sqrt(6.0 / (s.in + s.out));
        ag::Tensor w(s.in, s.out);
        for (double& v : w.data) v = rng.uniform(-bound, bound);
        params.emplace(s.path + "/W", std::move(w));
        params.emplace(s.path + "/b", ag::Tensor(1, s.out));
    }
    return params;
}

namespace {

using ParamLookup = std::function<ag::NodeId(const std::string&)>;

ForwardNodes forward_impl(ag::Tape& tape, ag::NodeId x_r, ag::NodeId x_i,
                          const std::vector<int>& group_ids, const ParamLookup& leaf,
                          const ArchConfig& arch) {
    const ag::Tensor& radar_feats = tape.value(x_r);
    const ag::Tensor& image_feats = tape.value(x_i);
    if (radar_feats.rows < 1) {
        throw DimensionError("forward: need at least one point");
    }
    if (radar_feats.rows != image_feats.rows ||
        radar_feats.rows != static_cast<int>(group_ids.size())) {
        throw DimensionError("forward: row mismatch (radar " + radar_feats.shape_str() +
                             ", image " + image_feats.shape_str() + ", groups " +
                             std::to_string(group_ids.size()) + ")");
    }
    if (radar_feats.cols != arch.c_radar_in || image_feats.cols != arch.c_image_in) {
        throw DimensionError("forward: channel mismatch (radar " + radar_feats.shape_str() +
                             " vs " + std::to_string(arch.c_radar_in) + ", image " +
                             image_feats.shape_str() + " vs " + std::to_string(arch.c_image_in) +
                             ")");
    }

    ForwardNodes out;
    auto mlp = [&](const std::string& prefix, ag::NodeId x, std::size_t n_layers,
                   std::vector<ag::NodeId>* scales) {
        for (std::size_t i = 0; i < n_layers; ++i) {
            const std::string p = prefix + "/" + std::to_string(i);
            x = tape.relu(tape.linear(x, leaf(p + "/W"), leaf(p + "/b")));
            if (scales) scales->push_back(x);
        }
        return x;
    };

    std::vector<ag::NodeId> radar_scales, image_scales;
    mlp("branch_radar", x_r, arch.branch_dims.size(), &radar_scales);
    mlp("branch_image", x_i, arch.branch_dims.size(), &image_scales);

    const ag::NodeId low = tape.concat_cols(radar_scales.front(), image_scales.front());
    const ag::NodeId high = tape.concat_cols(radar_scales.back(), image_scales.back());
    const ag::NodeId fused = mlp("fused", high, arch.fused_dims.size(), nullptr);
    const ag::NodeId global = tape.segment_maxpool(fused, group_ids);
    const ag::NodeId hybrid = tape.concat_cols(low, tape.concat_cols(fused, global));
    const ag::NodeId head = mlp("head", hybrid, arch.head_dims.size(), nullptr);

    out.cls_r = tape.linear(head, leaf("head/cls_r/W"), leaf("head/cls_r/b"));
    out.cls_a = tape.linear(head, leaf("head/cls_a/W"), leaf("head/cls_a/b"));
    out.reg = tape.linear(head, leaf("head/reg/W"), leaf("head/reg/b"));
    out.cls16 = tape.concat_cols(out.cls_r, out.cls_a);
    return out;
}

}  // namespace

ForwardNodes forward(ag::Tape& tape, const ag::Tensor& radar_feats, const ag::Tensor& image_feats,
                     const std::vector<int>& group_ids, const Params& params,
                     const ArchConfig& arch) {
    std::map<std::string, ag::NodeId> leaves;
    const ag::NodeId x_r = tape.leaf(radar_feats);
    const ag::NodeId x_i = tape.leaf(image_feats);
    auto lookup = [&](const std::string& path) {
        const auto cached = leaves.find(path);
        if (cached != leaves.end()) return cached->second;
        const auto it = params.find(path);
        if (it == params.end()) throw ConfigError("forward: missing parameter " + path);
        const ag::NodeId id = tape.leaf(it->second);
        leaves.emplace(path, id);
        return id;
    };
    ForwardNodes out = forward_impl(tape, x_r, x_i, group_ids, lookup, arch);
    out.param_leaves = std::move(leaves);
    return out;
}

ForwardNodes forward_with_leaves(ag::Tape& tape, const std::vector<ag::NodeId>& param_leaves,
                                 const std::vector<std::string>& param_paths,
                                 ag::NodeId radar_leaf, ag::NodeId image_leaf,
                                 const std::vector<int>& group_ids, const ArchConfig& arch) {
    if (param_leaves.size() < param_paths.size()) {
        throw DimensionError("forward_with_leaves: fewer leaves than paths");
    }
    std::map<std::string, ag::NodeId> leaves;
    for (std::size_t i = 0; i < param_paths.size(); ++i) {
        leaves.emplace(param_paths[i], param_leaves[i]);
    }
    auto lookup = [&](const std::string& path) {
        const auto it = leaves.find(path);
        if (it == leaves.end()) throw ConfigError("forward_with_leaves: missing leaf " + path);
        return it->second;
    };
    ForwardNodes out = forward_impl(tape, radar_leaf, image_leaf, group_ids, lookup, arch);
    out.param_leaves = std::move(leaves);
    return out;
}

namespace {

void softmax_row(const ag::Tensor& logits, int row, std::vector<double>* out) {
    out->resize(logits.cols);
    double m = logits.at(row, 0);
    for (int c = 1; c < logits.cols; ++c) m = std::max(m, logits.at(row, c));
    double z = 0.0;
    for (int c = 0; c < logits.cols; ++c) z += std::exp(logits.at(row, c) - m);
    for (int c = 0; c < logits.cols; ++c) (*out)[c] = std::exp(logits.at(row, c) - m) / z;
}

}  // namespace

std::vector<PointPrediction> predict_rows(const ag::Tensor& radar_feats,
                                          const ag::Tensor& image_feats,
                                          const std::vector<int>& group_ids, const Params& params,
                                          const ArchConfig& arch) {
    ag::Tape tape;
    const ForwardNodes nodes = forward(tape, radar_feats, image_feats, group_ids, params, arch);
    const ag::Tensor& cls_r = tape.value(nodes.cls_r);
    const ag::Tensor& cls_a = tape.value(nodes.cls_a);
    const ag::Tensor& reg = tape.value(nodes.reg);

    std::vector<PointPrediction> preds(radar_feats.rows);
    for (int n = 0; n < radar_feats.rows; ++n) {
        PointPrediction& p = preds[n];
        softmax_row(cls_r, n, &p.prob_r);
        softmax_row(cls_a, n, &p.prob_a);
        double best_r = 0.0, best_a = 0.0;
        for (int c = 0; c < cls_r.cols; ++c) {
            if (p.prob_r[c] > best_r) {
                best_r = p.prob_r[c];
                p.r_bin = c;
            }
        }
        for (int c = 0; c < cls_a.cols; ++c) {
            if (p.prob_a[c] > best_a) {
                best_a = p.prob_a[c];
                p.az_bin = c;
            }
        }
        p.res_r = reg.at(n, 0);
        p.res_a = reg.at(n, 1);
        p.confidence = best_r * best_a;
    }
    return preds;
}

std::vector<PointPrediction> predict_points(const Frame& frame, const assoc::CandidateSet& cands,
                                            const Params& params, const ArchConfig& arch) {
    const int n = static_cast<int>(cands.point_indices.size());
    if (n == 0) throw DimensionError("predict_points: empty candidate set");
    ag::Tensor radar(n, frame.radar_feat.channels);
    ag::Tensor image(n, frame.image_feat.channels);
    for (int i = 0; i < n; ++i) {
        const auto& p = frame.points[cands.point_indices[i]];
        frame.radar_feat.eval_into(p.r, p.a, radar.data.data() + i * radar.cols);
        frame.image_feat.eval_into(p.u, p.v, image.data.data() + i * image.cols);
    }
    return predict_rows(radar, image, std::vector<int>(n, 0), params, arch);
}

}  // namespace rofusion::net
