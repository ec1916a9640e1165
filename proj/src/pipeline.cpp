#include "rofusion/pipeline.hpp"

#include <algorithm>

#include "rofusion/association.hpp"
#include "rofusion/errors.hpp"

namespace rofusion::pipeline {

namespace {

const ObjectGT* find_object(const Frame& frame, int object_id) {
    for (const ObjectGT& o : frame.objects) {
        if (o.id == object_id) return &o;
    }
    return nullptr;
}

void sample_features(const Frame& frame, const std::vector<int>& point_indices, bool use_image,
                     ag::Tensor* radar, ag::Tensor* image) {
    const int n = static_cast<int>(point_indices.size());
    *radar = ag::Tensor(n, frame.radar_feat.channels);
    *image = ag::Tensor(n, frame.image_feat.channels);
    for (int i = 0; i < n; ++i) {
        const auto& p = frame.points[point_indices[i]];
        frame.radar_feat.eval_into(p.r, p.a, radar->data.data() + i * radar->cols);
        if (use_image) {
            frame.image_feat.eval_into(p.u, p.v, image->data.data() + i * image->cols);
        }
    }
}

}  // namespace

FrameRows build_training_rows(const Frame& frame, const ExperimentConfig& cfg) {
    const bool global = cfg.codec.mode == codec::Mode::Global;
    const auto assoc_res = assoc::associate(frame, frame.gt_boxes);

    std::vector<int> indices;
    FrameRows rows;
    std::vector<double> res_flat;
    int group = 0;
    for (const auto& set : assoc_res.sets) {
        const ObjectGT* obj = find_object(frame, set.object_id);
        if (!obj) continue;  // box without a matching object carries no labels
        bool any = false;
        for (int idx : set.point_indices) {
            const auto& p = frame.points[idx];
            if (global) {
                // Absolute-grid ablation: every candidate regresses the
                // object's absolute center, both axes supervised.
                codec::GlobalTarget t;
                try {
                    t = codec::encode_global(obj->center_r, obj->center_a, cfg.grid);
                } catch (const IndexError&) {
                    continue;  // center off-grid: no usable label
                }
                indices.push_back(idx);
                rows.group_ids.push_back(group);
                rows.target_r_bin.push_back(t.r_bin);
                rows.target_a_bin.push_back(t.az_bin);
                res_flat.push_back(t.res_r);
                res_flat.push_back(t.res_a);
                rows.mask_r.push_back(1);
                rows.mask_a.push_back(1);
                rows.mask_entries.push_back(1);
                rows.mask_entries.push_back(1);
                any = true;
                continue;
            }
            const auto cls = assoc::classify_point(p, *obj, cfg.codec);
            const auto tm = assoc::training_mask(cls);
            if (!tm.use_point) continue;
            if (!cfg.train.augment_nontrivial && cls != assoc::PointClass::Full) continue;
            const auto t = codec::encode(p, obj->center_r, obj->center_a, cfg.codec);
            indices.push_back(idx);
            rows.group_ids.push_back(group);
            rows.target_r_bin.push_back(t.r_bin);
            rows.target_a_bin.push_back(t.az_bin);
            res_flat.push_back(t.res_r);
            res_flat.push_back(t.res_a);
            rows.mask_r.push_back(tm.axis_mask[0] ? 1 : 0);
            rows.mask_a.push_back(tm.axis_mask[1] ? 1 : 0);
            rows.mask_entries.push_back(tm.axis_mask[0] ? 1 : 0);
            rows.mask_entries.push_back(tm.axis_mask[1] ? 1 : 0);
            any = true;
        }
        if (any) ++group;
    }
    rows.n_groups = group;
    rows.target_res = ag::Tensor(static_cast<int>(indices.size()), 2, std::move(res_flat));
    sample_features(frame, indices, cfg.train.use_image_features, &rows.radar_feats,
                    &rows.image_feats);
    return rows;
}

FrameRows concat_rows(const std::vector<const FrameRows*>& parts) {
    FrameRows out;
    int total = 0, cr = 0, ci = 0;
    for (const FrameRows* p : parts) {
        total += p->rows();
        if (p->rows() > 0) {
            cr = p->radar_feats.cols;
            ci = p->image_feats.cols;
        }
    }
    out.radar_feats = ag::Tensor(total, cr);
    out.image_feats = ag::Tensor(total, ci);
    out.target_res = ag::Tensor(total, 2);
    int row = 0, group_base = 0;
    for (const FrameRows* p : parts) {
        for (int i = 0; i < p->rows(); ++i, ++row) {
            std::copy_n(p->radar_feats.data.begin() + static_cast<std::size_t>(i) * cr, cr,
                        out.radar_feats.data.begin() + static_cast<std::size_t>(row) * cr);
            std::copy_n(p->image_feats.data.begin() + static_cast<std::size_t>(i) * ci, ci,
                        out.image_feats.data.begin() + static_cast<std::size_t>(row) * ci);
            out.group_ids.push_back(group_base + p->group_ids[i]);
            out.target_r_bin.push_back(p->target_r_bin[i]);
            out.target_a_bin.push_back(p->target_a_bin[i]);
            out.target_res.at(row, 0) = p->target_res.at(i, 0);
            out.target_res.at(row, 1) = p->target_res.at(i, 1);
            out.mask_r.push_back(p->mask_r[i]);
            out.mask_a.push_back(p->mask_a[i]);
            out.mask_entries.push_back(p->mask_entries[2 * i]);
            out.mask_entries.push_back(p->mask_entries[2 * i + 1]);
        }
        group_base += p->n_groups;
    }
    out.n_groups = group_base;
    return out;
}

std::vector<Frame> make_split(const ExperimentConfig& cfg, std::uint64_t offset, int count) {
    std::vector<Frame> frames;
    frames.reserve(count);
    for (int i = 0; i < count; ++i) {
        Frame f = sim::generate_frame(cfg.sim, cfg.train.seed + offset + i);
        f.frame_id = static_cast<std::int64_t>(offset) + i;
        frames.push_back(std::move(f));
    }
    return frames;
}

std::vector<Detection> detect_frame(const Frame& frame, const net::Params& params,
                                    const ExperimentConfig& cfg) {
    const bool global = cfg.codec.mode == codec::Mode::Global;
    const std::vector<BBox2D>& boxes =
        cfg.eval.box_source == BoxSource::Oracle ? frame.gt_boxes : frame.detector_boxes;
    const auto assoc_res = assoc::associate(frame, boxes);

    std::vector<int> indices;
    std::vector<int> group_ids;
    int group = 0;
    for (const auto& set : assoc_res.sets) {
        std::vector<int> kept;
        if (global) {
            kept = set.point_indices;
        } else {
            double origin_r = 0.0, origin_a = 0.0;
            if (cfg.eval.origin_mode == OriginMode::Gt) {
                const ObjectGT* obj = find_object(frame, set.object_id);
                if (!obj) {
                    throw ConfigError(
                        "detect_frame: origin_mode gt requires boxes tagged with object ids");
                }
                origin_r = obj->center_r;
                origin_a = obj->center_a;
            } else {
                const auto origin =
                    codec::heuristic_origin(set, frame, cfg.eval.obj_length_prior);
                origin_r = origin.center_r;
                origin_a = origin.center_a;
            }
            for (int idx : set.point_indices) {
                if (assoc::classify_point(frame.points[idx], origin_r, origin_a, cfg.codec) ==
                    assoc::PointClass::Full) {
                    kept.push_back(idx);
                }
            }
        }
        if (kept.empty()) continue;
        for (int idx : kept) {
            indices.push_back(idx);
            group_ids.push_back(group);
        }
        ++group;
    }
    if (indices.empty()) return {};

    ag::Tensor radar, image;
    sample_features(frame, indices, cfg.train.use_image_features, &radar, &image);
    const auto preds = net::predict_rows(radar, image, group_ids, params, cfg.arch);

    std::vector<std::array<double, 2>> centers(preds.size());
    std::vector<double> confidences(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const auto& p = preds[i];
        centers[i] = global ? codec::decode_global(p.az_bin, p.r_bin, p.res_r, p.res_a, cfg.grid)
                            : codec::decode(frame.points[indices[i]], p.az_bin, p.r_bin, p.res_r,
                                            p.res_a, cfg.codec);
        confidences[i] = p.confidence;
    }
    return eval::aggregate_detections(centers, confidences, group_ids);
}

eval::FrameDetections frame_detections(const Frame& frame, const net::Params& params,
                                       const ExperimentConfig& cfg) {
    eval::FrameDetections fd;
    fd.frame_id = frame.frame_id;
    fd.difficulty = frame.difficulty;
    fd.detections = detect_frame(frame, params, cfg);
    fd.gts = frame.objects;
    return fd;
}

eval::EvalReport evaluate_frames(const std::vector<Frame>& frames, const net::Params& params,
                                 const ExperimentConfig& cfg,
                                 std::vector<eval::FrameDetections>* out_dets) {
    std::vector<eval::FrameDetections> dets;
    dets.reserve(frames.size());
    for (const Frame& f : frames) dets.push_back(frame_detections(f, params, cfg));
    const auto report = eval::compute_metrics(dets, cfg.eval.iou_thr, cfg.eval.template_length,
                                              cfg.eval.template_width);
    if (out_dets) *out_dets = std::move(dets);
    return report;
}

}  // namespace rofusion::pipeline
