#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rofusion/types.hpp"

namespace rofusion::eval {

// One Detection per group: confidence-weighted mean of the per-point decoded
// centers, confidence = group max. centers are (r, a) pairs.
std::vector<Detection> aggregate_detections(const std::vector<std::array<double, 2>>& centers,
                                            const std::vector<double>& confidences,
                                            const std::vector<int>& group_ids);

// Axis-aligned template boxes (length along x) centered at the two polar
// centers converted to Cartesian; standard rectangle IoU.
double box_iou(const Detection& det, const ObjectGT& gt, double template_length = 4.0,
               double template_width = 1.8);

struct MetricsRow {
    std::optional<double> ap;            // fraction, 0..1
    std::optional<double> ar;            // fraction, 0..1
    std::optional<double> mean_r_err;    // meters, over matched pairs
    std::optional<double> mean_a_err;    // degrees, over matched pairs
    int tp = 0;
    int fp = 0;
    int fn = 0;
    int n_gt = 0;
};

struct PerFrameRow {
    std::int64_t frame_id = 0;
    Difficulty difficulty = Difficulty::Easy;
    int n_gt = 0;
    int n_det = 0;
    int tp = 0;
    int fp = 0;
    int fn = 0;
};

struct EvalReport {
    MetricsRow overall, easy, hard;
    std::vector<PerFrameRow> frames;

    const MetricsRow& row(const std::string& split) const;
};

struct FrameDetections {
    std::int64_t frame_id = 0;
    Difficulty difficulty = Difficulty::Easy;
    std::vector<Detection> detections;
    std::vector<ObjectGT> gts;
};

// Greedy confidence-ordered matching per frame at the IoU threshold; AP uses
// all-points interpolation. Splits with no ground truth report absent
// metrics rather than zero.
EvalReport compute_metrics(const std::vector<FrameDetections>& frames, double iou_thr = 0.5,
                           double template_length = 4.0, double template_width = 1.8);

// Report serialization: CSV with the stable column order and a text table.
std::string report_csv(const EvalReport& report);
std::string report_table(const EvalReport& report);
std::string predictions_csv(const std::vector<FrameDetections>& frames);

}  // namespace rofusion::eval
