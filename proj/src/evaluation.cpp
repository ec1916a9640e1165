#include "rofusion/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "rofusion/errors.hpp"
#include "rofusion/geometry.hpp"

namespace rofusion::eval {

std::vector<Detection> aggregate_detections(const std::vector<std::array<double, 2>>& centers,
                                            const std::vector<double>& confidences,
                                            const std::vector<int>& group_ids) {
    if (centers.size() != confidences.size() || centers.size() != group_ids.size()) {
        throw DimensionError("aggregate_detections: input length mismatch");
    }
    std::vector<int> order;  // distinct groups, first-appearance order
    std::vector<Detection> out;
    for (std::size_t i = 0; i < centers.size(); ++i) {
        const int g = group_ids[i];
        int slot = -1;
        for (std::size_t k = 0; k < order.size(); ++k) {
            if (order[k] == g) {
                slot = static_cast<int>(k);
                break;
            }
        }
        if (slot < 0) {
            order.push_back(g);
            out.push_back({});
        }
    }
    std::vector<double> wsum(out.size(), 0.0);
    std::vector<double> rsum(out.size(), 0.0), asum(out.size(), 0.0);
    for (std::size_t i = 0; i < centers.size(); ++i) {
        int slot = 0;
        for (std::size_t k = 0; k < order.size(); ++k) {
            if (order[k] == group_ids[i]) {
                slot = static_cast<int>(k);
                break;
            }
        }
        const double w = confidences[i];
        wsum[slot] += w;
        rsum[slot] += w * centers[i][0];
        asum[slot] += w * centers[i][1];
        out[slot].confidence = std::max(out[slot].confidence, confidences[i]);
    }
    for (std::size_t k = 0; k < out.size(); ++k) {
        if (wsum[k] > 0.0) {
            out[k].center_r = rsum[k] / wsum[k];
            out[k].center_a = asum[k] / wsum[k];
        } else {
            // all-zero confidences: fall back to the plain mean
            double n = 0.0, rs = 0.0, as = 0.0;
            for (std::size_t i = 0; i < centers.size(); ++i) {
                if (group_ids[i] == order[k]) {
                    rs += centers[i][0];
                    as += centers[i][1];
                    n += 1.0;
                }
            }
            out[k].center_r = rs / n;
            out[k].center_a = as / n;
        }
        out[k].source_object_id = order[k];
    }
    return out;
}

namespace {

double interval_overlap(double c1, double len1, double c2, double len2) {
    const double lo = std::max(c1 - len1 / 2.0, c2 - len2 / 2.0);
    const double hi = std::min(c1 + len1 / 2.0, c2 + len2 / 2.0);
    return std::max(0.0, hi - lo);
}

}  // namespace

double box_iou(const Detection& det, const ObjectGT& gt, double template_length,
               double template_width) {
    const auto a = geom::polar_to_cartesian(det.center_r, det.center_a);
    const auto b = geom::polar_to_cartesian(gt.center_r, gt.center_a);
    const double ix = interval_overlap(a[0], template_length, b[0], template_length);
    const double iy = interval_overlap(a[1], template_width, b[1], template_width);
    const double inter = ix * iy;
    const double uni = 2.0 * template_length * template_width - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

namespace {

struct RankedDet {
    double confidence;
    std::size_t frame;  // index into the frames vector
    std::size_t det;    // index within the frame
    bool tp = false;
    double r_err = 0.0, a_err = 0.0;
};

std::optional<double> ap_all_points(const std::vector<const RankedDet*>& dets, int n_gt) {
    if (n_gt == 0) return std::nullopt;
    if (dets.empty()) return 0.0;
    std::vector<double> recall, precision;
    int tp = 0, fp = 0;
    for (const RankedDet* d : dets) {
        d->tp ? ++tp : ++fp;
        recall.push_back(static_cast<double>(tp) / n_gt);
        precision.push_back(static_cast<double>(tp) / (tp + fp));
    }
    // monotone precision envelope from the right
    for (int i = static_cast<int>(precision.size()) - 2; i >= 0; --i) {
        precision[i] = std::max(precision[i], precision[i + 1]);
    }
    double ap = 0.0;
    double prev_recall = 0.0;
    for (std::size_t i = 0; i < recall.size(); ++i) {
        ap += (recall[i] - prev_recall) * precision[i];
        prev_recall = recall[i];
    }
    return ap;
}

MetricsRow build_row(const std::vector<const RankedDet*>& dets, int n_gt) {
    MetricsRow row;
    row.n_gt = n_gt;
    for (const RankedDet* d : dets) d->tp ? ++row.tp : ++row.fp;
    row.fn = n_gt - row.tp;
    row.ap = ap_all_points(dets, n_gt);
    row.ar = n_gt > 0 ? std::optional<double>(static_cast<double>(row.tp) / n_gt) : std::nullopt;
    if (row.tp > 0) {
        double r = 0.0, a = 0.0;
        for (const RankedDet* d : dets) {
            if (d->tp) {
                r += d->r_err;
                a += d->a_err;
            }
        }
        row.mean_r_err = r / row.tp;
        row.mean_a_err = a / row.tp;
    }
    return row;
}

}  // namespace

EvalReport compute_metrics(const std::vector<FrameDetections>& frames, double iou_thr,
                           double template_length, double template_width) {
    std::vector<RankedDet> ranked;
    for (std::size_t f = 0; f < frames.size(); ++f) {
        for (std::size_t d = 0; d < frames[f].detections.size(); ++d) {
            ranked.push_back({frames[f].detections[d].confidence, f, d});
        }
    }
    // Global confidence order; stable so equal confidences keep input order.
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const RankedDet& a, const RankedDet& b) {
                         return a.confidence > b.confidence;
                     });

    // Greedy per-frame matching in that order.
    std::vector<std::vector<bool>> gt_taken(frames.size());
    for (std::size_t f = 0; f < frames.size(); ++f) gt_taken[f].assign(frames[f].gts.size(), false);
    for (RankedDet& rd : ranked) {
        const FrameDetections& fr = frames[rd.frame];
        const Detection& det = fr.detections[rd.det];
        double best_iou = 0.0;
        int best = -1;
        for (std::size_t g = 0; g < fr.gts.size(); ++g) {
            if (gt_taken[rd.frame][g]) continue;
            const double iou = box_iou(det, fr.gts[g], template_length, template_width);
            if (iou >= iou_thr && iou > best_iou) {
                best_iou = iou;
                best = static_cast<int>(g);
            }
        }
        if (best >= 0) {
            gt_taken[rd.frame][best] = true;
            rd.tp = true;
            rd.r_err = std::abs(det.center_r - fr.gts[best].center_r);
            rd.a_err = std::abs(det.center_a - fr.gts[best].center_a);
        }
    }

    EvalReport report;
    const auto subset = [&](std::optional<Difficulty> want) {
        std::vector<const RankedDet*> dets;
        int n_gt = 0;
        for (const RankedDet& rd : ranked) {
            if (!want || frames[rd.frame].difficulty == *want) dets.push_back(&rd);
        }
        for (const FrameDetections& fr : frames) {
            if (!want || fr.difficulty == *want) n_gt += static_cast<int>(fr.gts.size());
        }
        return build_row(dets, n_gt);
    };
    report.overall = subset(std::nullopt);
    report.easy = subset(Difficulty::Easy);
    report.hard = subset(Difficulty::Hard);

    for (std::size_t f = 0; f < frames.size(); ++f) {
        PerFrameRow row;
        row.frame_id = frames[f].frame_id;
        row.difficulty = frames[f].difficulty;
        row.n_gt = static_cast<int>(frames[f].gts.size());
        row.n_det = static_cast<int>(frames[f].detections.size());
        for (const RankedDet& rd : ranked) {
            if (rd.frame == f) rd.tp ? ++row.tp : ++row.fp;
        }
        row.fn = row.n_gt - row.tp;
        report.frames.push_back(row);
    }
    return report;
}

const MetricsRow& EvalReport::row(const std::string& split) const {
    if (split == "overall") return overall;
    if (split == "easy") return easy;
    if (split == "hard") return hard;
    throw IndexError("EvalReport::row: unknown split '" + split + "'");
}

namespace {

std::string fmt_opt(const std::optional<double>& v, double scale, const char* fmt) {
    if (!v) return "";
    char buf[64];
    std::snprintf(buf, sizeof(buf), fmt, *v * scale);
    return buf;
}

}  // namespace

std::string report_csv(const EvalReport& report) {
    std::string out = "split,AP,AR,R_err_m,A_err_deg,TP,FP,FN\n";
    for (const char* split : {"overall", "easy", "hard"}) {
        const MetricsRow& r = report.row(split);
        out += split;
        out += "," + fmt_opt(r.ap, 100.0, "%.4f");
        out += "," + fmt_opt(r.ar, 100.0, "%.4f");
        out += "," + fmt_opt(r.mean_r_err, 1.0, "%.6f");
        out += "," + fmt_opt(r.mean_a_err, 1.0, "%.6f");
        out += "," + std::to_string(r.tp) + "," + std::to_string(r.fp) + "," +
               std::to_string(r.fn) + "\n";
    }
    return out;
}

std::string report_table(const EvalReport& report) {
    char buf[256];
    std::string out;
    out += "split    |  AP(%)  AR(%)   R(m)   A(deg) |   TP   FP   FN\n";
    out += "---------+--------------------------------+---------------\n";
    for (const char* split : {"overall", "easy", "hard"}) {
        const MetricsRow& r = report.row(split);
        const auto cell = [](const std::optional<double>& v, double s) {
            char b[32];
            if (!v) return std::string("     -");
            std::snprintf(b, sizeof(b), "%6.2f", *v * s);
            return std::string(b);
        };
        std::snprintf(buf, sizeof(buf), "%-8s | %s %s %s %s | %4d %4d %4d\n", split,
                      cell(r.ap, 100).c_str(), cell(r.ar, 100).c_str(),
                      cell(r.mean_r_err, 1).c_str(), cell(r.mean_a_err, 1).c_str(), r.tp, r.fp,
                      r.fn);
        out += buf;
    }
    return out;
}

std::string predictions_csv(const std::vector<FrameDetections>& frames) {
    std::string out = "frame_id,center_r,center_a,confidence\n";
    char buf[160];
    for (const FrameDetections& fr : frames) {
        for (const Detection& d : fr.detections) {
            std::snprintf(buf, sizeof(buf), "%lld,%.9g,%.9g,%.9g\n",
                          static_cast<long long>(fr.frame_id), d.center_r, d.center_a,
                          d.confidence);
            out += buf;
        }
    }
    return out;
}

}  // namespace rofusion::eval
