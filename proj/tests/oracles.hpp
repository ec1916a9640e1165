// Independent reference implementations used only by tests. Each one takes a
// different computational route from the library code it checks.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace oracles {

// Softmax cross entropy the naive way (long double, no max subtraction).
inline double softmax_ce_row(const std::vector<double>& logits, int target) {
    long double z = 0.0L;
    for (double l : logits) z += std::exp(static_cast<long double>(l));
    const long double p = std::exp(static_cast<long double>(logits[target])) / z;
    return static_cast<double>(-std::log(p));
}

// Pinhole projection via an explicit 3x4 homogeneous matrix product.
inline std::array<double, 2> project_homogeneous(const std::array<double, 3>& xyz,
                                                 double fx, double fy, double px, double py,
                                                 double psign, const std::array<double, 9>& R,
                                                 const std::array<double, 3>& t) {
    // K * [R|t], K = [[fx,0,psign*px],[0,fy,psign*py],[0,0,1]]
    double P[3][4];
    for (int col = 0; col < 3; ++col) {
        P[0][col] = fx * R[0 * 3 + col] + psign * px * R[2 * 3 + col];
        P[1][col] = fy * R[1 * 3 + col] + psign * py * R[2 * 3 + col];
        P[2][col] = R[2 * 3 + col];
    }
    P[0][3] = fx * t[0] + psign * px * t[2];
    P[1][3] = fy * t[1] + psign * py * t[2];
    P[2][3] = t[2];
    double h[3];
    for (int row = 0; row < 3; ++row) {
        h[row] = P[row][0] * xyz[0] + P[row][1] * xyz[1] + P[row][2] * xyz[2] + P[row][3];
    }
    return {h[0] / h[2], h[1] / h[2]};
}

// Rasterized IoU of two axis-aligned rectangles: 1 cm cells, each cell
// contributing its exact covered fraction (separable interval clipping).
inline double raster_iou(double cx1, double cy1, double cx2, double cy2, double len, double wid,
                         double cell = 0.01) {
    const double x_lo = std::min(cx1, cx2) - len / 2.0 - cell;
    const double x_hi = std::max(cx1, cx2) + len / 2.0 + cell;
    const double y_lo = std::min(cy1, cy2) - wid / 2.0 - cell;
    const double y_hi = std::max(cy1, cy2) + wid / 2.0 + cell;
    const int nx = static_cast<int>(std::ceil((x_hi - x_lo) / cell));
    const int ny = static_cast<int>(std::ceil((y_hi - y_lo) / cell));

    const auto clip = [cell](double cell_lo, double lo, double hi) {
        return std::max(0.0, std::min(cell_lo + cell, hi) - std::max(cell_lo, lo));
    };
    std::vector<double> ox1(nx), ox2(nx), oy1(ny), oy2(ny);
    for (int i = 0; i < nx; ++i) {
        const double x = x_lo + i * cell;
        ox1[i] = clip(x, cx1 - len / 2.0, cx1 + len / 2.0);
        ox2[i] = clip(x, cx2 - len / 2.0, cx2 + len / 2.0);
    }
    for (int j = 0; j < ny; ++j) {
        const double y = y_lo + j * cell;
        oy1[j] = clip(y, cy1 - wid / 2.0, cy1 + wid / 2.0);
        oy2[j] = clip(y, cy2 - wid / 2.0, cy2 + wid / 2.0);
    }
    double inter = 0.0, a1 = 0.0, a2 = 0.0;
    for (int i = 0; i < nx; ++i) {
        for (int j = 0; j < ny; ++j) {
            const double c1 = ox1[i] * oy1[j];
            const double c2 = ox2[i] * oy2[j];
            a1 += c1;
            a2 += c2;
            inter += std::min(c1, c2);  // cells are axis-aligned: overlap is the min coverage
        }
    }
    const double uni = a1 + a2 - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

// Brute-force nearest-bin-center search over the local lattice; ties go to
// the offset farther from zero.
struct BinResult {
    int signed_bin = 0;
    double residual = 0.0;
};

inline BinResult nearest_bin(double delta, double width, int n_bins) {
    const int half = (n_bins - 1) / 2;
    BinResult best;
    double best_dist = std::abs(delta - (-half) * width);
    best.signed_bin = -half;
    for (int k = -half + 1; k <= half; ++k) {
        const double dist = std::abs(delta - k * width);
        const bool closer = dist < best_dist - 1e-15;
        const bool tie = std::abs(dist - best_dist) <= 1e-15;
        if (closer || (tie && std::abs(k) > std::abs(best.signed_bin))) {
            best_dist = dist;
            best.signed_bin = k;
        }
    }
    best.residual = delta - best.signed_bin * width;
    return best;
}

// Brute-force nearest grid node; ties go to the larger index (away from zero
// in (c - lo)/step terms).
inline BinResult nearest_node(double c, double lo, double step, int n) {
    BinResult best;
    double best_dist = std::abs(c - lo);
    best.signed_bin = 0;
    for (int k = 1; k < n; ++k) {
        const double dist = std::abs(c - (lo + k * step));
        if (dist < best_dist - 1e-15 || std::abs(dist - best_dist) <= 1e-15) {
            best_dist = dist;
            best.signed_bin = k;
        }
    }
    best.residual = c - (lo + best.signed_bin * step);
    return best;
}

}  // namespace oracles
