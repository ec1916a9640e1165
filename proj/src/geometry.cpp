#include "rofusion/geometry.hpp"

#include <cmath>

#include "rofusion/errors.hpp"
#include "rofusion/types.hpp"

namespace rofusion::geom {

std::string to_string(SignConvention s) {
    return s == SignConvention::StandardPlus ? "standard_plus" : "paper_minus";
}

SignConvention sign_convention_from_string(const std::string& s) {
    if (s == "standard_plus") return SignConvention::StandardPlus;
    if (s == "paper_minus") return SignConvention::PaperMinus;
    throw ConfigError("sign_convention: unknown value '" + s + "'");
}

void CameraIntrinsics::validate() const {
    if (!(fx > 0.0)) throw ConfigError("intrinsics.fx: must be > 0");
    if (!(fy > 0.0)) throw ConfigError("intrinsics.fy: must be > 0");
}

void CameraExtrinsics::validate() const {
    // R'R = I
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) s += R[k * 3 + i] * R[k * 3 + j];
            const double want = i == j ? 1.0 : 0.0;
            if (std::abs(s - want) > 1e-9) {
                throw ConfigError("extrinsics.R: not orthonormal (R'R deviates at " +
                                  std::to_string(i) + "," + std::to_string(j) + ")");
            }
        }
    }
    const double det = R[0] * (R[4] * R[8] - R[5] * R[7]) - R[1] * (R[3] * R[8] - R[5] * R[6]) +
                       R[2] * (R[3] * R[7] - R[4] * R[6]);
    if (std::abs(det - 1.0) > 1e-9) {
        throw ConfigError("extrinsics.R: det(R) = " + std::to_string(det) + ", want 1");
    }
}

std::array<double, 3> CameraExtrinsics::apply(const std::array<double, 3>& xyz) const {
    std::array<double, 3> out;
    for (int i = 0; i < 3; ++i) {
        out[i] = R[i * 3 + 0] * xyz[0] + R[i * 3 + 1] * xyz[1] + R[i * 3 + 2] * xyz[2] + t[i];
    }
    return out;
}

std::array<double, 2> project_point(const std::array<double, 3>& xyz, const CameraIntrinsics& K,
                                    const CameraExtrinsics& E) {
    const auto cam = E.apply(xyz);
    if (cam[2] <= 1e-6) {
        throw NumericError("project_point: point behind camera (z' = " + std::to_string(cam[2]) +
                           ")");
    }
    const double s = K.sign_convention == SignConvention::StandardPlus ? 1.0 : -1.0;
    return {K.fx * cam[0] / cam[2] + s * K.px, K.fy * cam[1] / cam[2] + s * K.py};
}

std::array<double, 2> polar_to_cartesian(double r, double a_deg) {
    const double a = a_deg * M_PI / 180.0;
    return {r * std::cos(a), r * std::sin(a)};
}

std::array<double, 2> cartesian_to_polar(double x, double y) {
    if (x == 0.0 && y == 0.0) return {0.0, 0.0};
    return {std::hypot(x, y), std::atan2(y, x) * 180.0 / M_PI};
}

bool in_bbox(double u, double v, const BBox2D& box) {
    return u >= box.u_min && u <= box.u_max && v >= box.v_min && v <= box.v_max;
}

}  // namespace rofusion::geom

namespace rofusion {

std::string to_string(Difficulty d) { return d == Difficulty::Easy ? "easy" : "hard"; }

Difficulty difficulty_from_string(const std::string& s) {
    if (s == "easy") return Difficulty::Easy;
    if (s == "hard") return Difficulty::Hard;
    throw ConfigError("difficulty: unknown value '" + s + "'");
}

}  // namespace rofusion
