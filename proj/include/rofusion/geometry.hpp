#pragma once

#include <array>
#include <string>

namespace rofusion {

struct BBox2D;  // association.hpp

namespace geom {

enum class SignConvention { StandardPlus, PaperMinus };

std::string to_string(SignConvention s);
SignConvention sign_convention_from_string(const std::string& s);

struct CameraIntrinsics {
    double fx = 300.0;
    double fy = 300.0;
    double px = 480.0;
    double py = 270.0;
    SignConvention sign_convention = SignConvention::StandardPlus;

    void validate() const;  // fx > 0, fy > 0
};

struct CameraExtrinsics {
    std::array<double, 9> R{1, 0, 0, 0, 1, 0, 0, 0, 1};  // row-major
    std::array<double, 3> t{0, 0, 0};

    void validate() const;  // R'R = I and det(R) = 1 within 1e-9
    std::array<double, 3> apply(const std::array<double, 3>& xyz) const;
};

// One scatterer: polar (range m, azimuth deg, Doppler m/s), image pixels,
// and ego-frame Cartesian meters. Ego frame: x forward, y left, z up;
// azimuth positive counterclockwise, carried in degrees.
struct RadarPoint {
    double r = 0.0;
    double a = 0.0;
    double d = 0.0;
    double u = 0.0;
    double v = 0.0;
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

// Pinhole projection. Throws DimensionError-free; a point with camera-frame
// depth z' <= 1e-6 throws NumericError ("behind camera").
// StandardPlus: u = fx x'/z' + px; PaperMinus flips the principal-point sign.
std::array<double, 2> project_point(const std::array<double, 3>& xyz, const CameraIntrinsics& K,
                                    const CameraExtrinsics& E);

// x = r cos(a), y = r sin(a); a in degrees.
std::array<double, 2> polar_to_cartesian(double r, double a_deg);

// r = sqrt(x^2+y^2), a = atan2(y,x) in degrees; (0,0) -> (0,0).
std::array<double, 2> cartesian_to_polar(double x, double y);

// Inclusive on all four edges.
bool in_bbox(double u, double v, const BBox2D& box);

}  // namespace geom
}  // namespace rofusion
