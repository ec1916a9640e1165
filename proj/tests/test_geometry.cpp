#include <doctest.h>

#include <cmath>

#include "rofusion/errors.hpp"
#include "rofusion/geometry.hpp"
#include "rofusion/rng.hpp"
#include "rofusion/types.hpp"

#include "oracles.hpp"

using namespace rofusion;
using geom::CameraExtrinsics;
using geom::CameraIntrinsics;

namespace {

// random rotation from a normalized quaternion
CameraExtrinsics random_extrinsics(CounterRng& rng) {
    double q[4];
    double n = 0.0;
    for (double& v : q) {
        v = rng.gaussian();
        n += v * v;
    }
    n = std::sqrt(n);
    for (double& v : q) v /= n;
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    CameraExtrinsics e;
    e.R = {1 - 2 * (y * y + z * z), 2 * (x * y - w * z),     2 * (x * z + w * y),
           2 * (x * y + w * z),     1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
           2 * (x * z - w * y),     2 * (y * z + w * x),     1 - 2 * (x * x + y * y)};
    for (double& v : e.t) v = rng.uniform(-2.0, 2.0);
    return e;
}

}  // namespace

TEST_CASE("project_point examples") {
    CameraIntrinsics unit{1, 1, 0, 0, geom::SignConvention::StandardPlus};
    CameraExtrinsics identity;
    const auto axis = geom::project_point({0, 0, 1}, unit, identity);
    CHECK(axis[0] == 0.0);
    CHECK(axis[1] == 0.0);

    CameraIntrinsics k{1000, 1000, 480, 270, geom::SignConvention::StandardPlus};
    const auto uv = geom::project_point({1, 0.5, 10}, k, identity);
    CHECK(uv[0] == doctest::Approx(580.0).epsilon(1e-12));
    CHECK(uv[1] == doctest::Approx(320.0).epsilon(1e-12));
    const auto oracle = oracles::project_homogeneous({1, 0.5, 10}, 1000, 1000, 480, 270, +1.0,
                                                     identity.R, identity.t);
    CHECK(uv[0] == doctest::Approx(oracle[0]).epsilon(1e-12));
    CHECK(uv[1] == doctest::Approx(oracle[1]).epsilon(1e-12));

    CameraIntrinsics paper = k;
    paper.sign_convention = geom::SignConvention::PaperMinus;
    const auto neg = geom::project_point({0, 0, 1}, paper, identity);
    CHECK(neg[0] == doctest::Approx(-480.0).epsilon(1e-12));
    CHECK(neg[1] == doctest::Approx(-270.0).epsilon(1e-12));
}

TEST_CASE("project_point rejects points at or behind the camera") {
    CameraIntrinsics k;
    CameraExtrinsics e;
    CHECK_THROWS_AS(geom::project_point({0, 0, -1}, k, e), NumericError);
    CHECK_THROWS_AS(geom::project_point({0, 0, 0}, k, e), NumericError);
}

TEST_CASE("projection matches the homogeneous oracle on random cases") {
    CounterRng rng = CounterRng::from_seed(101);
    int checked = 0;
    while (checked < 1000) {
        CameraIntrinsics k;
        k.fx = rng.uniform(100.0, 2000.0);
        k.fy = rng.uniform(100.0, 2000.0);
        k.px = rng.uniform(-1000.0, 1000.0);
        k.py = rng.uniform(-1000.0, 1000.0);
        const bool paper = rng.uniform01() < 0.5;
        k.sign_convention =
            paper ? geom::SignConvention::PaperMinus : geom::SignConvention::StandardPlus;
        const CameraExtrinsics e = random_extrinsics(rng);
        e.validate();
        const std::array<double, 3> xyz = {rng.uniform(-50.0, 50.0), rng.uniform(-50.0, 50.0),
                                           rng.uniform(-50.0, 50.0)};
        const auto cam = e.apply(xyz);
        if (cam[2] <= 1e-3) continue;
        const auto got = geom::project_point(xyz, k, e);
        const auto want = oracles::project_homogeneous(xyz, k.fx, k.fy, k.px, k.py,
                                                       paper ? -1.0 : +1.0, e.R, e.t);
        CHECK(std::abs(got[0] - want[0]) < 1e-9);
        CHECK(std::abs(got[1] - want[1]) < 1e-9);
        ++checked;
    }
}

TEST_CASE("polar_to_cartesian examples") {
    const auto boresight = geom::polar_to_cartesian(10, 0);
    CHECK(boresight[0] == 10.0);
    CHECK(boresight[1] == 0.0);

    const auto quarter = geom::polar_to_cartesian(10, 90);
    CHECK(std::abs(quarter[0]) < 1e-12);
    CHECK(quarter[1] == doctest::Approx(10.0).epsilon(1e-13));

    const auto oblique = geom::polar_to_cartesian(5, 30);
    CHECK(oblique[0] == doctest::Approx(5.0 * std::cos(M_PI / 6.0)).epsilon(1e-12));
    CHECK(oblique[0] == doctest::Approx(4.3301).epsilon(1e-4));
    CHECK(oblique[1] == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("cartesian_to_polar examples") {
    const auto fwd = geom::cartesian_to_polar(10, 0);
    CHECK(fwd[0] == 10.0);
    CHECK(fwd[1] == 0.0);

    const auto origin = geom::cartesian_to_polar(0, 0);
    CHECK(origin[0] == 0.0);
    CHECK(origin[1] == 0.0);

    const auto p = geom::cartesian_to_polar(3, 4);
    CHECK(p[0] == doctest::Approx(5.0).epsilon(1e-14));
    CHECK(p[1] == doctest::Approx(53.1301).epsilon(1e-5));
    CHECK(p[1] == doctest::Approx(std::atan2(4.0, 3.0) * 180.0 / M_PI).epsilon(1e-14));
}

TEST_CASE("polar round trip within 1e-9") {
    CounterRng rng = CounterRng::from_seed(102);
    for (int i = 0; i < 1000; ++i) {
        const double r = std::exp(rng.uniform(std::log(1e-3), std::log(1e3)));
        const double a = rng.uniform(-179.99, 179.99);
        const auto xy = geom::polar_to_cartesian(r, a);
        const auto ra = geom::cartesian_to_polar(xy[0], xy[1]);
        CHECK(std::abs(ra[0] - r) < 1e-9 * std::max(1.0, r));
        CHECK(std::abs(ra[1] - a) < 1e-9);
    }
}

TEST_CASE("projection with identity extrinsics is homogeneous in scale") {
    CounterRng rng = CounterRng::from_seed(103);
    CameraIntrinsics k{700, 650, 320, 240, geom::SignConvention::StandardPlus};
    CameraExtrinsics identity;
    for (int i = 0; i < 200; ++i) {
        const std::array<double, 3> xyz = {rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0),
                                           rng.uniform(0.5, 20.0)};
        const double lambda = std::exp(rng.uniform(std::log(0.1), std::log(10.0)));
        const auto a = geom::project_point(xyz, k, identity);
        const auto b = geom::project_point(
            {xyz[0] * lambda, xyz[1] * lambda, xyz[2] * lambda}, k, identity);
        CHECK(std::abs(a[0] - b[0]) < 1e-9 * std::max(1.0, std::abs(a[0])));
        CHECK(std::abs(a[1] - b[1]) < 1e-9 * std::max(1.0, std::abs(a[1])));
    }
}

TEST_CASE("rotation preserves range") {
    CounterRng rng = CounterRng::from_seed(104);
    for (int i = 0; i < 200; ++i) {
        CameraExtrinsics e = random_extrinsics(rng);
        e.t = {0, 0, 0};
        const std::array<double, 3> xyz = {rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0),
                                           rng.uniform(-10.0, 10.0)};
        const auto rot = e.apply(xyz);
        const double n0 = std::sqrt(xyz[0] * xyz[0] + xyz[1] * xyz[1] + xyz[2] * xyz[2]);
        const double n1 = std::sqrt(rot[0] * rot[0] + rot[1] * rot[1] + rot[2] * rot[2]);
        CHECK(std::abs(n0 - n1) < 1e-9 * std::max(1.0, n0));
    }
}

TEST_CASE("extrinsics validation rejects non-rotations") {
    CameraExtrinsics e;
    e.R = {2, 0, 0, 0, 1, 0, 0, 0, 1};
    CHECK_THROWS_AS(e.validate(), ConfigError);
    e.R = {1, 0, 0, 0, 1, 0, 0, 0, -1};  // det = -1
    CHECK_THROWS_AS(e.validate(), ConfigError);
}

TEST_CASE("in_bbox is inclusive on edges") {
    BBox2D box;
    box.u_min = 10;
    box.v_min = 20;
    box.u_max = 30;
    box.v_max = 40;
    CHECK(geom::in_bbox(20, 30, box));  // center
    CHECK(geom::in_bbox(10, 30, box));  // left edge
    CHECK(geom::in_bbox(30, 40, box));  // corner
    CHECK(!geom::in_bbox(9, 30, box));  // 1px outside
    CHECK(!geom::in_bbox(20, 41, box));
}
