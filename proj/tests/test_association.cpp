#include <doctest.h>

#include <algorithm>

#include "rofusion/association.hpp"
#include "rofusion/rng.hpp"

using namespace rofusion;
using assoc::PointClass;

namespace {

geom::RadarPoint point_uv(double u, double v, double r = 50, double a = 0) {
    geom::RadarPoint p;
    p.u = u;
    p.v = v;
    p.r = r;
    p.a = a;
    return p;
}

BBox2D box(double u0, double v0, double u1, double v1, int id) {
    BBox2D b;
    b.u_min = u0;
    b.v_min = v0;
    b.u_max = u1;
    b.v_max = v1;
    b.object_id = id;
    return b;
}

}  // namespace

TEST_CASE("associate gathers points inside each box") {
    Frame frame;
    for (int i = 0; i < 5; ++i) frame.points.push_back(point_uv(100 + i, 100 + i));
    for (int i = 0; i < 3; ++i) frame.points.push_back(point_uv(500 + i, 400));

    const auto res = assoc::associate(frame, {box(95, 95, 110, 110, 0)});
    REQUIRE(res.sets.size() == 1);
    CHECK(res.sets[0].point_indices == std::vector<int>{0, 1, 2, 3, 4});
    CHECK(res.sets[0].object_id == 0);
    CHECK(res.dropped_empty == 0);
}

TEST_CASE("a point inside two overlapping boxes lands in both sets") {
    Frame frame;
    frame.points.push_back(point_uv(100, 100));
    const auto res =
        assoc::associate(frame, {box(90, 90, 110, 110, 0), box(95, 95, 120, 120, 1)});
    REQUIRE(res.sets.size() == 2);
    CHECK(res.sets[0].point_indices == std::vector<int>{0});
    CHECK(res.sets[1].point_indices == std::vector<int>{0});
}

TEST_CASE("empty box list and empty boxes") {
    Frame frame;
    frame.points.push_back(point_uv(100, 100));
    const auto none = assoc::associate(frame, {});
    CHECK(none.sets.empty());

    const auto dropped = assoc::associate(frame, {box(200, 200, 210, 210, 0)});
    CHECK(dropped.sets.empty());
    CHECK(dropped.dropped_empty == 1);
}

TEST_CASE("associate membership is invariant under point permutation") {
    CounterRng rng = CounterRng::from_seed(301);
    Frame frame;
    for (int i = 0; i < 20; ++i) {
        frame.points.push_back(point_uv(rng.uniform(0, 200), rng.uniform(0, 200)));
    }
    const auto boxes = std::vector<BBox2D>{box(50, 50, 150, 150, 0)};
    const auto ref = assoc::associate(frame, boxes);

    // reverse the points; indices must map through the permutation
    Frame rev = frame;
    std::reverse(rev.points.begin(), rev.points.end());
    const auto res = assoc::associate(rev, boxes);
    REQUIRE(ref.sets.size() == res.sets.size());
    if (!ref.sets.empty()) {
        std::vector<int> mapped;
        for (int idx : res.sets[0].point_indices) {
            mapped.push_back(static_cast<int>(frame.points.size()) - 1 - idx);
        }
        std::sort(mapped.begin(), mapped.end());
        CHECK(mapped == ref.sets[0].point_indices);
    }
}

TEST_CASE("classify_point rule at the codec defaults") {
    codec::CodecConfig cfg;  // span_r = 2.75 m, span_a = 1.0 deg
    ObjectGT obj;
    obj.center_r = 50;
    obj.center_a = 0;

    geom::RadarPoint p;
    p.r = 50;
    p.a = 0;
    CHECK(assoc::classify_point(p, obj, cfg) == PointClass::Full);

    p.r = 60;  // delta_r = 10 out, delta_a = 0.3 in
    p.a = 0.3;
    CHECK(assoc::classify_point(p, obj, cfg) == PointClass::AzimuthOnly);

    p.r = 51;  // delta_r in, delta_a = 5 out
    p.a = 5;
    CHECK(assoc::classify_point(p, obj, cfg) == PointClass::RangeOnly);

    p.r = 60;
    p.a = 10;
    CHECK(assoc::classify_point(p, obj, cfg) == PointClass::Background);

    // boundary is inclusive
    p.r = 50 + cfg.span_r();
    p.a = cfg.span_a();
    CHECK(assoc::classify_point(p, obj, cfg) == PointClass::Full);
}

TEST_CASE("classify_point is symmetric under delta sign flips") {
    codec::CodecConfig cfg;
    CounterRng rng = CounterRng::from_seed(302);
    ObjectGT obj;
    obj.center_r = 40;
    obj.center_a = -10;
    for (int i = 0; i < 200; ++i) {
        const double dr = rng.uniform(-6.0, 6.0);
        const double da = rng.uniform(-2.5, 2.5);
        geom::RadarPoint p1, p2;
        p1.r = obj.center_r + dr;
        p1.a = obj.center_a + da;
        p2.r = obj.center_r - dr;
        p2.a = obj.center_a - da;
        CHECK(assoc::classify_point(p1, obj, cfg) == assoc::classify_point(p2, obj, cfg));
    }
}

TEST_CASE("training_mask table") {
    const auto full = assoc::training_mask(PointClass::Full);
    CHECK(full.use_point);
    CHECK(full.axis_mask[0]);
    CHECK(full.axis_mask[1]);

    const auto ro = assoc::training_mask(PointClass::RangeOnly);
    CHECK(ro.use_point);
    CHECK(ro.axis_mask[0]);
    CHECK(!ro.axis_mask[1]);

    const auto ao = assoc::training_mask(PointClass::AzimuthOnly);
    CHECK(ao.use_point);
    CHECK(!ao.axis_mask[0]);
    CHECK(ao.axis_mask[1]);

    const auto bg = assoc::training_mask(PointClass::Background);
    CHECK(!bg.use_point);
    CHECK(!bg.axis_mask[0]);
    CHECK(!bg.axis_mask[1]);
}
