#include <doctest.h>

#include <cmath>
#include <cstring>

#include "rofusion/association.hpp"
#include "rofusion/errors.hpp"
#include "rofusion/local_codec.hpp"
#include "rofusion/rng.hpp"

#include "oracles.hpp"

using namespace rofusion;
using codec::CodecConfig;
using codec::GlobalGridConfig;
using codec::LocalTarget;

namespace {

geom::RadarPoint point_at(double r, double a) {
    geom::RadarPoint p;
    p.r = r;
    p.a = a;
    return p;
}

}  // namespace

TEST_CASE("encode examples") {
    CodecConfig cfg;

    const LocalTarget center = codec::encode(point_at(50, 3), 50, 3, cfg);
    CHECK(center.r_bin == 5);
    CHECK(center.az_bin == 2);
    CHECK(center.res_r == 0.0);
    CHECK(center.res_a == 0.0);

    // delta_r = +1.3 m: bin offset round(2.6) = 3, residual -0.2
    const LocalTarget off = codec::encode(point_at(50, 3), 51.3, 3, cfg);
    CHECK(off.r_bin == 8);
    CHECK(off.res_r == doctest::Approx(-0.2).epsilon(1e-12));
    const auto oracle = oracles::nearest_bin(1.3, 0.5, 11);
    CHECK(off.r_bin == 5 + oracle.signed_bin);
    CHECK(off.res_r == doctest::Approx(oracle.residual).epsilon(1e-12));

    // +10 m is clamped to the top bin; the residual carries the excess
    const LocalTarget clamped = codec::encode(point_at(50, 3), 60, 3, cfg);
    CHECK(clamped.r_bin == 10);
    CHECK(clamped.res_r == doctest::Approx(10.0 - 5 * 0.5).epsilon(1e-12));
}

TEST_CASE("encode ties round away from zero") {
    CodecConfig cfg;
    // delta_r = 1.25 = 2.5 bins: tie between offsets 2 and 3, away wins
    const LocalTarget t = codec::encode(point_at(50, 0), 51.25, 0, cfg);
    CHECK(t.r_bin == 8);
    CHECK(t.res_r == doctest::Approx(-0.25).epsilon(1e-12));
    const auto oracle = oracles::nearest_bin(1.25, 0.5, 11);
    CHECK(t.r_bin == 5 + oracle.signed_bin);

    const LocalTarget neg = codec::encode(point_at(50, 0), 48.75, 0, cfg);
    CHECK(neg.r_bin == 2);
    CHECK(neg.res_r == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("encode matches the brute-force oracle on random offsets") {
    CodecConfig cfg;
    CounterRng rng = CounterRng::from_seed(201);
    for (int i = 0; i < 2000; ++i) {
        const double dr = rng.uniform(-cfg.span_r(), cfg.span_r());
        const double da = rng.uniform(-cfg.span_a(), cfg.span_a());
        const LocalTarget t = codec::encode(point_at(40, -5), 40 + dr, -5 + da, cfg);
        const auto want_r = oracles::nearest_bin(dr, cfg.r_bin_width, cfg.n_r_bins);
        const auto want_a = oracles::nearest_bin(da, cfg.az_bin_width, cfg.n_az_bins);
        CHECK(t.r_bin == 5 + want_r.signed_bin);
        CHECK(t.az_bin == 2 + want_a.signed_bin);
        CHECK(t.res_r == doctest::Approx(want_r.residual).epsilon(1e-12));
        CHECK(t.res_a == doctest::Approx(want_a.residual).epsilon(1e-12));
    }
}

TEST_CASE("encode requires local mode") {
    CodecConfig cfg;
    cfg.mode = codec::Mode::Global;
    CHECK_THROWS_AS(codec::encode(point_at(50, 0), 50, 0, cfg), ConfigError);
}

TEST_CASE("decode examples and round trip") {
    CodecConfig cfg;
    const auto p = point_at(50, 3);

    const auto identity = codec::decode(p, 2, 5, 0, 0, cfg);
    CHECK(identity[0] == 50.0);
    CHECK(identity[1] == 3.0);

    const auto c = codec::decode(point_at(50, 0), 2, 8, -0.2, 0, cfg);
    CHECK(c[0] == doctest::Approx(51.3).epsilon(1e-13));

    CHECK_THROWS_AS(codec::decode(p, 2, 11, 0, 0, cfg), IndexError);
    CHECK_THROWS_AS(codec::decode(p, -1, 5, 0, 0, cfg), IndexError);
}

TEST_CASE("round trip is exact for in-lattice offsets (1e5 samples)") {
    CodecConfig cfg;
    CounterRng rng = CounterRng::from_seed(202);
    for (int i = 0; i < 100000; ++i) {
        const double r = rng.uniform(5.0, 100.0);
        const double a = rng.uniform(-60.0, 60.0);
        const double dr = rng.uniform(-cfg.span_r(), cfg.span_r());
        const double da = rng.uniform(-cfg.span_a(), cfg.span_a());
        const auto p = point_at(r, a);
        const LocalTarget t = codec::encode(p, r + dr, a + da, cfg);
        CHECK(std::abs(t.res_r) <= cfg.r_bin_width / 2 + 1e-12);
        CHECK(std::abs(t.res_a) <= cfg.az_bin_width / 2 + 1e-12);
        const auto back = codec::decode(p, t.az_bin, t.r_bin, t.res_r, t.res_a, cfg);
        CHECK(std::abs(back[0] - (r + dr)) < 1e-12 * std::max(1.0, r));
        CHECK(std::abs(back[1] - (a + da)) < 1e-12 * std::max(1.0, std::abs(a)));
    }
}

TEST_CASE("encoding is translation covariant") {
    CodecConfig cfg;
    CounterRng rng = CounterRng::from_seed(203);
    // dyadic offsets and positions so center - point is the same bit pattern
    // at every absolute position
    const double dr = 1.25, da = -0.375;
    const LocalTarget ref = codec::encode(point_at(20, 0), 20 + dr, 0 + da, cfg);
    for (int i = 0; i < 100; ++i) {
        const double r = rng.uniform_int(20, 400) * 0.25;
        const double a = rng.uniform_int(-240, 240) * 0.25;
        const LocalTarget t = codec::encode(point_at(r, a), r + dr, a + da, cfg);
        CHECK(t.r_bin == ref.r_bin);
        CHECK(t.az_bin == ref.az_bin);
        // residuals agree bitwise: computed from the same delta
        CHECK(std::memcmp(&t.res_r, &ref.res_r, sizeof(double)) == 0);
        CHECK(std::memcmp(&t.res_a, &ref.res_a, sizeof(double)) == 0);
    }
}

TEST_CASE("classification width matches the head width") {
    CodecConfig cfg;
    CHECK(cfg.cls_width() == 16);
    CHECK(cfg.n_az_bins + cfg.n_r_bins == 16);
}

TEST_CASE("heuristic_origin examples") {
    Frame frame;
    assoc::CandidateSet set;

    frame.points.push_back(point_at(50, 3));
    set.point_indices = {0};
    const auto single = codec::heuristic_origin(set, frame, 4.0);
    CHECK(single.center_r == doctest::Approx(52.0));
    CHECK(single.center_a == doctest::Approx(3.0));

    frame.points.clear();
    frame.points.push_back(point_at(49, -1));
    frame.points.push_back(point_at(50, 0));
    frame.points.push_back(point_at(54, 1));
    set.point_indices = {0, 1, 2};
    const auto multi = codec::heuristic_origin(set, frame, 4.0);
    CHECK(multi.center_r == doctest::Approx(51.0));
    CHECK(multi.center_a == doctest::Approx(0.0));

    set.point_indices.clear();
    CHECK_THROWS_AS(codec::heuristic_origin(set, frame, 4.0), IndexError);
}

TEST_CASE("encode_global examples") {
    GlobalGridConfig grid;
    CHECK(grid.n_r_bins() == 129);
    CHECK(grid.n_a_bins() == 151);
    CHECK(grid.cls_width() == 280);

    // exactly on a node
    const auto on_node = codec::encode_global(40.0, -12.0, grid);
    CHECK(on_node.res_r == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(std::abs(on_node.res_a) < 1e-12);
    CHECK(on_node.r_bin == 50);
    CHECK(on_node.az_bin == 60);

    // 2-bin grid, center at the midpoint: tie rounds away from zero
    GlobalGridConfig two;
    two.r_min = 0;
    two.r_max = 1.0;
    two.r_step = 1.0;
    CHECK(two.n_r_bins() == 2);
    const auto tie = codec::encode_global(0.5, 0.0, two);
    CHECK(tie.r_bin == 1);
    CHECK(tie.res_r == doctest::Approx(-0.5).epsilon(1e-12));

    // derived case against the brute-force nearest-node oracle
    const auto t = codec::encode_global(50.3, 10.1, grid);
    const auto want_r = oracles::nearest_node(50.3, 0.0, 0.8, 129);
    const auto want_a = oracles::nearest_node(10.1, -60.0, 0.8, 151);
    CHECK(t.r_bin == want_r.signed_bin);
    CHECK(t.az_bin == want_a.signed_bin);
    CHECK(t.res_r == doctest::Approx(want_r.residual).epsilon(1e-9));
    CHECK(t.res_a == doctest::Approx(want_a.residual).epsilon(1e-9));

    CHECK_THROWS_AS(codec::encode_global(200.0, 0.0, grid), IndexError);
    CHECK_THROWS_AS(codec::encode_global(50.0, 80.0, grid), IndexError);
}

TEST_CASE("encode_global matches the oracle on random centers") {
    GlobalGridConfig grid;
    CounterRng rng = CounterRng::from_seed(204);
    for (int i = 0; i < 2000; ++i) {
        const double r = rng.uniform(0.0, 102.0);
        const double a = rng.uniform(-60.0, 60.0);
        const auto t = codec::encode_global(r, a, grid);
        const auto want_r = oracles::nearest_node(r, 0.0, 0.8, 129);
        const auto want_a = oracles::nearest_node(a, -60.0, 0.8, 151);
        CHECK(t.r_bin == want_r.signed_bin);
        CHECK(t.az_bin == want_a.signed_bin);
        const auto back = codec::decode_global(t.az_bin, t.r_bin, t.res_r, t.res_a, grid);
        CHECK(back[0] == doctest::Approx(r).epsilon(1e-12));
        CHECK(back[1] == doctest::Approx(a).epsilon(1e-12));
    }
}

TEST_CASE("codec config validation") {
    CodecConfig cfg;
    cfg.n_az_bins = 4;  // even: no center bin
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.n_az_bins = 5;
    cfg.r_bin_width = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
