#include <doctest.h>

#include <cmath>
#include <cstring>

#include "rofusion/errors.hpp"
#include "rofusion/rng.hpp"
#include "rofusion/tensor.hpp"

#include "oracles.hpp"

using namespace rofusion;
using ag::NodeId;
using ag::Tape;
using ag::Tensor;

namespace {

Tensor rand_tensor(int r, int c, CounterRng& rng, double lo = -2.0, double hi = 2.0) {
    Tensor t(r, c);
    for (double& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

NodeId sum_all(Tape& tape, NodeId x) {
    const Tensor& v = tape.value(x);
    Tensor ones_col(v.cols, 1);
    for (double& e : ones_col.data) e = 1.0;
    const NodeId col = tape.linear(x, tape.leaf(ones_col), tape.leaf(Tensor(1, 1)));
    if (v.rows == 1) return col;
    Tensor ones_row(1, v.rows);
    for (double& e : ones_row.data) e = 1.0;
    return tape.linear(tape.leaf(ones_row), col, tape.leaf(Tensor(1, 1)));
}

}  // namespace

TEST_CASE("linear_forward examples") {
    Tape tape;
    const NodeId x = tape.leaf(Tensor::from_rows({{1, 2}}));
    const NodeId w_id = tape.leaf(Tensor::from_rows({{1, 0}, {0, 1}}));
    const NodeId b0 = tape.leaf(Tensor(1, 2));
    const Tensor& identity = tape.value(tape.linear(x, w_id, b0));
    CHECK(identity.at(0, 0) == 1.0);
    CHECK(identity.at(0, 1) == 2.0);

    const NodeId x0 = tape.leaf(Tensor::from_rows({{0, 0}}));
    const NodeId b = tape.leaf(Tensor::from_rows({{3, 4}}));
    const Tensor& bias_only = tape.value(tape.linear(x0, w_id, b));
    CHECK(bias_only.at(0, 0) == 3.0);
    CHECK(bias_only.at(0, 1) == 4.0);

    const NodeId w = tape.leaf(Tensor::from_rows({{1, 3}, {2, 4}}));
    const NodeId b1 = tape.leaf(Tensor::from_rows({{1, 1}}));
    const Tensor& out = tape.value(tape.linear(x, w, b1));
    CHECK(out.at(0, 0) == doctest::Approx(6.0).epsilon(1e-15));
    CHECK(out.at(0, 1) == doctest::Approx(12.0).epsilon(1e-15));
}

TEST_CASE("linear_forward shape error names both shapes") {
    Tape tape;
    const NodeId x = tape.leaf(Tensor(2, 3));
    const NodeId w = tape.leaf(Tensor(4, 5));
    const NodeId b = tape.leaf(Tensor(1, 5));
    try {
        tape.linear(x, w, b);
        FAIL("expected DimensionError");
    } catch (const DimensionError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("2x3") != std::string::npos);
        CHECK(msg.find("4x5") != std::string::npos);
    }
}

TEST_CASE("relu examples and gradient") {
    Tape tape;
    const NodeId x = tape.leaf(Tensor::from_rows({{-1, 0, 2}}));
    const Tensor& y = tape.value(tape.relu(x));
    CHECK(y.at(0, 0) == 0.0);
    CHECK(y.at(0, 1) == 0.0);
    CHECK(y.at(0, 2) == 2.0);

    const NodeId pos = tape.leaf(Tensor::from_rows({{0.5, 3.0}}));
    const Tensor& same = tape.value(tape.relu(pos));
    CHECK(same.at(0, 0) == 0.5);
    CHECK(same.at(0, 1) == 3.0);

    // upstream ones through sum: gradient is the x>0 indicator
    Tape t2;
    const NodeId x2 = t2.leaf(Tensor::from_rows({{-1, 2}}));
    const auto grads = t2.backward(sum_all(t2, t2.relu(x2)));
    CHECK(grads[x2].at(0, 0) == 0.0);
    CHECK(grads[x2].at(0, 1) == 1.0);
}

TEST_CASE("concat_cols examples") {
    Tape tape;
    const NodeId a = tape.leaf(Tensor::from_rows({{1}}));
    const NodeId b = tape.leaf(Tensor::from_rows({{2}}));
    const Tensor& ab = tape.value(tape.concat_cols(a, b));
    CHECK(ab.rows == 1);
    CHECK(ab.cols == 2);
    CHECK(ab.at(0, 0) == 1.0);
    CHECK(ab.at(0, 1) == 2.0);

    const NodeId e1 = tape.leaf(Tensor(0, 3));
    const NodeId e2 = tape.leaf(Tensor(0, 2));
    const Tensor& empty = tape.value(tape.concat_cols(e1, e2));
    CHECK(empty.rows == 0);
    CHECK(empty.cols == 5);

    CHECK_THROWS_AS(tape.concat_cols(a, tape.leaf(Tensor(2, 1))), DimensionError);

    // ones upstream split into ones on both inputs
    Tape t2;
    const NodeId a2 = t2.leaf(Tensor::from_rows({{1, 2}}));
    const NodeId b2 = t2.leaf(Tensor::from_rows({{3}}));
    const auto grads = t2.backward(sum_all(t2, t2.concat_cols(a2, b2)));
    CHECK(grads[a2].at(0, 0) == 1.0);
    CHECK(grads[a2].at(0, 1) == 1.0);
    CHECK(grads[b2].at(0, 0) == 1.0);
}

TEST_CASE("maxpool_rows examples") {
    Tape tape;
    const NodeId x = tape.leaf(Tensor::from_rows({{1, 5}, {3, 2}}));
    const NodeId mp = tape.maxpool_rows(x);
    CHECK(tape.value(mp).at(0, 0) == 3.0);
    CHECK(tape.value(mp).at(0, 1) == 5.0);
    CHECK(tape.argmax_of(mp) == std::vector<int>{1, 0});

    const NodeId single = tape.leaf(Tensor::from_rows({{7, -1}}));
    const NodeId mp1 = tape.maxpool_rows(single);
    CHECK(tape.value(mp1).at(0, 0) == 7.0);
    CHECK(tape.argmax_of(mp1) == std::vector<int>{0, 0});

    const NodeId tie = tape.leaf(Tensor::from_rows({{2}, {2}}));
    const NodeId mpt = tape.maxpool_rows(tie);
    CHECK(tape.value(mpt).at(0, 0) == 2.0);
    CHECK(tape.argmax_of(mpt) == std::vector<int>{0});

    CHECK_THROWS_AS(tape.maxpool_rows(tape.leaf(Tensor(0, 2))), DimensionError);
}

TEST_CASE("maxpool_rows is permutation-covariant") {
    CounterRng rng = CounterRng::from_seed(11);
    for (int trial = 0; trial < 20; ++trial) {
        Tensor x = rand_tensor(6, 4, rng);
        Tape t1;
        const NodeId mp1 = t1.maxpool_rows(t1.leaf(x));

        // rotate rows by k
        const int k = trial % 6;
        Tensor xp(6, 4);
        for (int r = 0; r < 6; ++r) {
            for (int c = 0; c < 4; ++c) xp.at(r, c) = x.at((r + k) % 6, c);
        }
        Tape t2;
        const NodeId mp2 = t2.maxpool_rows(t2.leaf(xp));
        for (int c = 0; c < 4; ++c) {
            CHECK(t1.value(mp1).at(0, c) == t2.value(mp2).at(0, c));
            // argmax maps through the permutation (values are distinct w.p. 1)
            CHECK((t1.argmax_of(mp1)[c] - k + 6) % 6 == t2.argmax_of(mp2)[c]);
        }
    }
}

TEST_CASE("softmax_cross_entropy examples") {
    Tape tape;
    const NodeId uniform = tape.leaf(Tensor::from_rows({{0.7, 0.7, 0.7, 0.7, 0.7}}));
    const NodeId l1 = tape.softmax_cross_entropy(uniform, {2}, {1});
    CHECK(tape.value(l1).at(0, 0) == doctest::Approx(std::log(5.0)).epsilon(1e-14));

    Tensor hot(1, 4);
    hot.at(0, 1) = 1e4;
    const NodeId l2 = tape.softmax_cross_entropy(tape.leaf(hot), {1}, {1});
    CHECK(tape.value(l2).at(0, 0) == doctest::Approx(0.0).epsilon(1e-12));

    const NodeId two = tape.leaf(Tensor::from_rows({{1, 2}}));
    const NodeId l3 = tape.softmax_cross_entropy(two, {0}, {1});
    CHECK(tape.value(l3).at(0, 0) == doctest::Approx(1.31326).epsilon(1e-5));
    CHECK(tape.value(l3).at(0, 0) ==
          doctest::Approx(oracles::softmax_ce_row({1, 2}, 0)).epsilon(1e-12));

    // masked rows contribute nothing
    const NodeId both = tape.leaf(Tensor::from_rows({{1, 2}, {5, -5}}));
    const NodeId l4 = tape.softmax_cross_entropy(both, {0, 0}, {1, 0});
    CHECK(tape.value(l4).at(0, 0) == tape.value(l3).at(0, 0));

    // all rows masked: zero loss, zero gradient
    const NodeId l5 = tape.softmax_cross_entropy(both, {0, 0}, {0, 0});
    CHECK(tape.value(l5).at(0, 0) == 0.0);
    const auto grads = tape.backward(l5);
    for (double g : grads[both].data) CHECK(g == 0.0);

    CHECK_THROWS_AS(tape.softmax_cross_entropy(two, {5}, {1}), IndexError);
}

TEST_CASE("softmax_cross_entropy is nonnegative on random inputs") {
    CounterRng rng = CounterRng::from_seed(5);
    for (int trial = 0; trial < 50; ++trial) {
        Tape tape;
        const int n = 1 + rng.uniform_int(0, 3);
        const int k = 2 + rng.uniform_int(0, 6);
        const NodeId logits = tape.leaf(rand_tensor(n, k, rng, -10.0, 10.0));
        std::vector<int> targets(n);
        std::vector<std::uint8_t> mask(n, 1);
        for (int& t : targets) t = rng.uniform_int(0, k - 1);
        const NodeId loss = tape.softmax_cross_entropy(logits, targets, mask);
        CHECK(tape.value(loss).at(0, 0) >= 0.0);
    }
}

TEST_CASE("smooth_l1 examples") {
    Tape tape;
    const Tensor target = Tensor::from_rows({{1, 2}});
    const NodeId same = tape.leaf(Tensor::from_rows({{1, 2}}));
    CHECK(tape.value(tape.smooth_l1(same, target, {1, 1})).at(0, 0) == 0.0);

    const NodeId quad = tape.leaf(Tensor::from_rows({{1.5, 0}}));
    CHECK(tape.value(tape.smooth_l1(quad, target, {1, 0})).at(0, 0) ==
          doctest::Approx(0.125).epsilon(1e-15));

    const NodeId lin = tape.leaf(Tensor::from_rows({{3, 0}}));
    CHECK(tape.value(tape.smooth_l1(lin, target, {1, 0})).at(0, 0) ==
          doctest::Approx(1.5).epsilon(1e-15));

    const NodeId masked = tape.leaf(Tensor::from_rows({{9, 9}}));
    const NodeId l0 = tape.smooth_l1(masked, target, {0, 0});
    CHECK(tape.value(l0).at(0, 0) == 0.0);
    const auto grads = tape.backward(l0);
    for (double g : grads[masked].data) CHECK(g == 0.0);
}

TEST_CASE("backward: linear in W gives x broadcast") {
    Tape tape;
    const Tensor x = Tensor::from_rows({{2, -3}});
    const NodeId xid = tape.leaf(x);
    const NodeId w = tape.leaf(Tensor(2, 3));
    const NodeId b = tape.leaf(Tensor(1, 3));
    const auto grads = tape.backward(sum_all(tape, tape.linear(xid, w, b)));
    for (int j = 0; j < 3; ++j) {
        CHECK(grads[w].at(0, j) == 2.0);
        CHECK(grads[w].at(1, j) == -3.0);
        CHECK(grads[b].at(0, j) == 1.0);
    }
}

TEST_CASE("backward: disconnected leaf keeps a zero gradient") {
    Tape tape;
    const NodeId used = tape.leaf(Tensor::from_rows({{1, 2}}));
    const NodeId unused = tape.leaf(Tensor::from_rows({{5, 5}}));
    const auto grads = tape.backward(sum_all(tape, tape.relu(used)));
    CHECK(grads[unused].at(0, 0) == 0.0);
    CHECK(grads[unused].at(0, 1) == 0.0);
}

TEST_CASE("backward rejects a non-scalar seed") {
    Tape tape;
    const NodeId x = tape.leaf(Tensor(2, 2));
    CHECK_THROWS_AS(tape.backward(tape.relu(x)), DimensionError);
}

TEST_CASE("grad_check: linear is exact to 1e-9") {
    CounterRng rng = CounterRng::from_seed(3);
    Tensor x = rand_tensor(3, 4, rng), w = rand_tensor(4, 2, rng), b = rand_tensor(1, 2, rng);
    const auto rep = ag::grad_check(
        [](Tape& t, const std::vector<NodeId>& in) {
            return sum_all(t, t.linear(in[0], in[1], in[2]));
        },
        {x, w, b});
    CHECK(rep.max_rel_err < 1e-9);
    CHECK(rep.checked == 3 * 4 + 4 * 2 + 2);
}

TEST_CASE("grad_check: composite 2-layer MLP matches finite differences") {
    CounterRng rng = CounterRng::from_seed(4);
    Tensor x = rand_tensor(3, 4, rng);
    Tensor w1 = rand_tensor(4, 6, rng, -0.7, 0.7), b1 = rand_tensor(1, 6, rng, -0.3, 0.3);
    Tensor w2 = rand_tensor(6, 2, rng, -0.7, 0.7), b2 = rand_tensor(1, 2, rng, -0.3, 0.3);
    const auto rep = ag::grad_check(
        [](Tape& t, const std::vector<NodeId>& in) {
            const NodeId h = t.relu(t.linear(in[0], in[1], in[2]));
            return sum_all(t, t.relu(t.linear(h, in[3], in[4])));
        },
        {x, w1, b1, w2, b2});
    CHECK(rep.max_rel_err < 1e-6);
}

TEST_CASE("grad_check skips coordinates that sit on a relu kink") {
    Tensor x(1, 3);
    x.at(0, 0) = 0.0;  // exactly on the kink
    x.at(0, 1) = 1.0;
    x.at(0, 2) = -1.0;
    const auto rep = ag::grad_check(
        [](Tape& t, const std::vector<NodeId>& in) { return sum_all(t, t.relu(in[0])); }, {x});
    CHECK(rep.skipped_kinks == 3);  // every perturbed eval sees the 0 input
    CHECK(rep.checked == 0);
}

TEST_CASE("all ops match finite differences on random bounded inputs") {
    CounterRng rng = CounterRng::from_seed(99);
    for (int trial = 0; trial < 5; ++trial) {
        // one mixed graph exercising every differentiable op
        Tensor x = rand_tensor(4, 3, rng);
        Tensor w = rand_tensor(3, 3, rng, -0.8, 0.8);
        Tensor b = rand_tensor(1, 3, rng, -0.5, 0.5);
        Tensor reg_target = rand_tensor(4, 3, rng, -0.5, 0.5);
        const Tensor w_head = rand_tensor(6, 3, rng, -0.4, 0.4);
        const std::vector<int> groups = {0, 1, 0, 1};
        const std::vector<int> targets = {0, 2, 1, 2};
        const std::vector<std::uint8_t> row_mask = {1, 1, 0, 1};
        const std::vector<std::uint8_t> entry_mask(12, 1);
        const auto rep = ag::grad_check(
            [&](Tape& t, const std::vector<NodeId>& in) {
                const NodeId h = t.relu(t.linear(in[0], in[1], in[2]));
                const NodeId cat = t.concat_cols(h, in[0]);
                const NodeId pooled = t.segment_maxpool(cat, groups);
                const NodeId ce = t.softmax_cross_entropy(
                    t.linear(pooled, t.leaf(w_head), t.leaf(Tensor(1, 3))), targets, row_mask);
                const NodeId sl = t.smooth_l1(h, reg_target, entry_mask);
                return t.add(ce, t.scale(sl, 2.5));
            },
            {x, w, b}, 1e-5, 1e-4);
        CHECK(rep.max_rel_err < 1e-6);
    }
}

TEST_CASE("forward results are bit-identical across runs") {
    CounterRng rng = CounterRng::from_seed(42);
    const Tensor x = rand_tensor(5, 7, rng);
    const Tensor w = rand_tensor(7, 6, rng);
    const Tensor b = rand_tensor(1, 6, rng);
    Tape t1, t2;
    const Tensor& o1 = t1.value(t1.linear(t1.leaf(x), t1.leaf(w), t1.leaf(b)));
    const Tensor& o2 = t2.value(t2.linear(t2.leaf(x), t2.leaf(w), t2.leaf(b)));
    CHECK(std::memcmp(o1.data.data(), o2.data.data(), o1.size() * sizeof(double)) == 0);
}

TEST_CASE("non-finite forward values are rejected") {
    Tape tape;
    Tensor bad(1, 2);
    bad.at(0, 0) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(tape.leaf(bad), NumericError);
}
