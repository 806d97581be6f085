#include <cmath>
#include <functional>

#include "doctest.h"
#include "vlmlab/autodiff.hpp"
#include "vlmlab/rng.hpp"

using namespace vlmlab;
using ad::Tape;
using ad::Var;

namespace {

Mat random_mat(Rng& rng, int rows, int cols, double lo = -1.0, double hi = 1.0) {
    Mat m(rows, cols);
    for (double& x : m.data) x = rng.uniform(lo, hi);
    return m;
}

// Builds a graph from leaves and returns its output node.
using GraphFn = std::function<Var(Tape&, const std::vector<Var>&)>;

// Projects an output matrix to a scalar with fixed random row/col weights so
// every entry of the output (and of every input gradient) is exercised.
struct Harness {
    GraphFn fn;
    Mat wrow;
    Mat wcol;

    double eval(const std::vector<Mat>& inputs) const {
        Tape tape;
        std::vector<Var> leaves;
        for (const auto& m : inputs) leaves.push_back(tape.leaf(m));
        Var out = fn(tape, leaves);
        Var s = tape.matmul(tape.matmul(tape.leaf(wrow), out), tape.leaf(wcol));
        return tape.value(s).at(0, 0);
    }

    std::vector<Mat> analytic_grads(const std::vector<Mat>& inputs) const {
        Tape tape;
        std::vector<Var> leaves;
        for (const auto& m : inputs) leaves.push_back(tape.leaf(m));
        Var out = fn(tape, leaves);
        Var s = tape.matmul(tape.matmul(tape.leaf(wrow), out), tape.leaf(wcol));
        tape.backward(s);
        std::vector<Mat> grads;
        for (Var v : leaves) grads.push_back(tape.grad(v));
        return grads;
    }
};

void check_gradients(Rng& rng, const GraphFn& fn, std::vector<Mat> inputs) {
    // probe shapes to size the projection weights
    Mat out_shape;
    {
        Tape tape;
        std::vector<Var> leaves;
        for (const auto& m : inputs) leaves.push_back(tape.leaf(m));
        out_shape = tape.value(fn(tape, leaves));
    }
    Harness h{fn, random_mat(rng, 1, out_shape.rows), random_mat(rng, out_shape.cols, 1)};

    const std::vector<Mat> grads = h.analytic_grads(inputs);
    const double step = 1e-5;
    for (size_t which = 0; which < inputs.size(); ++which) {
        for (size_t flat = 0; flat < inputs[which].data.size(); ++flat) {
            std::vector<Mat> plus = inputs;
            plus[which].data[flat] += step;
            std::vector<Mat> minus = inputs;
            minus[which].data[flat] -= step;
            const double numeric = (h.eval(plus) - h.eval(minus)) / (2.0 * step);
            const double analytic = grads[which].data[flat];
            CHECK(std::abs(analytic - numeric) <= 1e-7 + 1e-5 * std::abs(numeric));
        }
    }
}

}  // namespace

TEST_CASE("gradients: matmul") {
    Rng rng(41);
    check_gradients(
        rng, [](Tape& t, const std::vector<Var>& v) { return t.matmul(v[0], v[1]); },
        {random_mat(rng, 3, 4), random_mat(rng, 4, 2)});
}

TEST_CASE("gradients: matmul_bt") {
    Rng rng(42);
    check_gradients(
        rng, [](Tape& t, const std::vector<Var>& v) { return t.matmul_bt(v[0], v[1]); },
        {random_mat(rng, 3, 4), random_mat(rng, 5, 4)});
}

TEST_CASE("gradients: add and row broadcast and scale") {
    Rng rng(43);
    check_gradients(
        rng, [](Tape& t, const std::vector<Var>& v) { return t.add(v[0], v[1]); },
        {random_mat(rng, 3, 3), random_mat(rng, 3, 3)});
    check_gradients(
        rng, [](Tape& t, const std::vector<Var>& v) { return t.add_row_broadcast(v[0], v[1]); },
        {random_mat(rng, 4, 3), random_mat(rng, 1, 3)});
    check_gradients(
        rng, [](Tape& t, const std::vector<Var>& v) { return t.scale(v[0], -2.5); },
        {random_mat(rng, 2, 5)});
}

TEST_CASE("gradients: add_const passes through") {
    Rng rng(44);
    Mat c = random_mat(rng, 3, 3);
    check_gradients(
        rng, [c](Tape& t, const std::vector<Var>& v) { return t.add_const(v[0], c); },
        {random_mat(rng, 3, 3)});
}

TEST_CASE("gradients: tanh") {
    Rng rng(45);
    check_gradients(
        rng, [](Tape& t, const std::vector<Var>& v) { return t.tanh(v[0]); },
        {random_mat(rng, 3, 4, -2.0, 2.0)});
}

TEST_CASE("gradients: rmsnorm") {
    Rng rng(46);
    check_gradients(
        rng, [](Tape& t, const std::vector<Var>& v) { return t.rmsnorm_rows(v[0], v[1]); },
        {random_mat(rng, 3, 6), random_mat(rng, 1, 6, 0.5, 1.5)});
}

TEST_CASE("gradients: rope rotation") {
    Rng rng(47);
    RopeParams params = make_thetas(6, 10000.0);
    std::vector<int> positions{0, 3, 3, 7};
    check_gradients(
        rng,
        [params, positions](Tape& t, const std::vector<Var>& v) {
            return t.rope_rows(v[0], params, positions);
        },
        {random_mat(rng, 4, 6)});
}

TEST_CASE("gradients: softmax causal and full") {
    Rng rng(48);
    check_gradients(
        rng, [](Tape& t, const std::vector<Var>& v) { return t.softmax_rows(v[0], true); },
        {random_mat(rng, 5, 5)});
    check_gradients(
        rng, [](Tape& t, const std::vector<Var>& v) { return t.softmax_rows(v[0], false); },
        {random_mat(rng, 4, 6)});
}

TEST_CASE("gradients: select_rows with repeated index accumulates") {
    Rng rng(49);
    std::vector<int> rows{2, 0, 2, 1};
    check_gradients(
        rng,
        [rows](Tape& t, const std::vector<Var>& v) { return t.select_rows(v[0], rows); },
        {random_mat(rng, 3, 4)});
}

TEST_CASE("gradients: concat_rows") {
    Rng rng(50);
    check_gradients(
        rng,
        [](Tape& t, const std::vector<Var>& v) {
            return t.concat_rows({v[0], v[1], v[2]});
        },
        {random_mat(rng, 2, 3), random_mat(rng, 1, 3), random_mat(rng, 3, 3)});
}

TEST_CASE("gradients: cross entropy") {
    Rng rng(51);
    for (int label = 0; label < 2; ++label) {
        Mat logits = random_mat(rng, 1, 2);
        Tape tape;
        Var l = tape.leaf(logits);
        Var loss = tape.cross_entropy(l, label);
        tape.backward(loss);
        const Mat analytic = tape.grad(l);

        const double step = 1e-6;
        for (int j = 0; j < 2; ++j) {
            auto eval = [&](double delta) {
                Mat pert = logits;
                pert.at(0, j) += delta;
                Tape t2;
                Var l2 = t2.leaf(pert);
                return t2.value(t2.cross_entropy(l2, label)).at(0, 0);
            };
            const double numeric = (eval(step) - eval(-step)) / (2.0 * step);
            CHECK(std::abs(analytic.at(0, j) - numeric) < 1e-7);
        }
    }
}

TEST_CASE("mean_scalars averages and distributes gradient") {
    Tape tape;
    Mat av(1, 1), bv(1, 1);
    av.at(0, 0) = 3.0;
    bv.at(0, 0) = -1.0;
    Var a = tape.leaf(av);
    Var b = tape.leaf(bv);
    Var m = tape.mean_scalars({a, b});
    CHECK(tape.value(m).at(0, 0) == doctest::Approx(1.0));
    tape.backward(m);
    CHECK(tape.grad(a).at(0, 0) == doctest::Approx(0.5));
    CHECK(tape.grad(b).at(0, 0) == doctest::Approx(0.5));
}

TEST_CASE("softmax rows are masked and normalized") {
    Rng rng(52);
    Mat scores = random_mat(rng, 4, 4);
    Tape tape;
    Var s = tape.leaf(scores);
    Mat y = tape.value(tape.softmax_rows(s, true));
    for (int r = 0; r < 4; ++r) {
        double sum = 0.0;
        for (int c = 0; c < 4; ++c) {
            if (c > r) CHECK(y.at(r, c) == 0.0);
            sum += y.at(r, c);
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}
