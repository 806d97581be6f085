#include <cmath>

#include "doctest.h"
#include "vlmlab/rng.hpp"
#include "vlmlab/rope.hpp"

using namespace vlmlab;

namespace {

Vec random_vec(Rng& rng, int n) {
    Vec v(static_cast<size_t>(n));
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

}  // namespace

TEST_CASE("theta table values") {
    RopeParams p4 = make_thetas(4, 10000.0);
    REQUIRE(p4.thetas.size() == 2);
    CHECK(std::abs(p4.thetas[0] - 1.0) < 1e-15);
    CHECK(std::abs(p4.thetas[1] - 0.01) < 1e-15);

    // exponent is zero regardless of base
    CHECK(make_thetas(2, 10000.0).thetas == std::vector<double>{1.0});
    CHECK(make_thetas(2, 7.5).thetas == std::vector<double>{1.0});

    RopeParams p8 = make_thetas(8, 10000.0);
    REQUIRE(p8.thetas.size() == 4);
    // extended-precision evaluation of base^(-2m/d)
    for (int m = 0; m < 4; ++m) {
        const long double want = powl(10000.0L, -2.0L * m / 8.0L);
        CHECK(std::abs(p8.thetas[static_cast<size_t>(m)] - static_cast<double>(want)) < 1e-15);
    }
}

TEST_CASE("theta table is strictly decreasing for base > 1") {
    for (int d : {4, 8, 16, 64, 128}) {
        RopeParams p = make_thetas(d, 10000.0);
        for (size_t m = 1; m < p.thetas.size(); ++m) CHECK(p.thetas[m] < p.thetas[m - 1]);
    }
}

TEST_CASE("theta table error paths") {
    CHECK_THROWS_AS(make_thetas(3, 10000.0), ShapeError);
    CHECK_THROWS_AS(make_thetas(0, 10000.0), ShapeError);
    CHECK_THROWS_AS(make_thetas(4, -1.0), ConfigError);
}

TEST_CASE("rotation at position zero is identity") {
    Rng rng(31);
    RopeParams p = make_thetas(8, 10000.0);
    Vec v = random_vec(rng, 8);
    CHECK(apply_rotation(p, 0.0, v).values == v);
}

TEST_CASE("closed-form 2-d rotation") {
    RopeParams p = make_thetas(2, 10000.0);  // theta = [1]
    const double pi = std::acos(-1.0);
    RotatedVector r = apply_rotation(p, pi, Vec{1.0, 0.0});
    CHECK(std::abs(r.values[0] - (-1.0)) < 1e-9);
    CHECK(std::abs(r.values[1] - 0.0) < 1e-9);

    RotatedVector half = apply_rotation(p, pi / 2.0, Vec{1.0, 0.0});
    CHECK(std::abs(half.values[0]) < 1e-9);
    CHECK(std::abs(half.values[1] - 1.0) < 1e-9);
}

TEST_CASE("rotation preserves the norm") {
    Rng rng(32);
    RopeParams p = make_thetas(16, 10000.0);
    for (int trial = 0; trial < 50; ++trial) {
        Vec v = random_vec(rng, 16);
        const double pos = rng.uniform(0.0, 1000.0);
        CHECK(std::abs(norm(apply_rotation(p, pos, v).values) - norm(v)) < 1e-9);
    }
}

TEST_CASE("rotation shape error") {
    RopeParams p = make_thetas(4, 10000.0);
    CHECK_THROWS_AS(apply_rotation(p, 1.0, Vec{1.0, 2.0}), ShapeError);
}

TEST_CASE("rotated dot at equal positions is the plain dot") {
    Rng rng(33);
    RopeParams p = make_thetas(8, 10000.0);
    for (int trial = 0; trial < 20; ++trial) {
        Vec u = random_vec(rng, 8);
        Vec v = random_vec(rng, 8);
        const double q = static_cast<double>(rng.next_below(100));
        CHECK(std::abs(rotated_dot(p, q, u, q, v) - dot(u, v)) < 1e-9);
    }
}

TEST_CASE("rotated dot depends only on the relative position") {
    Rng rng(34);
    for (int d : {4, 16, 64}) {
        RopeParams p = make_thetas(d, 10000.0);
        for (int trial = 0; trial < 100; ++trial) {
            Vec u = random_vec(rng, d);
            Vec v = random_vec(rng, d);
            const double pos_p = static_cast<double>(rng.next_below(512));
            const double pos_q = static_cast<double>(rng.next_below(512));
            const double s = static_cast<double>(rng.next_below(256));

            const double direct = rotated_dot_direct(p, pos_p, u, pos_q, v);
            const double relative = rotated_dot_relative(p, pos_p, u, pos_q, v);
            const double shifted = rotated_dot_direct(p, pos_p + s, u, pos_q + s, v);
            CHECK(std::abs(direct - relative) < 1e-6);
            CHECK(std::abs(direct - shifted) < 1e-6);
        }
    }
}

TEST_CASE("dual-form agreement at d=64 with large offsets") {
    Rng rng(35);
    RopeParams p = make_thetas(64, 10000.0);
    for (int trial = 0; trial < 50; ++trial) {
        Vec u = random_vec(rng, 64);
        Vec v = random_vec(rng, 64);
        const double pos_p = static_cast<double>(rng.next_below(1024));
        const double pos_q = pos_p + static_cast<double>(rng.next_below(513));
        CHECK(std::abs(rotated_dot_direct(p, pos_p, u, pos_q, v) -
                       rotated_dot_relative(p, pos_p, u, pos_q, v)) < 1e-6);
    }
}

TEST_CASE("identical content at one shared position rotates identically") {
    // the balanced scheme gives every image token the same id; identical
    // content must then produce bitwise-identical rotated vectors
    Rng rng(36);
    RopeParams p = make_thetas(16, 10000.0);
    Vec v = random_vec(rng, 16);
    RotatedVector a = apply_rotation(p, 6.0, v);
    RotatedVector b = apply_rotation(p, 6.0, v);
    CHECK(a.values == b.values);
}
