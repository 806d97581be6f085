#include "doctest.h"
#include "vlmlab/position.hpp"
#include "vlmlab/rng.hpp"

using namespace vlmlab;

TEST_CASE("sequential assignment enumerates consecutively") {
    CHECK(assign_sequential({3, 4, 2}) == PositionIds{0, 1, 2, 3, 4, 5, 6, 7, 8});
    CHECK(assign_sequential({0, 1, 1}) == PositionIds{0, 1});
    PositionIds long_ids = assign_sequential({2, 9, 3});
    REQUIRE(long_ids.size() == 14);
    for (int t = 0; t < 14; ++t) CHECK(long_ids[static_cast<size_t>(t)] == t);
}

TEST_CASE("balanced assignment shares one id across the image span") {
    CHECK(assign_bapa({3, 4, 2}) == PositionIds{0, 1, 2, 3, 3, 3, 3, 4, 5});
    // empty system prompt: the shared image id degrades to 0
    CHECK(assign_bapa({0, 5, 1}) == PositionIds{0, 0, 0, 0, 0, 1});
    // single image token: coincides with sequential
    CHECK(assign_bapa({1, 1, 1}) == PositionIds{0, 1, 2});
    CHECK(assign_bapa({1, 1, 1}) == assign_sequential({1, 1, 1}));
}

TEST_CASE("scheme registry") {
    CHECK(scheme_from_string("bapa") == SchemeId::bapa);
    CHECK(scheme_from_string("sequential") == SchemeId::sequential);
    CHECK_THROWS_AS(scheme_from_string("mrope"), ConfigError);
    CHECK(scheme_for(SchemeId::bapa) == &assign_bapa);
    CHECK(scheme_for(SchemeId::sequential) == &assign_sequential);
    CHECK(to_string(scheme_from_string("bapa")) == "bapa");
}

TEST_CASE("layout validation") {
    CHECK_THROWS_AS(assign_sequential({-1, 1, 1}), ConfigError);
    CHECK_THROWS_AS(assign_sequential({0, 0, 1}), ConfigError);
    CHECK_THROWS_AS(assign_bapa({0, 1, 0}), ConfigError);
}

TEST_CASE("scheme properties over random layouts") {
    Rng rng(21);
    for (int trial = 0; trial < 200; ++trial) {
        ModalityLayout layout;
        layout.system_len = static_cast<int>(rng.next_below(6));
        layout.image_len = 1 + static_cast<int>(rng.next_below(30));
        layout.user_len = 1 + static_cast<int>(rng.next_below(8));
        const int i = layout.system_len, j = layout.image_len, k = layout.user_len;

        PositionIds seq = assign_sequential(layout);
        PositionIds bapa = assign_bapa(layout);
        REQUIRE(static_cast<int>(seq.size()) == layout.total());
        REQUIRE(static_cast<int>(bapa.size()) == layout.total());

        // image span ids all equal the system length
        for (int t = i; t < i + j; ++t) CHECK(bapa[static_cast<size_t>(t)] == i);

        // balanced assignment shortens text-to-image distance by exactly j-1
        CHECK(seq.back() == i + j + k - 1);
        CHECK(bapa.back() == i + k);
        CHECK(seq.back() - bapa.back() == j - 1);

        // user span starts at i+1 and is strictly increasing
        CHECK(bapa[static_cast<size_t>(i + j)] == i + 1);
        for (int t = i + j + 1; t < layout.total(); ++t)
            CHECK(bapa[static_cast<size_t>(t)] == bapa[static_cast<size_t>(t - 1)] + 1);

        // schemes agree on the system span; ids are non-decreasing and start at 0
        for (int t = 0; t < i; ++t) {
            CHECK(seq[static_cast<size_t>(t)] == t);
            CHECK(bapa[static_cast<size_t>(t)] == t);
        }
        for (size_t t = 1; t < bapa.size(); ++t) CHECK(bapa[t] >= bapa[t - 1]);
        CHECK(bapa.front() == 0);
    }
}
