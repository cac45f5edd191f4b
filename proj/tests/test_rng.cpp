#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "hiko/rng.hpp"

using hiko::Philox;

TEST_CASE("philox4x32-10 known-answer vectors") {
    // Reference vectors from the Random123 distribution.
    CHECK(Philox::block({0, 0, 0, 0}, {0, 0}) ==
          Philox::Block{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    CHECK(Philox::block({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                        {0xffffffffu, 0xffffffffu}) ==
          Philox::Block{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    CHECK(Philox::block({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                        {0xa4093822u, 0x299f31d0u}) ==
          Philox::Block{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("identical seed and stream replay the sequence") {
    Philox a(42, 7), b(42, 7);
    for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("distinct streams are distinct") {
    Philox a(42, 0), b(42, 1);
    int same = 0;
    for (int i = 0; i < 64; ++i) same += a.next_u32() == b.next_u32();
    CHECK(same < 4);

    Philox base(9, 5);
    std::set<std::uint64_t> streams;
    for (std::uint64_t salt = 0; salt < 100; ++salt) streams.insert(base.derive(salt).stream());
    CHECK(streams.size() == 100);
}

TEST_CASE("uniform draws live in [0,1) with the right mean") {
    Philox rng(2024);
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.next_unit();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    CHECK_THAT(sum / n, Catch::Matchers::WithinAbs(0.5, 0.005));
}

TEST_CASE("gaussian draws have unit variance") {
    Philox rng(7);
    double sum = 0.0, sum_sq = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double g = rng.next_gaussian();
        sum += g;
        sum_sq += g * g;
    }
    const double mean = sum / n;
    const double var = sum_sq / n - mean * mean;
    CHECK_THAT(mean, Catch::Matchers::WithinAbs(0.0, 0.01));
    CHECK_THAT(std::sqrt(var), Catch::Matchers::WithinAbs(1.0, 0.01));
}
