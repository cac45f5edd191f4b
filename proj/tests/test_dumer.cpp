#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "hiko/channel.hpp"
#include "hiko/dumer.hpp"
#include "hiko/rng.hpp"

using namespace hiko;
using Catch::Matchers::WithinAbs;

namespace {

// High-precision reference for log((1+e^(a+b))/(e^a+e^b)); long double keeps
// e^|a+b| finite for |a|,|b| <= 1e3.
double lse_reference(double a, double b) {
    const long double num = logl(1.0L + expl(static_cast<long double>(a) + b));
    const long double den = logl(expl(static_cast<long double>(a)) + expl(static_cast<long double>(b)));
    return static_cast<double>(num - den);
}

BitWord index_to_bits(std::size_t idx, std::size_t len) {
    BitWord bits(len);
    for (std::size_t j = 0; j < len; ++j) bits[j] = static_cast<std::uint8_t>((idx >> j) & 1);
    return bits;
}

}  // namespace

TEST_CASE("lse closed-form agreement") {
    CHECK(lse(0.0, 5.0) == 0.0);
    CHECK(lse(0.0, -3.7) == 0.0);
    CHECK_THAT(lse(3.0, 4.0), WithinAbs(2.687649778935551, 1e-9));
    CHECK_THAT(lse(30.0, 40.0), WithinAbs(lse_reference(30.0, 40.0), 1e-9));
    CHECK_THAT(lse(30.0, 40.0), WithinAbs(30.0, 1e-4));  // min-sum regime

    Philox rng(4);
    for (int trial = 0; trial < 500; ++trial) {
        const double a = 2000.0 * rng.next_unit() - 1000.0;
        const double b = 2000.0 * rng.next_unit() - 1000.0;
        const double got = lse(a, b);
        REQUIRE(std::isfinite(got));
        if (std::abs(a) <= 500 && std::abs(b) <= 500)
            REQUIRE_THAT(got, WithinAbs(lse_reference(a, b), 1e-9));
    }
}

TEST_CASE("lse algebraic properties") {
    Philox rng(12);
    for (int trial = 0; trial < 300; ++trial) {
        const double a = 30.0 * rng.next_unit() - 15.0;
        const double b = 30.0 * rng.next_unit() - 15.0;
        CHECK(lse(a, b) == lse(b, a));
        CHECK(std::abs(lse(a, b)) <= std::min(std::abs(a), std::abs(b)) + 1e-12);
        if (a != 0.0 && b != 0.0) {
            const double sign_product = (a > 0 ? 1.0 : -1.0) * (b > 0 ? 1.0 : -1.0);
            if (std::abs(lse(a, b)) > 1e-12) CHECK(lse(a, b) * sign_product > 0.0);
        }
        // independent closed form via tanh
        const double tanh_form = 2.0 * std::atanh(std::tanh(a / 2.0) * std::tanh(b / 2.0));
        CHECK_THAT(lse(a, b), WithinAbs(tanh_form, 1e-7));
    }
}

TEST_CASE("lse partial derivatives match finite differences") {
    Philox rng(21);
    for (int trial = 0; trial < 100; ++trial) {
        const double a = 10.0 * rng.next_unit() - 5.0;
        const double b = 10.0 * rng.next_unit() - 5.0;
        const double h = 1e-6;
        CHECK_THAT(lse_grad_a(a, b), WithinAbs((lse(a + h, b) - lse(a - h, b)) / (2 * h), 1e-6));
        CHECK_THAT(lse_grad_b(a, b), WithinAbs((lse(a, b + h) - lse(a, b - h)) / (2 * h), 1e-6));
    }
}

TEST_CASE("hard_decision tie rule") {
    CHECK(hard_decision(LlrVector{1.5, -0.1}) == BitWord{0, 1});
    CHECK(hard_decision(LlrVector{0.0}) == BitWord{0});
    CHECK(hard_decision(LlrVector{-0.0}) == BitWord{0});
}

TEST_CASE("dumer leaf behavior") {
    // Repetition code RM(3,0): bit LLR is the coordinate sum.
    const CodeTree rep = build_plotkin_tree(3, 0);
    const auto rep_result = dumer_decode(rep, LlrVector{2, 2, -1, 0.5, 1, 1, 1, 1});
    CHECK_THAT(rep_result.msg_llrs[0], WithinAbs(7.5, 1e-12));
    CHECK(rep_result.msg == BitWord{0});

    // Full-rate RM(1,1): passthrough.
    const CodeTree full = build_plotkin_tree(1, 1);
    const auto full_result = dumer_decode(full, LlrVector{-3.0, 4.0});
    CHECK(full_result.msg_llrs == LlrVector{-3.0, 4.0});
    CHECK(full_result.msg == BitWord{1, 0});

    CHECK_THROWS_AS(dumer_decode(full, LlrVector{1.0}), std::invalid_argument);
}

TEST_CASE("dumer recovers every message at zero noise") {
    for (auto [m, r] : {std::pair{3, 2}, std::pair{4, 2}}) {
        const CodeTree tree = build_plotkin_tree(m, r);
        for (std::size_t idx = 0; idx < (std::size_t{1} << tree.k()); ++idx) {
            const BitWord msg = index_to_bits(idx, tree.k());
            const BitWord word = rm_encode(tree, msg);
            LlrVector llr(tree.n());
            for (std::size_t i = 0; i < tree.n(); ++i) llr[i] = kLlrMax * (1.0 - 2.0 * word[i]);
            REQUIRE(dumer_decode(tree, llr).msg == msg);
        }
    }
}

TEST_CASE("dumer recovers RM(3,1) from bare bipolar inputs") {
    const CodeTree tree = build_plotkin_tree(3, 1);
    for (std::size_t idx = 0; idx < 16; ++idx) {
        const BitWord msg = index_to_bits(idx, 4);
        const BitWord word = rm_encode(tree, msg);
        LlrVector llr(8);
        for (std::size_t i = 0; i < 8; ++i) llr[i] = word[i] ? -1.0 : 1.0;
        REQUIRE(dumer_decode(tree, llr).msg == msg);
    }
}

TEST_CASE("dumer corrects noise below half the minimum distance") {
    // RM(3,1) has d_min = 4: any single flipped coordinate must be corrected.
    const CodeTree tree = build_plotkin_tree(3, 1);
    for (std::size_t idx = 0; idx < 16; ++idx) {
        const BitWord msg = index_to_bits(idx, 4);
        const BitWord word = rm_encode(tree, msg);
        for (std::size_t flip = 0; flip < 8; ++flip) {
            LlrVector llr(8);
            for (std::size_t i = 0; i < 8; ++i) {
                const double sign = word[i] ? -1.0 : 1.0;
                llr[i] = (i == flip ? -sign : sign) * 4.0;
            }
            REQUIRE(dumer_decode(tree, llr).msg == msg);
        }
    }
}
