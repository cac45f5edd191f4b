#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "hiko/channel.hpp"
#include "hiko/dumer.hpp"

using namespace hiko;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("bpsk maps 0 to +1 and 1 to -1") {
    CHECK(modulate_bpsk({0, 0}) == RealWord{1.0, 1.0});
    CHECK(modulate_bpsk({1, 0, 1}) == RealWord{-1.0, 1.0, -1.0});
}

TEST_CASE("normalize_power") {
    SECTION("bipolar batch is unchanged") {
        std::vector<RealWord> batch{{1, -1, 1}, {-1, -1, 1}};
        normalize_power(batch);
        CHECK(batch[0] == RealWord{1, -1, 1});
    }
    SECTION("single word") {
        std::vector<RealWord> batch{{2.0, 0.0}};
        normalize_power(batch);
        CHECK_THAT(batch[0][0], WithinRel(std::sqrt(2.0), 1e-12));
        CHECK(batch[0][1] == 0.0);
    }
    SECTION("scale invariance and idempotence") {
        Philox rng(3);
        Mat a(4, 8);
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = 2.0 * rng.next_gaussian() + 0.5;
        Mat b = 3.7 * a;
        normalize_power(a);
        normalize_power(b);
        CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
        const double mean_sq = a.array().square().sum() / static_cast<double>(a.size());
        CHECK_THAT(mean_sq, WithinAbs(1.0, 1e-9));
        Mat c = a;
        normalize_power(c);
        CHECK((a - c).cwiseAbs().maxCoeff() < 1e-12);
    }
    SECTION("all-zero batch is rejected") {
        std::vector<RealWord> batch{{0.0, 0.0}};
        CHECK_THROWS_AS(normalize_power(batch), std::invalid_argument);
        std::vector<RealWord> empty;
        CHECK_THROWS_AS(normalize_power(empty), std::invalid_argument);
    }
}

TEST_CASE("normalize_power backward matches finite differences") {
    Philox rng(17);
    Mat x(3, 5);
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = rng.next_gaussian() + 0.2;
    Mat upstream(3, 5);
    for (Eigen::Index i = 0; i < upstream.rows(); ++i)
        for (Eigen::Index j = 0; j < upstream.cols(); ++j) upstream(i, j) = rng.next_gaussian();

    Mat y = x;
    const double scale = normalize_power(y);
    const Mat grad = normalize_power_backward(y, scale, upstream);

    const double h = 1e-6;
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            Mat xp = x, xm = x;
            xp(i, j) += h;
            xm(i, j) -= h;
            normalize_power(xp);
            normalize_power(xm);
            const double fd =
                ((xp.array() * upstream.array()).sum() - (xm.array() * upstream.array()).sum()) / (2 * h);
            CHECK_THAT(grad(i, j), WithinAbs(fd, 1e-5));
        }
}

TEST_CASE("snr_to_sigma") {
    CHECK_THAT(snr_to_sigma(0.0, 0.5), WithinRel(1.0, 1e-12));
    CHECK_THAT(snr_to_sigma(-1.0, 93.0 / 256.0), WithinRel(1.3163261545928084, 1e-12));
    CHECK(snr_to_sigma(60.0, 0.5) < 1e-2);
    CHECK_THROWS_AS(snr_to_sigma(0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(snr_to_sigma(0.0, 1.5), std::invalid_argument);
    // Per-sample convention: sigma = 10^(-snr/20), rate plays no part.
    CHECK_THAT(snr_to_sigma(0.0, 0.25, SnrConvention::EsN0), WithinRel(1.0, 1e-12));
    CHECK_THAT(snr_to_sigma(6.0, 0.25, SnrConvention::EsN0), WithinRel(std::pow(10.0, -0.3), 1e-12));
}

TEST_CASE("awgn statistics and determinism") {
    const double sigma = 1.0;
    Philox rng(99);
    const std::size_t n = 1u << 20;
    RealWord x(n, 0.0);
    RealWord y = awgn(x, sigma, rng);
    double sum = 0.0, sum_sq = 0.0;
    for (double v : y) {
        sum += v;
        sum_sq += v * v;
    }
    const double mean = sum / static_cast<double>(n);
    const double stddev = std::sqrt(sum_sq / static_cast<double>(n) - mean * mean);
    CHECK_THAT(mean, WithinAbs(0.0, 0.01));
    CHECK_THAT(stddev, WithinRel(sigma, 0.01));

    Philox r1(5, 3), r2(5, 3);
    RealWord a{1.0, -1.0, 0.5};
    CHECK(awgn(a, 0.7, r1) == awgn(a, 0.7, r2));

    Philox r3(5);
    RealWord near = awgn(a, 1e-15, r3);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK_THAT(near[i], WithinAbs(a[i], 1e-12));
}

TEST_CASE("llr_from_awgn") {
    CHECK(llr_from_awgn(RealWord{0.0}, 1.0)[0] == 0.0);
    CHECK_THAT(llr_from_awgn(RealWord{1.0}, 1.0)[0], WithinRel(2.0, 1e-12));
    Philox rng(1);
    RealWord y(64);
    for (auto& v : y) v = rng.next_gaussian();
    const double sigma = 0.8;
    const LlrVector l = llr_from_awgn(y, sigma);
    for (std::size_t i = 0; i < y.size(); ++i) {
        CHECK(std::signbit(l[i]) == std::signbit(y[i]));
        // linear in y
        CHECK_THAT(llr_from_awgn(RealWord{2.5 * y[i]}, sigma)[0], WithinRel(2.5 * l[i], 1e-12));
    }
}

TEST_CASE("noiseless round trip and hard-decision error rate") {
    Philox rng(8);
    BitWord bits(128);
    for (auto& b : bits) b = static_cast<std::uint8_t>(rng.next_bit());
    RealWord tx = modulate_bpsk(bits);
    const LlrVector llr = llr_from_awgn(tx, 0.5);
    CHECK(hard_decision(llr) == bits);

    // At sigma = 1 the per-bit error rate of uncoded BPSK is Q(1).
    const double sigma = 1.0;
    const std::size_t trials = 100000;
    std::size_t errors = 0;
    Philox noise(123);
    for (std::size_t i = 0; i < trials; ++i) {
        const double y = 1.0 + sigma * noise.next_gaussian();
        errors += y < 0.0;
    }
    const double q1 = 0.15865525393145705;
    const double emp = static_cast<double>(errors) / static_cast<double>(trials);
    CHECK(emp > 0.9 * q1);
    CHECK(emp < 1.1 * q1);
}
