// BPSK AWGN channel: modulation, power normalization, SNR conversions,
// noise injection, and LLR computation. All LLRs follow the convention
// L = log P(bit = 0) / P(bit = 1), with bit 0 mapped to +1.
#pragma once

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "hiko/codes.hpp"
#include "hiko/rng.hpp"

namespace hiko {

using RealWord = std::vector<double>;
using LlrVector = std::vector<double>;
using Mat = Eigen::MatrixXd;

enum class SnrConvention {
    EbN0,  // sigma = sqrt(1 / (2 * rate * 10^(snr/10)))
    EsN0,  // per-sample SNR: sigma = 10^(-snr/20)
};

inline double snr_to_sigma(double snr_db, double rate) {
    if (!(rate > 0.0) || rate > 1.0) throw std::invalid_argument("snr_to_sigma: rate must be in (0, 1]");
    return std::sqrt(1.0 / (2.0 * rate * std::pow(10.0, snr_db / 10.0)));
}

inline double snr_to_sigma(double snr_db, double rate, SnrConvention conv) {
    if (conv == SnrConvention::EbN0) return snr_to_sigma(snr_db, rate);
    return std::pow(10.0, -snr_db / 20.0);
}

struct ChannelConfig {
    double snr_db = 0.0;
    double rate = 0.5;
    double sigma = 1.0;
    std::uint64_t seed = 0;

    static ChannelConfig from_snr(double snr_db, double rate, std::uint64_t seed,
                                  SnrConvention conv = SnrConvention::EbN0) {
        ChannelConfig cfg;
        cfg.snr_db = snr_db;
        cfg.rate = rate;
        cfg.sigma = snr_to_sigma(snr_db, rate, conv);
        cfg.seed = seed;
        return cfg;
    }
};

inline RealWord modulate_bpsk(const BitWord& bits) {
    RealWord out(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i) out[i] = bits[i] ? -1.0 : 1.0;
    return out;
}

// Scale the whole batch by one factor so the mean squared symbol is 1.
// Returns the factor applied.
inline double normalize_power(std::vector<RealWord>& batch) {
    if (batch.empty()) throw std::invalid_argument("normalize_power: empty batch");
    double sum_sq = 0.0;
    std::size_t count = 0;
    for (const auto& word : batch) {
        for (double s : word) sum_sq += s * s;
        count += word.size();
    }
    if (count == 0 || sum_sq == 0.0) throw std::invalid_argument("normalize_power: all-zero batch");
    const double scale = 1.0 / std::sqrt(sum_sq / static_cast<double>(count));
    for (auto& word : batch)
        for (double& s : word) s *= scale;
    return scale;
}

inline double normalize_power(Mat& batch) {
    if (batch.size() == 0) throw std::invalid_argument("normalize_power: empty batch");
    const double mean_sq = batch.array().square().sum() / static_cast<double>(batch.size());
    if (mean_sq == 0.0) throw std::invalid_argument("normalize_power: all-zero batch");
    const double scale = 1.0 / std::sqrt(mean_sq);
    batch *= scale;
    return scale;
}

// Gradient of a loss through y = x * scale(x) with scale = 1/sqrt(mean(x^2)):
// dx_i = scale * (g_i - y_i * mean(g . y)).
inline Mat normalize_power_backward(const Mat& normalized, double scale, const Mat& grad) {
    const double coupling = (grad.array() * normalized.array()).sum() / static_cast<double>(normalized.size());
    return scale * (grad.array() - coupling * normalized.array()).matrix();
}

inline void awgn_inplace(RealWord& x, double sigma, Philox& rng) {
    if (!(sigma >= 0.0)) throw std::invalid_argument("awgn: sigma must be non-negative");
    for (double& s : x) s += sigma * rng.next_gaussian();
}

inline RealWord awgn(const RealWord& x, double sigma, Philox& rng) {
    RealWord y = x;
    awgn_inplace(y, sigma, rng);
    return y;
}

inline void awgn_inplace(Mat& x, double sigma, Philox& rng) {
    if (!(sigma >= 0.0)) throw std::invalid_argument("awgn: sigma must be non-negative");
    // Row-major fill so per-word draws match the vector overload.
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) += sigma * rng.next_gaussian();
}

inline LlrVector llr_from_awgn(const RealWord& y, double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("llr_from_awgn: sigma must be positive");
    const double scale = 2.0 / (sigma * sigma);
    LlrVector llr(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) llr[i] = scale * y[i];
    return llr;
}

inline Mat llr_from_awgn(const Mat& y, double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("llr_from_awgn: sigma must be positive");
    return y * (2.0 / (sigma * sigma));
}

}  // namespace hiko
