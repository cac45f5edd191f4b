// Monte Carlo BER/BLER measurement, pairwise codeword-distance analysis,
// Gaussian-codebook baselines, and sign quantization.
//
// BER points parallelize over minibatch tasks; every task draws from its own
// counter-based substream, so the sampled noise is a pure function of
// (seed, point, task). Exact bit budgets are deterministic at one worker.
#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <thread>
#include <vector>

#include "hiko/channel.hpp"
#include "hiko/codes.hpp"
#include "hiko/dumer.hpp"
#include "hiko/ko_codec.hpp"

namespace hiko {

struct BerPoint {
    double snr_db = 0.0;
    std::uint64_t bits_tested = 0;
    std::uint64_t bit_errors = 0;
    std::uint64_t blocks_tested = 0;
    std::uint64_t block_errors = 0;
    double ber = 0.0;
    double bler = 0.0;
};

// A codec under test: batch message rows to normalized channel symbols, and
// batch LLR rows back to hard bit rows.
struct CodecOps {
    std::size_t k = 0;
    std::size_t n = 0;
    std::function<Matrix(const Matrix&)> encode;
    std::function<Matrix(const Matrix&)> decode;
};

inline CodecOps rm_codec_ops(int m, int r) {
    auto tree = std::make_shared<const CodeTree>(build_plotkin_tree(m, r));
    CodecOps ops;
    ops.k = tree->k();
    ops.n = tree->n();
    ops.encode = [tree](const Matrix& msgs) {
        Matrix out(msgs.rows(), static_cast<Eigen::Index>(tree->n()));
        BitWord msg(tree->k());
        for (Eigen::Index row = 0; row < msgs.rows(); ++row) {
            for (Eigen::Index j = 0; j < msgs.cols(); ++j)
                msg[static_cast<std::size_t>(j)] = msgs(row, j) != 0.0 ? 1 : 0;
            const BitWord word = rm_encode(*tree, msg);
            for (std::size_t i = 0; i < word.size(); ++i)
                out(row, static_cast<Eigen::Index>(i)) = word[i] ? -1.0 : 1.0;
        }
        normalize_power(out);  // exact identity for bipolar words
        return out;
    };
    ops.decode = [tree](const Matrix& llrs) {
        Matrix out(llrs.rows(), static_cast<Eigen::Index>(tree->k()));
        std::vector<double> row(tree->n());
        for (Eigen::Index i = 0; i < llrs.rows(); ++i) {
            for (std::size_t j = 0; j < tree->n(); ++j) row[j] = llrs(i, static_cast<Eigen::Index>(j));
            const BitWord msg = dumer_decode(*tree, row).msg;
            for (std::size_t j = 0; j < msg.size(); ++j) out(i, static_cast<Eigen::Index>(j)) = msg[j];
        }
        return out;
    };
    return ops;
}

inline CodecOps hybrid_codec_ops(NeuralCodec codec) {
    set_train_mode(codec, false, false);
    auto shared = std::make_shared<const NeuralCodec>(std::move(codec));
    CodecOps ops;
    ops.k = shared->k();
    ops.n = shared->n();
    ops.encode = [shared](const Matrix& msgs) {
        Matrix out = ko_encode_raw(*shared, msgs);
        normalize_power(out);
        return out;
    };
    ops.decode = [shared](const Matrix& llrs) {
        const Matrix soft = ko_decode_hybrid(*shared, llrs);
        return Matrix(soft.unaryExpr([](double v) { return v < 0.0 ? 1.0 : 0.0; }));
    };
    return ops;
}

inline CodecOps uncoded_ops(std::size_t n) {
    CodecOps ops;
    ops.k = n;
    ops.n = n;
    ops.encode = [](const Matrix& msgs) { return Matrix(1.0 - 2.0 * msgs.array()); };
    ops.decode = [](const Matrix& llrs) {
        return Matrix(llrs.unaryExpr([](double v) { return v < 0.0 ? 1.0 : 0.0; }));
    };
    return ops;
}

namespace detail {

inline constexpr std::uint64_t kSaltBer = 0xBE5;
inline constexpr std::uint64_t kSaltDistance = 0xD15;

struct ErrorCounts {
    std::uint64_t bits = 0, bit_errors = 0, blocks = 0, block_errors = 0;
};

inline ErrorCounts run_ber_task(const CodecOps& ops, double sigma, Eigen::Index blocks, Philox& rng) {
    const Eigen::Index k = static_cast<Eigen::Index>(ops.k);
    Matrix msgs(blocks, k);
    for (Eigen::Index i = 0; i < blocks; ++i)
        for (Eigen::Index j = 0; j < k; ++j) msgs(i, j) = static_cast<double>(rng.next_bit());
    Matrix x = ops.encode(msgs);
    awgn_inplace(x, sigma, rng);
    const Matrix decoded = ops.decode(llr_from_awgn(x, sigma));
    ErrorCounts counts;
    counts.blocks = static_cast<std::uint64_t>(blocks);
    counts.bits = static_cast<std::uint64_t>(blocks) * static_cast<std::uint64_t>(ops.k);
    for (Eigen::Index i = 0; i < blocks; ++i) {
        std::uint64_t row_errors = 0;
        for (Eigen::Index j = 0; j < k; ++j) row_errors += decoded(i, j) != msgs(i, j) ? 1u : 0u;
        counts.bit_errors += row_errors;
        counts.block_errors += row_errors > 0 ? 1u : 0u;
    }
    return counts;
}

}  // namespace detail

// One Monte Carlo point. Runs until min_bits are tested and min_errors bit
// errors are seen, hard-capped at 100 * min_bits.
inline BerPoint measure_ber_point(const CodecOps& ops, double snr_db, std::uint64_t min_bits,
                                  std::uint64_t min_errors, std::uint64_t seed, std::uint64_t point_id,
                                  SnrConvention conv = SnrConvention::EbN0, int workers = 1,
                                  Eigen::Index blocks_per_task = 256) {
    const double rate = static_cast<double>(ops.k) / static_cast<double>(ops.n);
    const double sigma = snr_to_sigma(snr_db, rate, conv);
    std::atomic<std::uint64_t> next_task{0};
    std::atomic<std::uint64_t> bits{0}, bit_errors{0}, blocks{0}, block_errors{0};

    auto stop = [&]() {
        const std::uint64_t b = bits.load(std::memory_order_relaxed);
        const std::uint64_t e = bit_errors.load(std::memory_order_relaxed);
        return (b >= min_bits && e >= min_errors) || b >= 100 * min_bits;
    };
    auto work = [&]() {
        while (!stop()) {
            const std::uint64_t task = next_task.fetch_add(1, std::memory_order_relaxed);
            Philox rng = Philox(seed).derive(Philox::mix({detail::kSaltBer, point_id, task}));
            const detail::ErrorCounts counts = detail::run_ber_task(ops, sigma, blocks_per_task, rng);
            bits.fetch_add(counts.bits, std::memory_order_relaxed);
            bit_errors.fetch_add(counts.bit_errors, std::memory_order_relaxed);
            blocks.fetch_add(counts.blocks, std::memory_order_relaxed);
            block_errors.fetch_add(counts.block_errors, std::memory_order_relaxed);
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }

    BerPoint point;
    point.snr_db = snr_db;
    point.bits_tested = bits.load();
    point.bit_errors = bit_errors.load();
    point.blocks_tested = blocks.load();
    point.block_errors = block_errors.load();
    point.ber = static_cast<double>(point.bit_errors) / static_cast<double>(point.bits_tested);
    point.bler = static_cast<double>(point.block_errors) / static_cast<double>(point.blocks_tested);
    return point;
}

inline std::vector<BerPoint> ber_curve(const CodecOps& ops, const std::vector<double>& snrs_db,
                                       std::uint64_t min_bits, std::uint64_t min_errors,
                                       std::uint64_t seed, SnrConvention conv = SnrConvention::EbN0,
                                       int workers = 1, Eigen::Index blocks_per_task = 256) {
    if (snrs_db.empty()) throw std::invalid_argument("ber_curve: empty SNR list");
    std::vector<BerPoint> points;
    points.reserve(snrs_db.size());
    for (std::size_t i = 0; i < snrs_db.size(); ++i)
        points.push_back(measure_ber_point(ops, snrs_db[i], min_bits, min_errors, seed,
                                           static_cast<std::uint64_t>(i), conv, workers, blocks_per_task));
    return points;
}

// ---------------------------------------------------------------------------
// Distance analysis

struct DistanceHistogram {
    std::vector<double> bin_edges;       // bins + 1 edges, equal width over [min, max]
    std::vector<std::uint64_t> counts;   // one per bin
    std::size_t n_pairs = 0;
    double mean = 0.0;
    double std_dev = 0.0;
    double min = 0.0;
    double max = 0.0;
};

// Draws batches of pair distances; rng threads through consecutive calls.
using PairDistanceSampler = std::function<std::vector<double>(std::size_t count, Philox& rng)>;

// Pairs of distinct random messages mapped through the codec.
inline PairDistanceSampler codec_distance_sampler(CodecOps ops) {
    return [ops = std::move(ops)](std::size_t count, Philox& rng) {
        const Eigen::Index k = static_cast<Eigen::Index>(ops.k);
        Matrix msgs(static_cast<Eigen::Index>(2 * count), k);
        for (std::size_t p = 0; p < count; ++p) {
            const Eigen::Index a = static_cast<Eigen::Index>(2 * p);
            for (Eigen::Index j = 0; j < k; ++j) msgs(a, j) = static_cast<double>(rng.next_bit());
            do {
                for (Eigen::Index j = 0; j < k; ++j) msgs(a + 1, j) = static_cast<double>(rng.next_bit());
            } while (msgs.row(a + 1) == msgs.row(a));
        }
        const Matrix words = ops.encode(msgs);
        std::vector<double> distances(count);
        for (std::size_t p = 0; p < count; ++p)
            distances[p] = (words.row(static_cast<Eigen::Index>(2 * p)) -
                            words.row(static_cast<Eigen::Index>(2 * p + 1)))
                               .norm();
        return distances;
    };
}

// count i.i.d. standard-normal words of length n, power-normalized.
inline Matrix gaussian_codebook(std::size_t n, std::size_t count, Philox& rng) {
    if (count < 2) throw std::invalid_argument("gaussian_codebook: need count >= 2");
    Matrix words(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < words.rows(); ++i)
        for (Eigen::Index j = 0; j < words.cols(); ++j) words(i, j) = rng.next_gaussian();
    normalize_power(words);
    return words;
}

// Pairs of distinct random indices into a fixed codebook.
inline PairDistanceSampler codebook_distance_sampler(Matrix codebook) {
    if (codebook.rows() < 2) throw std::invalid_argument("codebook sampler: need >= 2 words");
    return [codebook = std::move(codebook)](std::size_t count, Philox& rng) {
        const auto rows = static_cast<std::uint64_t>(codebook.rows());
        std::vector<double> distances(count);
        for (std::size_t p = 0; p < count; ++p) {
            const std::uint64_t i = rng.next_u64() % rows;
            std::uint64_t j = i;
            while (j == i) j = rng.next_u64() % rows;
            distances[p] = (codebook.row(static_cast<Eigen::Index>(i)) -
                            codebook.row(static_cast<Eigen::Index>(j)))
                               .norm();
        }
        return distances;
    };
}

inline std::vector<double> sample_pair_distances(const PairDistanceSampler& sampler,
                                                 std::size_t n_pairs, Philox rng,
                                                 std::size_t batch_pairs = 512) {
    std::vector<double> all;
    all.reserve(n_pairs);
    while (all.size() < n_pairs) {
        const std::size_t take = std::min(batch_pairs, n_pairs - all.size());
        const std::vector<double> batch = sampler(take, rng);
        all.insert(all.end(), batch.begin(), batch.end());
    }
    return all;
}

inline DistanceHistogram make_histogram(const std::vector<double>& distances, int bins = 64) {
    if (distances.empty()) throw std::invalid_argument("make_histogram: no distances");
    DistanceHistogram hist;
    hist.n_pairs = distances.size();
    double lo = distances[0], hi = distances[0], sum = 0.0, sum_sq = 0.0;
    for (double d : distances) {
        lo = std::min(lo, d);
        hi = std::max(hi, d);
        sum += d;
        sum_sq += d * d;
    }
    if (!(hi > lo)) throw std::invalid_argument("make_histogram: zero-width distance range");
    hist.min = lo;
    hist.max = hi;
    hist.mean = sum / static_cast<double>(distances.size());
    hist.std_dev = std::sqrt(std::max(0.0, sum_sq / static_cast<double>(distances.size()) -
                                               hist.mean * hist.mean));
    hist.bin_edges.resize(static_cast<std::size_t>(bins) + 1);
    for (int b = 0; b <= bins; ++b)
        hist.bin_edges[static_cast<std::size_t>(b)] = lo + (hi - lo) * static_cast<double>(b) / bins;
    hist.counts.assign(static_cast<std::size_t>(bins), 0);
    for (double d : distances) {
        auto bin = static_cast<std::size_t>((d - lo) / (hi - lo) * bins);
        if (bin >= static_cast<std::size_t>(bins)) bin = static_cast<std::size_t>(bins) - 1;
        hist.counts[bin] += 1;
    }
    return hist;
}

// Draws n_pairs distances and bins them; the spec'd one-call form.
inline DistanceHistogram pairwise_distances(const PairDistanceSampler& sampler, std::size_t n_pairs,
                                            Philox rng, int bins = 64) {
    if (n_pairs < 2) throw std::invalid_argument("pairwise_distances: need n_pairs >= 2");
    return make_histogram(sample_pair_distances(sampler, n_pairs, rng), bins);
}

inline std::size_t count_distinct(std::vector<double> values, double eps = 1e-9) {
    for (double& v : values) v = std::round(v / eps);
    std::sort(values.begin(), values.end());
    return static_cast<std::size_t>(std::unique(values.begin(), values.end()) - values.begin());
}

// ---------------------------------------------------------------------------
// Quantization: sign to +-1, zero to +1; power is already unit for bipolar.

inline Matrix quantize_codeword(const Matrix& x) {
    return x.unaryExpr([](double v) { return v < 0.0 ? -1.0 : 1.0; });
}

inline RealWord quantize_codeword(const RealWord& x) {
    RealWord out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] < 0.0 ? -1.0 : 1.0;
    return out;
}

// Codec ops with the encoder output quantized to bipolar.
inline CodecOps quantized_ops(CodecOps inner) {
    CodecOps ops = inner;
    ops.encode = [inner](const Matrix& msgs) { return quantize_codeword(inner.encode(msgs)); };
    return ops;
}

}  // namespace hiko
