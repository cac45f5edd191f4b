// Coordinate-block networks and their training machinery: a 4-affine-layer
// MLP (3 SELU hidden layers of width H, inverted dropout, optional learnable
// skip scale), exact reverse-mode gradients, Adam, and the one-cycle
// learning-rate schedule.
//
// Matrices are batch-major: each row is one sample.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "hiko/rng.hpp"

namespace hiko {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kSeluLambda = 1.0507009873554804934193349852946;
inline constexpr double kSeluAlpha = 1.6732632423543772848170429916717;

inline double selu(double x) {
    return x > 0.0 ? kSeluLambda * x : kSeluLambda * kSeluAlpha * std::expm1(x);
}

inline double selu_grad(double x) {
    return x > 0.0 ? kSeluLambda : kSeluLambda * kSeluAlpha * std::exp(x);
}

struct Mlp {
    int in_dim = 0;
    int hidden = 0;
    int out_dim = 0;
    double dropout_rate = 0.0;
    bool train_mode = false;

    Matrix w1, w2, w3, w4;  // (in,H), (H,H), (H,H), (H,out)
    Vector b1, b2, b3, b4;

    bool has_alpha = false;
    double alpha = 1.0;  // skip scale; applied by the owning tree node, not here

    static Mlp zeros(int in_dim, int hidden, int out_dim, double dropout_rate, bool with_alpha) {
        if (in_dim < 1 || hidden < 1 || out_dim < 1)
            throw std::invalid_argument("Mlp: dimensions must be positive");
        if (!(dropout_rate >= 0.0) || dropout_rate >= 1.0)
            throw std::invalid_argument("Mlp: dropout_rate must be in [0, 1)");
        Mlp net;
        net.in_dim = in_dim;
        net.hidden = hidden;
        net.out_dim = out_dim;
        net.dropout_rate = dropout_rate;
        net.has_alpha = with_alpha;
        net.w1 = Matrix::Zero(in_dim, hidden);
        net.w2 = Matrix::Zero(hidden, hidden);
        net.w3 = Matrix::Zero(hidden, hidden);
        net.w4 = Matrix::Zero(hidden, out_dim);
        net.b1 = Vector::Zero(hidden);
        net.b2 = Vector::Zero(hidden);
        net.b3 = Vector::Zero(hidden);
        net.b4 = Vector::Zero(out_dim);
        return net;
    }

    std::size_t parameter_tally() const {
        std::size_t count = static_cast<std::size_t>(w1.size() + w2.size() + w3.size() + w4.size() +
                                                     b1.size() + b2.size() + b3.size() + b4.size());
        return count + (has_alpha ? 1 : 0);
    }
};

// (in+1)H + 2(H+1)H + (H+1)out, plus 1 for the skip scale.
inline std::size_t param_count_general(std::size_t in_dim, std::size_t hidden, std::size_t out_dim,
                                       bool with_alpha) {
    return (in_dim + 1) * hidden + 2 * (hidden + 1) * hidden + (hidden + 1) * out_dim +
           (with_alpha ? 1 : 0);
}

// Count for a node network on blocks of length l (input 2l, output l).
inline std::size_t param_count(std::size_t l, std::size_t hidden, bool with_alpha) {
    if (l < 1 || hidden < 1) throw std::invalid_argument("param_count: l, H must be >= 1");
    return param_count_general(2 * l, hidden, l, with_alpha);
}

namespace detail {

inline void fill_gaussian(Matrix& m, double std_dev, Philox& rng) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = std_dev * rng.next_gaussian();
}

inline Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, Philox& rng) {
    const double keep_scale = 1.0 / (1.0 - rate);
    Matrix mask(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j)
            mask(i, j) = rng.next_unit() < rate ? 0.0 : keep_scale;
    return mask;
}

}  // namespace detail

// Hidden layers ~ N(0, 1/fan_in); output layer scaled by out_scale (0 makes
// the network the zero function at init, anchoring the classical reduction).
inline Mlp make_mlp(int in_dim, int hidden, int out_dim, double dropout_rate, bool with_alpha,
                    Philox& rng, double out_scale = 0.0) {
    Mlp net = Mlp::zeros(in_dim, hidden, out_dim, dropout_rate, with_alpha);
    detail::fill_gaussian(net.w1, 1.0 / std::sqrt(static_cast<double>(in_dim)), rng);
    detail::fill_gaussian(net.w2, 1.0 / std::sqrt(static_cast<double>(hidden)), rng);
    detail::fill_gaussian(net.w3, 1.0 / std::sqrt(static_cast<double>(hidden)), rng);
    if (out_scale != 0.0)
        detail::fill_gaussian(net.w4, out_scale / std::sqrt(static_cast<double>(hidden)), rng);
    net.alpha = 1.0;
    return net;
}

// Fill every tensor (output layer and biases included) with Gaussians; used
// where a generic non-degenerate network is wanted, e.g. gradient checks.
inline void randomize_mlp(Mlp& net, Philox& rng, double scale = 1.0) {
    detail::fill_gaussian(net.w1, scale / std::sqrt(static_cast<double>(net.in_dim)), rng);
    detail::fill_gaussian(net.w2, scale / std::sqrt(static_cast<double>(net.hidden)), rng);
    detail::fill_gaussian(net.w3, scale / std::sqrt(static_cast<double>(net.hidden)), rng);
    detail::fill_gaussian(net.w4, scale / std::sqrt(static_cast<double>(net.hidden)), rng);
    for (auto* b : {&net.b1, &net.b2, &net.b3, &net.b4})
        for (Eigen::Index i = 0; i < b->size(); ++i) (*b)(i) = 0.1 * scale * rng.next_gaussian();
    if (net.has_alpha) net.alpha = 1.0 + 0.1 * scale * rng.next_gaussian();
}

struct MlpCache {
    Matrix x;              // input rows
    Matrix z1, z2, z3;     // pre-activations
    Matrix h1, h2, h3;     // post-SELU, post-dropout activations
    Matrix d1, d2, d3;     // dropout multipliers (empty in eval mode)
    bool dropped = false;
};

// Forward pass. rng is required when train_mode && dropout_rate > 0.
inline Matrix mlp_forward(const Mlp& net, const Matrix& x, MlpCache* cache = nullptr,
                          Philox* rng = nullptr) {
    if (x.cols() != net.in_dim) throw std::invalid_argument("mlp_forward: input width mismatch");
    const bool drop = net.train_mode && net.dropout_rate > 0.0;
    if (drop && rng == nullptr) throw std::invalid_argument("mlp_forward: dropout needs an rng");

    Matrix z1 = (x * net.w1).rowwise() + net.b1.transpose();
    Matrix h1 = z1.unaryExpr([](double v) { return selu(v); });
    Matrix d1;
    if (drop) {
        d1 = detail::dropout_mask(h1.rows(), h1.cols(), net.dropout_rate, *rng);
        h1.array() *= d1.array();
    }
    Matrix z2 = (h1 * net.w2).rowwise() + net.b2.transpose();
    Matrix h2 = z2.unaryExpr([](double v) { return selu(v); });
    Matrix d2;
    if (drop) {
        d2 = detail::dropout_mask(h2.rows(), h2.cols(), net.dropout_rate, *rng);
        h2.array() *= d2.array();
    }
    Matrix z3 = (h2 * net.w3).rowwise() + net.b3.transpose();
    Matrix h3 = z3.unaryExpr([](double v) { return selu(v); });
    Matrix d3;
    if (drop) {
        d3 = detail::dropout_mask(h3.rows(), h3.cols(), net.dropout_rate, *rng);
        h3.array() *= d3.array();
    }
    Matrix out = (h3 * net.w4).rowwise() + net.b4.transpose();

    if (cache) {
        cache->x = x;
        cache->z1 = std::move(z1);
        cache->z2 = std::move(z2);
        cache->z3 = std::move(z3);
        cache->h1 = std::move(h1);
        cache->h2 = std::move(h2);
        cache->h3 = std::move(h3);
        cache->d1 = std::move(d1);
        cache->d2 = std::move(d2);
        cache->d3 = std::move(d3);
        cache->dropped = drop;
    }
    return out;
}

struct MlpGrads {
    Matrix w1, w2, w3, w4;
    Vector b1, b2, b3, b4;
    double alpha = 0.0;

    static MlpGrads zeros_like(const Mlp& net) {
        MlpGrads g;
        g.w1 = Matrix::Zero(net.w1.rows(), net.w1.cols());
        g.w2 = Matrix::Zero(net.w2.rows(), net.w2.cols());
        g.w3 = Matrix::Zero(net.w3.rows(), net.w3.cols());
        g.w4 = Matrix::Zero(net.w4.rows(), net.w4.cols());
        g.b1 = Vector::Zero(net.b1.size());
        g.b2 = Vector::Zero(net.b2.size());
        g.b3 = Vector::Zero(net.b3.size());
        g.b4 = Vector::Zero(net.b4.size());
        g.alpha = 0.0;
        return g;
    }
};

// Reverse-mode pass for <upstream, output>. Accumulates parameter gradients
// into grads (alpha excluded: the skip term lives outside this network) and
// returns the gradient with respect to the input rows.
inline Matrix mlp_backward(const Mlp& net, const MlpCache& cache, const Matrix& upstream,
                           MlpGrads& grads) {
    if (upstream.rows() != cache.x.rows() || upstream.cols() != net.out_dim)
        throw std::invalid_argument("mlp_backward: upstream shape mismatch");

    grads.w4.noalias() += cache.h3.transpose() * upstream;
    grads.b4 += upstream.colwise().sum().transpose();
    Matrix g = upstream * net.w4.transpose();

    if (cache.dropped) g.array() *= cache.d3.array();
    g.array() *= cache.z3.unaryExpr([](double v) { return selu_grad(v); }).array();
    grads.w3.noalias() += cache.h2.transpose() * g;
    grads.b3 += g.colwise().sum().transpose();
    g = g * net.w3.transpose();

    if (cache.dropped) g.array() *= cache.d2.array();
    g.array() *= cache.z2.unaryExpr([](double v) { return selu_grad(v); }).array();
    grads.w2.noalias() += cache.h1.transpose() * g;
    grads.b2 += g.colwise().sum().transpose();
    g = g * net.w2.transpose();

    if (cache.dropped) g.array() *= cache.d1.array();
    g.array() *= cache.z1.unaryExpr([](double v) { return selu_grad(v); }).array();
    grads.w1.noalias() += cache.x.transpose() * g;
    grads.b1 += g.colwise().sum().transpose();
    return g * net.w1.transpose();
}

// ---------------------------------------------------------------------------
// Adam

struct AdamState {
    Matrix m_w1, m_w2, m_w3, m_w4, v_w1, v_w2, v_w3, v_w4;
    Vector m_b1, m_b2, m_b3, m_b4, v_b1, v_b2, v_b3, v_b4;
    double m_alpha = 0.0, v_alpha = 0.0;
    std::int64_t step = 0;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

    static AdamState zeros_like(const Mlp& net) {
        AdamState s;
        auto zm = [](const Matrix& w) { return Matrix::Zero(w.rows(), w.cols()); };
        auto zv = [](const Vector& b) { return Vector::Zero(b.size()); };
        s.m_w1 = zm(net.w1); s.v_w1 = zm(net.w1);
        s.m_w2 = zm(net.w2); s.v_w2 = zm(net.w2);
        s.m_w3 = zm(net.w3); s.v_w3 = zm(net.w3);
        s.m_w4 = zm(net.w4); s.v_w4 = zm(net.w4);
        s.m_b1 = zv(net.b1); s.v_b1 = zv(net.b1);
        s.m_b2 = zv(net.b2); s.v_b2 = zv(net.b2);
        s.m_b3 = zv(net.b3); s.v_b3 = zv(net.b3);
        s.m_b4 = zv(net.b4); s.v_b4 = zv(net.b4);
        return s;
    }
};

namespace detail {

template <typename T>
void adam_update(T& param, T& m, T& v, const T& grad, double lr, double b1, double b2, double eps,
                 double bias1, double bias2) {
    m = b1 * m + (1.0 - b1) * grad;
    v = (b2 * v.array() + (1.0 - b2) * grad.array().square()).matrix();
    param.array() -= lr * (m.array() / bias1) / ((v.array() / bias2).sqrt() + eps);
}

}  // namespace detail

inline void adam_step(Mlp& net, AdamState& state, const MlpGrads& grads, double lr) {
    state.step += 1;
    const double bias1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bias2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    const double b1 = state.beta1, b2 = state.beta2, eps = state.eps;
    detail::adam_update(net.w1, state.m_w1, state.v_w1, grads.w1, lr, b1, b2, eps, bias1, bias2);
    detail::adam_update(net.w2, state.m_w2, state.v_w2, grads.w2, lr, b1, b2, eps, bias1, bias2);
    detail::adam_update(net.w3, state.m_w3, state.v_w3, grads.w3, lr, b1, b2, eps, bias1, bias2);
    detail::adam_update(net.w4, state.m_w4, state.v_w4, grads.w4, lr, b1, b2, eps, bias1, bias2);
    detail::adam_update(net.b1, state.m_b1, state.v_b1, grads.b1, lr, b1, b2, eps, bias1, bias2);
    detail::adam_update(net.b2, state.m_b2, state.v_b2, grads.b2, lr, b1, b2, eps, bias1, bias2);
    detail::adam_update(net.b3, state.m_b3, state.v_b3, grads.b3, lr, b1, b2, eps, bias1, bias2);
    detail::adam_update(net.b4, state.m_b4, state.v_b4, grads.b4, lr, b1, b2, eps, bias1, bias2);
    if (net.has_alpha) {
        state.m_alpha = b1 * state.m_alpha + (1.0 - b1) * grads.alpha;
        state.v_alpha = b2 * state.v_alpha + (1.0 - b2) * grads.alpha * grads.alpha;
        net.alpha -= lr * (state.m_alpha / bias1) / (std::sqrt(state.v_alpha / bias2) + eps);
    }
}

// ---------------------------------------------------------------------------
// One-cycle learning rate: cosine rise eta_max/25 -> eta_max over the first
// 30% of steps, cosine decay to eta_max/(25 * 10^4) over the rest.

struct LrSchedule {
    double eta_max = 1e-3;
    std::int64_t total_steps = 1;
    double warm_fraction = 0.3;
    double start_div = 25.0;
    double final_div = 25.0 * 1e4;
};

inline double lr_at(const LrSchedule& sched, std::int64_t step) {
    if (step < 0 || step > sched.total_steps) throw std::invalid_argument("lr_at: step out of range");
    const double peak = sched.eta_max;
    const double lo0 = sched.eta_max / sched.start_div;
    const double lo1 = sched.eta_max / sched.final_div;
    const double t = static_cast<double>(step);
    const double warm_end = sched.warm_fraction * static_cast<double>(sched.total_steps);
    auto cosine = [](double from, double to, double frac) {
        return to + (from - to) * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
    };
    if (t <= warm_end)
        return cosine(lo0, peak, warm_end > 0.0 ? t / warm_end : 1.0);
    const double tail = static_cast<double>(sched.total_steps) - warm_end;
    return cosine(peak, lo1, tail > 0.0 ? (t - warm_end) / tail : 1.0);
}

}  // namespace hiko
