// Neural encoder-decoder pairs over the Plotkin tree.
//
// Encoder node: (u, v) -> (u, g(u, v) + alpha * (u . v)); the element-wise
// product realizes XOR in the bipolar domain, so zero networks with
// alpha = 1 reproduce BPSK Reed-Muller encoding exactly.
//
// Decoder node (hybrid recursion): the first network refines the LSE
// soft-XOR for the order-(r-1) branch; its decoded bits are re-encoded
// classically (hard, no gradient) and cancelled; the second network refines
// the partial-sum for the order-r branch. Leaves use soft-MAP, keeping the
// whole decode differentiable except through the hard re-encode.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hiko/channel.hpp"
#include "hiko/codes.hpp"
#include "hiko/dumer.hpp"
#include "hiko/nn.hpp"

namespace hiko {

using SoftBits = LlrVector;

enum class Role : std::uint8_t { Enc = 0, DecLeft = 1, DecRight = 2 };

inline const char* role_name(Role role) {
    switch (role) {
        case Role::Enc: return "enc";
        case Role::DecLeft: return "dec_left";
        case Role::DecRight: return "dec_right";
    }
    throw std::invalid_argument("role_name: bad role");
}

inline Role role_from_name(const std::string& name) {
    if (name == "enc") return Role::Enc;
    if (name == "dec_left") return Role::DecLeft;
    if (name == "dec_right") return Role::DecRight;
    throw std::invalid_argument("role_from_name: '" + name + "'");
}

struct NodeNets {
    Mlp enc;   // (2l -> l), carries the skip scale alpha
    Mlp dec1;  // f for the order-(r-1) branch, (2l -> l)
    Mlp dec2;  // f for the order-r branch, (4l -> l)
};

using FrozenSet = std::set<std::pair<std::string, Role>>;

struct NeuralCodec {
    CodeTree tree;
    std::vector<NodeNets> nets;  // indexed by tree node; leaf entries unused
    int enc_hidden = 32;
    int dec_hidden = 120;
    double dropout_rate = 0.1;
    FrozenSet frozen;       // (path, role) pairs excluded from updates
    FrozenSet transferred;  // provenance: networks mapped from constituents

    Mlp& net_at(int node_idx, Role role) {
        auto& entry = nets[static_cast<std::size_t>(node_idx)];
        switch (role) {
            case Role::Enc: return entry.enc;
            case Role::DecLeft: return entry.dec1;
            case Role::DecRight: return entry.dec2;
        }
        throw std::invalid_argument("net_at: bad role");
    }
    const Mlp& net_at(int node_idx, Role role) const {
        return const_cast<NeuralCodec*>(this)->net_at(node_idx, role);
    }

    std::size_t k() const { return tree.k(); }
    std::size_t n() const { return tree.n(); }
};

inline constexpr Role kAllRoles[] = {Role::Enc, Role::DecLeft, Role::DecRight};

// Fresh codec. Hidden layers are Gaussian with std 1/sqrt(fan_in); output
// layers are scaled by out_scale (default 0, so every network starts as the
// zero function and the codec starts at the classical-reduction point).
inline NeuralCodec make_codec(int m, int r, int enc_hidden, int dec_hidden, double dropout_rate,
                              Philox& rng, double out_scale = 0.0) {
    NeuralCodec codec;
    codec.tree = build_plotkin_tree(m, r);
    codec.enc_hidden = enc_hidden;
    codec.dec_hidden = dec_hidden;
    codec.dropout_rate = dropout_rate;
    codec.nets.resize(codec.tree.nodes.size());
    for (int idx : codec.tree.branch_nodes()) {
        const int l = static_cast<int>(codec.tree.at(idx).params.n / 2);
        auto& entry = codec.nets[static_cast<std::size_t>(idx)];
        entry.enc = make_mlp(2 * l, enc_hidden, l, dropout_rate, /*with_alpha=*/true, rng, out_scale);
        entry.dec1 = make_mlp(2 * l, dec_hidden, l, dropout_rate, /*with_alpha=*/false, rng, out_scale);
        entry.dec2 = make_mlp(4 * l, dec_hidden, l, dropout_rate, /*with_alpha=*/false, rng, out_scale);
    }
    return codec;
}

inline void set_train_mode(NeuralCodec& codec, bool encoder_train, bool decoder_train) {
    for (int idx : codec.tree.branch_nodes()) {
        auto& entry = codec.nets[static_cast<std::size_t>(idx)];
        entry.enc.train_mode = encoder_train;
        entry.dec1.train_mode = decoder_train;
        entry.dec2.train_mode = decoder_train;
    }
}

// Test helper: zero every weight and bias, set every alpha to value.
inline void zero_networks(NeuralCodec& codec, double alpha = 1.0) {
    for (int idx : codec.tree.branch_nodes()) {
        for (Role role : kAllRoles) {
            Mlp& net = codec.net_at(idx, role);
            net.w1.setZero(); net.w2.setZero(); net.w3.setZero(); net.w4.setZero();
            net.b1.setZero(); net.b2.setZero(); net.b3.setZero(); net.b4.setZero();
            if (net.has_alpha) net.alpha = alpha;
        }
    }
}

// ---------------------------------------------------------------------------
// Gradients container

struct NodeGrads {
    MlpGrads enc, dec1, dec2;
};

struct CodecGrads {
    std::vector<NodeGrads> nodes;

    static CodecGrads zeros_like(const NeuralCodec& codec) {
        CodecGrads g;
        g.nodes.resize(codec.nets.size());
        for (int idx : codec.tree.branch_nodes()) {
            const auto& entry = codec.nets[static_cast<std::size_t>(idx)];
            auto& slot = g.nodes[static_cast<std::size_t>(idx)];
            slot.enc = MlpGrads::zeros_like(entry.enc);
            slot.dec1 = MlpGrads::zeros_like(entry.dec1);
            slot.dec2 = MlpGrads::zeros_like(entry.dec2);
        }
        return g;
    }

    MlpGrads& at(int node_idx, Role role) {
        auto& slot = nodes[static_cast<std::size_t>(node_idx)];
        switch (role) {
            case Role::Enc: return slot.enc;
            case Role::DecLeft: return slot.dec1;
            case Role::DecRight: return slot.dec2;
        }
        throw std::invalid_argument("CodecGrads::at: bad role");
    }
};

// ---------------------------------------------------------------------------
// Encoder

struct EncCache {
    MlpCache g;  // g.x holds [U V]
    std::unique_ptr<EncCache> left, right;
};

namespace detail {

inline Matrix encode_node_fwd(const NeuralCodec& codec, int node_idx, const Matrix& msg_block,
                              EncCache* cache, Philox* rng) {
    const auto& node = codec.tree.at(node_idx);
    switch (node.kind) {
        case CodeTree::NodeKind::LeafRepetition:
            return (1.0 - 2.0 * msg_block.col(0).array()).matrix() *
                   Eigen::RowVectorXd::Ones(static_cast<Eigen::Index>(node.params.n));
        case CodeTree::NodeKind::LeafFullRate:
            return (1.0 - 2.0 * msg_block.array()).matrix();
        case CodeTree::NodeKind::Branch: {
            const Eigen::Index half = static_cast<Eigen::Index>(node.params.n / 2);
            const Eigen::Index k_left = static_cast<Eigen::Index>(codec.tree.at(node.left).params.k);
            EncCache* lc = nullptr;
            EncCache* rc = nullptr;
            if (cache) {
                cache->left = std::make_unique<EncCache>();
                cache->right = std::make_unique<EncCache>();
                lc = cache->left.get();
                rc = cache->right.get();
            }
            Matrix u = encode_node_fwd(codec, node.left, msg_block.leftCols(k_left), lc, rng);
            Matrix v = encode_node_fwd(codec, node.right, msg_block.rightCols(msg_block.cols() - k_left),
                                       rc, rng);
            Matrix uv(u.rows(), 2 * half);
            uv << u, v;
            const Mlp& g_net = codec.nets[static_cast<std::size_t>(node_idx)].enc;
            Matrix g_out = mlp_forward(g_net, uv, cache ? &cache->g : nullptr, rng);
            Matrix out(u.rows(), 2 * half);
            out.leftCols(half) = u;
            out.rightCols(half) = g_out + g_net.alpha * (u.array() * v.array()).matrix();
            return out;
        }
    }
    throw std::logic_error("encode_node_fwd: unreachable");
}

inline void encode_node_bwd(const NeuralCodec& codec, int node_idx, const EncCache& cache,
                            const Matrix& d_out, CodecGrads& grads) {
    const auto& node = codec.tree.at(node_idx);
    if (node.kind != CodeTree::NodeKind::Branch) return;  // message bits are constants
    const Eigen::Index half = static_cast<Eigen::Index>(node.params.n / 2);
    const Mlp& g_net = codec.nets[static_cast<std::size_t>(node_idx)].enc;
    auto u = cache.g.x.leftCols(half);
    auto v = cache.g.x.rightCols(half);
    const Matrix d_w = d_out.rightCols(half);

    MlpGrads& g_grads = grads.at(node_idx, Role::Enc);
    g_grads.alpha += (d_w.array() * u.array() * v.array()).sum();
    Matrix d_uv = mlp_backward(g_net, cache.g, d_w, g_grads);

    Matrix d_u = d_out.leftCols(half) + d_uv.leftCols(half) +
                 g_net.alpha * (v.array() * d_w.array()).matrix();
    Matrix d_v = d_uv.rightCols(half) + g_net.alpha * (u.array() * d_w.array()).matrix();
    if (codec.tree.at(node.left).kind == CodeTree::NodeKind::Branch)
        encode_node_bwd(codec, node.left, *cache.left, d_u, grads);
    if (codec.tree.at(node.right).kind == CodeTree::NodeKind::Branch)
        encode_node_bwd(codec, node.right, *cache.right, d_v, grads);
}

}  // namespace detail

// Raw tree output, one codeword per row; no power normalization.
inline Matrix ko_encode_raw(const NeuralCodec& codec, const Matrix& msgs, EncCache* cache = nullptr,
                            Philox* rng = nullptr) {
    if (msgs.cols() != static_cast<Eigen::Index>(codec.k()))
        throw std::invalid_argument("ko_encode: message width mismatch");
    return detail::encode_node_fwd(codec, CodeTree::kRoot, msgs, cache, rng);
}

inline void ko_encode_backward(const NeuralCodec& codec, const EncCache& cache, const Matrix& d_out,
                               CodecGrads& grads) {
    detail::encode_node_bwd(codec, CodeTree::kRoot, cache, d_out, grads);
}

// Batch encode with unit mean power over the batch.
inline Matrix ko_encode(const NeuralCodec& codec, const Matrix& msgs) {
    Matrix out = ko_encode_raw(codec, msgs);
    normalize_power(out);
    return out;
}

inline RealWord ko_encode(const NeuralCodec& codec, const BitWord& msg) {
    Matrix row(1, static_cast<Eigen::Index>(msg.size()));
    for (std::size_t i = 0; i < msg.size(); ++i) row(0, static_cast<Eigen::Index>(i)) = msg[i];
    const Matrix out = ko_encode(codec, row);
    return RealWord(out.data(), out.data() + out.size());
}

// ---------------------------------------------------------------------------
// Decoder

struct DecCache {
    MlpCache f1, f2;      // f1.x holds [y1 y2]; f2.x holds [y1 y2 Lv vhat]
    Matrix lv_pre, lu_pre;  // pre-clamp values, for the clamp gradient mask
    Matrix vhat;            // bipolar re-encoded hard decision (constant)
    Matrix leaf_pre;        // leaves: pre-clamp outputs
    std::unique_ptr<DecCache> left, right;
};

namespace detail {

inline Matrix clamp_mat(const Matrix& x) {
    return x.unaryExpr([](double v) { return clamp_llr(v); });
}

inline Matrix clamp_pass_mask(const Matrix& pre) {
    return pre.unaryExpr([](double v) { return std::abs(v) < kLlrMax ? 1.0 : 0.0; });
}

// Hard-decide each row, re-encode on the node's subtree, map to bipolar.
inline Matrix reencode_rows(const CodeTree& tree, int node_idx, const Matrix& soft) {
    const auto& node = tree.at(node_idx);
    Matrix out(soft.rows(), static_cast<Eigen::Index>(node.params.n));
    BitWord msg(node.params.k);
    for (Eigen::Index row = 0; row < soft.rows(); ++row) {
        for (Eigen::Index j = 0; j < soft.cols(); ++j) msg[static_cast<std::size_t>(j)] = soft(row, j) < 0.0 ? 1 : 0;
        const BitWord word = rm_encode_node(tree, node_idx, msg);
        for (std::size_t j = 0; j < word.size(); ++j)
            out(row, static_cast<Eigen::Index>(j)) = word[j] ? -1.0 : 1.0;
    }
    return out;
}

inline Matrix decode_node_fwd(const NeuralCodec& codec, int node_idx, const Matrix& llrs,
                              DecCache* cache, Philox* rng) {
    const auto& node = codec.tree.at(node_idx);
    switch (node.kind) {
        case CodeTree::NodeKind::LeafRepetition: {
            Matrix sums(llrs.rows(), 1);
            for (Eigen::Index row = 0; row < llrs.rows(); ++row) {
                double acc = 0.0;
                for (Eigen::Index j = 0; j < llrs.cols(); ++j) acc += llrs(row, j);
                sums(row, 0) = acc;
            }
            if (cache) cache->leaf_pre = sums;
            return clamp_mat(sums);
        }
        case CodeTree::NodeKind::LeafFullRate: {
            if (cache) cache->leaf_pre = llrs;
            return clamp_mat(llrs);
        }
        case CodeTree::NodeKind::Branch: {
            const Eigen::Index half = static_cast<Eigen::Index>(node.params.n / 2);
            const auto& entry = codec.nets[static_cast<std::size_t>(node_idx)];
            auto y1 = llrs.leftCols(half);
            auto y2 = llrs.rightCols(half);

            Matrix lse_part = y1.binaryExpr(y2, [](double a, double b) { return lse(a, b); });
            Matrix lv_pre = mlp_forward(entry.dec1, llrs, cache ? &cache->f1 : nullptr, rng);
            lv_pre += lse_part;
            Matrix lv = clamp_mat(lv_pre);

            DecCache* rc = nullptr;
            DecCache* lc = nullptr;
            if (cache) {
                cache->right = std::make_unique<DecCache>();
                cache->left = std::make_unique<DecCache>();
                rc = cache->right.get();
                lc = cache->left.get();
            }
            Matrix mv = decode_node_fwd(codec, node.right, lv, rc, rng);
            Matrix vhat = reencode_rows(codec.tree, node.right, mv);

            Matrix f2_in(llrs.rows(), 4 * half);
            f2_in << llrs, lv, vhat;
            Matrix lu_pre = mlp_forward(entry.dec2, f2_in, cache ? &cache->f2 : nullptr, rng);
            lu_pre += y1 + (vhat.array() * y2.array()).matrix();
            Matrix lu = clamp_mat(lu_pre);

            Matrix mu = decode_node_fwd(codec, node.left, lu, lc, rng);

            if (cache) {
                cache->lv_pre = std::move(lv_pre);
                cache->lu_pre = std::move(lu_pre);
                cache->vhat = std::move(vhat);
            }
            Matrix out(llrs.rows(), mu.cols() + mv.cols());
            out << mu, mv;
            return out;
        }
    }
    throw std::logic_error("decode_node_fwd: unreachable");
}

inline Matrix decode_node_bwd(const NeuralCodec& codec, int node_idx, const DecCache& cache,
                              const Matrix& d_out, CodecGrads& grads) {
    const auto& node = codec.tree.at(node_idx);
    switch (node.kind) {
        case CodeTree::NodeKind::LeafRepetition: {
            const Matrix d_sum = (d_out.array() * clamp_pass_mask(cache.leaf_pre).array()).matrix();
            return d_sum * Eigen::RowVectorXd::Ones(static_cast<Eigen::Index>(node.params.n));
        }
        case CodeTree::NodeKind::LeafFullRate:
            return (d_out.array() * clamp_pass_mask(cache.leaf_pre).array()).matrix();
        case CodeTree::NodeKind::Branch: {
            const Eigen::Index half = static_cast<Eigen::Index>(node.params.n / 2);
            const Eigen::Index k_left = static_cast<Eigen::Index>(codec.tree.at(node.left).params.k);
            const auto& entry = codec.nets[static_cast<std::size_t>(node_idx)];
            auto y1 = cache.f1.x.leftCols(half);
            auto y2 = cache.f1.x.rightCols(half);

            Matrix d_lu = decode_node_bwd(codec, node.left, *cache.left, d_out.leftCols(k_left), grads);
            d_lu.array() *= clamp_pass_mask(cache.lu_pre).array();

            Matrix d_f2in = mlp_backward(entry.dec2, cache.f2, d_lu, grads.at(node_idx, Role::DecRight));
            Matrix d_y1 = d_f2in.leftCols(half) + d_lu;
            Matrix d_y2 = d_f2in.middleCols(half, half) + (cache.vhat.array() * d_lu.array()).matrix();

            Matrix d_lv = d_f2in.middleCols(2 * half, half);
            d_lv += decode_node_bwd(codec, node.right, *cache.right,
                                    d_out.rightCols(d_out.cols() - k_left), grads);
            d_lv.array() *= clamp_pass_mask(cache.lv_pre).array();

            Matrix d_f1in = mlp_backward(entry.dec1, cache.f1, d_lv, grads.at(node_idx, Role::DecLeft));
            d_y1 += d_f1in.leftCols(half) +
                    (d_lv.array() * y1.binaryExpr(y2, [](double a, double b) { return lse_grad_a(a, b); }).array())
                        .matrix();
            d_y2 += d_f1in.rightCols(half) +
                    (d_lv.array() * y1.binaryExpr(y2, [](double a, double b) { return lse_grad_b(a, b); }).array())
                        .matrix();

            Matrix d_llr(d_y1.rows(), 2 * half);
            d_llr << d_y1, d_y2;
            return d_llr;
        }
    }
    throw std::logic_error("decode_node_bwd: unreachable");
}

}  // namespace detail

// Batch hybrid decode: one row of channel LLRs in, one row of soft message
// bits (LLR convention, clamped) out.
inline Matrix ko_decode_hybrid(const NeuralCodec& codec, const Matrix& llrs, DecCache* cache = nullptr,
                               Philox* rng = nullptr) {
    if (llrs.cols() != static_cast<Eigen::Index>(codec.n()))
        throw std::invalid_argument("ko_decode_hybrid: LLR width mismatch");
    return detail::decode_node_fwd(codec, CodeTree::kRoot, llrs, cache, rng);
}

// Gradient with respect to the channel LLRs; parameter gradients accumulate
// into grads. The hard re-encode path is constant under backpropagation.
inline Matrix ko_decode_backward(const NeuralCodec& codec, const DecCache& cache, const Matrix& d_soft,
                                 CodecGrads& grads) {
    return detail::decode_node_bwd(codec, CodeTree::kRoot, cache, d_soft, grads);
}

inline SoftBits ko_decode_hybrid(const NeuralCodec& codec, std::span<const double> llrs) {
    Matrix row(1, static_cast<Eigen::Index>(llrs.size()));
    for (std::size_t i = 0; i < llrs.size(); ++i) row(0, static_cast<Eigen::Index>(i)) = llrs[i];
    const Matrix out = ko_decode_hybrid(codec, row);
    return SoftBits(out.data(), out.data() + out.size());
}

// ---------------------------------------------------------------------------
// Spec'd single-word leaf/re-encode operations

// Repetition leaf: one soft bit, the LLR sum; full-rate leaf: passthrough.
inline SoftBits soft_map_leaf(const CodeTree& tree, int node_idx, std::span<const double> llrs) {
    const auto& node = tree.at(node_idx);
    if (llrs.size() != node.params.n) throw std::invalid_argument("soft_map_leaf: length mismatch");
    if (node.kind == CodeTree::NodeKind::LeafRepetition) {
        double acc = 0.0;
        for (double v : llrs) acc += v;
        return {clamp_llr(acc)};
    }
    if (node.kind == CodeTree::NodeKind::LeafFullRate) {
        SoftBits out(llrs.size());
        for (std::size_t i = 0; i < llrs.size(); ++i) out[i] = clamp_llr(llrs[i]);
        return out;
    }
    throw std::invalid_argument("soft_map_leaf: node is not a leaf");
}

// Hard-decide, re-encode on the subtree, map to bipolar.
inline RealWord reencode_hard(const CodeTree& tree, int node_idx, std::span<const double> soft) {
    const auto& node = tree.at(node_idx);
    if (soft.size() != node.params.k) throw std::invalid_argument("reencode_hard: length mismatch");
    const BitWord word = rm_encode_node(tree, node_idx, hard_decision(soft));
    RealWord out(word.size());
    for (std::size_t i = 0; i < word.size(); ++i) out[i] = word[i] ? -1.0 : 1.0;
    return out;
}

// ---------------------------------------------------------------------------
// Generalized LLR propagation (the fully-soft baseline decoder)

namespace detail {

// Exact soft-MAP for an order-1 code: marginalize bit posteriors over the
// 2^(m+1) codewords. log P(c)/P(0) = -<c, L> coordinate-wise.
inline SoftBits first_order_soft_map(const CodeTree& tree, int node_idx, std::span<const double> llrs) {
    const auto& node = tree.at(node_idx);
    const std::size_t k = node.params.k;
    const std::size_t n = node.params.n;
    const std::size_t count = std::size_t{1} << k;

    std::vector<double> scores(count);
    BitWord msg(k, 0);
    for (std::size_t idx = 0; idx < count; ++idx) {
        for (std::size_t j = 0; j < k; ++j) msg[j] = static_cast<std::uint8_t>((idx >> j) & 1u);
        const BitWord word = rm_encode_node(tree, node_idx, msg);
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (word[i]) s -= llrs[i];
        scores[idx] = s;
    }
    SoftBits out(k);
    for (std::size_t j = 0; j < k; ++j) {
        double max0 = -std::numeric_limits<double>::infinity();
        double max1 = max0;
        for (std::size_t idx = 0; idx < count; ++idx) {
            double& slot = ((idx >> j) & 1u) ? max1 : max0;
            slot = std::max(slot, scores[idx]);
        }
        double sum0 = 0.0, sum1 = 0.0;
        for (std::size_t idx = 0; idx < count; ++idx) {
            if ((idx >> j) & 1u)
                sum1 += std::exp(scores[idx] - max1);
            else
                sum0 += std::exp(scores[idx] - max0);
        }
        out[j] = clamp_llr((max0 + std::log(sum0)) - (max1 + std::log(sum1)));
    }
    return out;
}

inline SoftBits llr_propagate_node(const CodeTree& tree, int node_idx, std::span<const double> llrs) {
    const auto& node = tree.at(node_idx);
    const int m = node.params.m;
    const int r = node.params.r;
    if (r == 0) {
        double acc = 0.0;
        for (double v : llrs) acc += v;
        return {clamp_llr(acc)};
    }
    if (r == m) {
        SoftBits out(llrs.size());
        for (std::size_t i = 0; i < llrs.size(); ++i) out[i] = clamp_llr(llrs[i]);
        return out;
    }
    if (r == 1) return first_order_soft_map(tree, node_idx, llrs);

    // Fully-soft split: no hard decisions, both halves recursed independently.
    const std::size_t half = node.params.n / 2;
    std::vector<double> l_v(half), l_u(half);
    for (std::size_t i = 0; i < half; ++i) {
        const double a = llrs[i];
        const double b = llrs[half + i];
        l_v[i] = clamp_llr(lse(a, b));
        l_u[i] = clamp_llr(a + std::tanh(l_v[i] / 2.0) * b);
    }
    SoftBits u_bits = llr_propagate_node(tree, node.left, l_u);
    SoftBits v_bits = llr_propagate_node(tree, node.right, l_v);
    u_bits.insert(u_bits.end(), v_bits.begin(), v_bits.end());
    return u_bits;
}

}  // namespace detail

inline SoftBits llr_propagate(std::span<const double> llrs, int m, int r) {
    const CodeTree tree = build_plotkin_tree(m, r);
    if (llrs.size() != tree.n()) throw std::invalid_argument("llr_propagate: LLR length mismatch");
    return detail::llr_propagate_node(tree, CodeTree::kRoot, llrs);
}

// ---------------------------------------------------------------------------
// Binary cross-entropy on soft bits, L = log P(0)/P(1) against 0/1 targets.

inline double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

inline double bce_loss(const Matrix& soft, const Matrix& targets) {
    if (soft.rows() != targets.rows() || soft.cols() != targets.cols())
        throw std::invalid_argument("bce_loss: shape mismatch");
    double total = 0.0;
    for (Eigen::Index i = 0; i < soft.rows(); ++i)
        for (Eigen::Index j = 0; j < soft.cols(); ++j)
            total += softplus(-(1.0 - 2.0 * targets(i, j)) * soft(i, j));
    return total / static_cast<double>(soft.size());
}

// Gradient of bce_loss scaled as if the batch had norm_count elements
// (gradient accumulation across minibatch chunks).
inline Matrix bce_grad(const Matrix& soft, const Matrix& targets, double norm_count) {
    Matrix g(soft.rows(), soft.cols());
    for (Eigen::Index i = 0; i < soft.rows(); ++i)
        for (Eigen::Index j = 0; j < soft.cols(); ++j) {
            const double sign = 1.0 - 2.0 * targets(i, j);
            g(i, j) = -sign * sigmoid(-sign * soft(i, j)) / norm_count;
        }
    return g;
}

}  // namespace hiko
