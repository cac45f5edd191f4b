// Recursive soft-decision decoding of Reed-Muller codes over the Plotkin
// tree: LSE combine for the order-(r-1) branch, partial-sum cancellation
// for the order-r branch, exact MAP at repetition and full-rate leaves.
#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>

#include "hiko/channel.hpp"
#include "hiko/codes.hpp"

namespace hiko {

// LLR magnitudes are clamped here after every combine; keeps e^L finite
// and matches the neural decoder bit for bit at the classical point.
inline constexpr double kLlrMax = 30.0;

inline double clamp_llr(double v) { return std::clamp(v, -kLlrMax, kLlrMax); }

// log((1 + e^(a+b)) / (e^a + e^b)), the soft-XOR of two LLRs.
// Max-factored form; exact to ~1e-15 and overflow-free for |a|,|b| <= 1e3.
inline double lse(double a, double b) {
    const double s = a + b;
    const double num = std::max(s, 0.0) + std::log1p(std::exp(-std::abs(s)));
    const double den = std::max(a, b) + std::log1p(std::exp(-std::abs(a - b)));
    return num - den;
}

inline double sigmoid(double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

// d lse(a,b) / da = sigmoid(a+b) - sigmoid(a-b); swap for b.
inline double lse_grad_a(double a, double b) { return sigmoid(a + b) - sigmoid(a - b); }
inline double lse_grad_b(double a, double b) { return sigmoid(a + b) - sigmoid(b - a); }

// bit = 1 iff L < 0; ties resolve to 0.
inline BitWord hard_decision(std::span<const double> llrs) {
    BitWord bits(llrs.size());
    for (std::size_t i = 0; i < llrs.size(); ++i) bits[i] = llrs[i] < 0.0 ? 1 : 0;
    return bits;
}

struct DumerResult {
    BitWord msg;
    LlrVector msg_llrs;
};

namespace detail {

// Writes the decoded bits/LLRs of the subtree into msg/msg_llrs starting at
// offset (layout order: left subtree first). L is scratch for this node.
inline void dumer_node(const CodeTree& tree, int node_idx, std::span<double> L,
                       std::span<std::uint8_t> msg, std::span<double> msg_llrs) {
    const auto& node = tree.at(node_idx);
    switch (node.kind) {
        case CodeTree::NodeKind::LeafRepetition: {
            double sum = 0.0;
            for (double v : L) sum += v;
            msg_llrs[0] = clamp_llr(sum);
            msg[0] = msg_llrs[0] < 0.0 ? 1 : 0;
            return;
        }
        case CodeTree::NodeKind::LeafFullRate: {
            for (std::size_t i = 0; i < L.size(); ++i) {
                msg_llrs[i] = clamp_llr(L[i]);
                msg[i] = msg_llrs[i] < 0.0 ? 1 : 0;
            }
            return;
        }
        case CodeTree::NodeKind::Branch: {
            const std::size_t half = node.params.n / 2;
            const std::size_t k_left = tree.at(node.left).params.k;
            const auto y1 = L.first(half);
            const auto y2 = L.subspan(half);

            // Order-(r-1) branch first: soft-XOR of the two halves.
            std::vector<double> L_v(half);
            for (std::size_t i = 0; i < half; ++i) L_v[i] = clamp_llr(lse(y1[i], y2[i]));
            dumer_node(tree, node.right, L_v, msg.subspan(k_left), msg_llrs.subspan(k_left));

            // Cancel its re-encoded word and decode the order-r branch.
            const BitWord v_hat = rm_encode_node(
                tree, node.right, msg.subspan(k_left, tree.at(node.right).params.k));
            std::vector<double> L_u(half);
            for (std::size_t i = 0; i < half; ++i)
                L_u[i] = clamp_llr(v_hat[i] ? y1[i] - y2[i] : y1[i] + y2[i]);
            dumer_node(tree, node.left, L_u, msg.first(k_left), msg_llrs.first(k_left));
            return;
        }
    }
}

}  // namespace detail

inline DumerResult dumer_decode(const CodeTree& tree, std::span<const double> llrs) {
    if (llrs.size() != tree.n()) throw std::invalid_argument("dumer_decode: LLR length mismatch");
    DumerResult res;
    res.msg.resize(tree.k());
    res.msg_llrs.resize(tree.k());
    std::vector<double> scratch(llrs.begin(), llrs.end());
    detail::dumer_node(tree, CodeTree::kRoot, scratch, res.msg, res.msg_llrs);
    return res;
}

}  // namespace hiko
