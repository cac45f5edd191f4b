// Reed-Muller code structure: parameters, the Plotkin decomposition tree,
// classical encoding, message-bit layout, and generator matrices.
#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hiko {

using BitWord = std::vector<std::uint8_t>;

struct CodeParams {
    int m = 0;
    int r = 0;
    std::size_t n = 1;  // block length, 2^m
    std::size_t k = 1;  // information bits, sum of binomials

    friend bool operator==(const CodeParams&, const CodeParams&) = default;
};

inline CodeParams code_params(int m, int r) {
    if (m < 0 || r < 0 || r > m) throw std::invalid_argument("code_params: need 0 <= r <= m");
    if (m > 20) throw std::invalid_argument("code_params: m capped at 20");
    CodeParams p;
    p.m = m;
    p.r = r;
    p.n = std::size_t{1} << m;
    // k = sum_{i=0..r} C(m, i), built multiplicatively; exact for m <= 20.
    std::size_t k = 0;
    std::uint64_t binom = 1;
    for (int i = 0; i <= r; ++i) {
        k += binom;
        binom = binom * static_cast<std::uint64_t>(m - i) / static_cast<std::uint64_t>(i + 1);
    }
    p.k = k;
    return p;
}

// Plotkin decomposition of RM(m, r): a branch (m, r) splits into the
// order-r left child (m-1, r) and order-(r-1) right child (m-1, r-1);
// recursion stops at repetition (r = 0) and full-rate (r = m) leaves.
struct CodeTree {
    enum class NodeKind { Branch, LeafRepetition, LeafFullRate };

    struct Node {
        CodeParams params;
        NodeKind kind = NodeKind::Branch;
        std::string path;  // root-to-node steps over {L, R}
        int left = -1;
        int right = -1;
    };

    std::vector<Node> nodes;  // preorder: node 0 is the root
    static constexpr int kRoot = 0;

    const Node& root() const { return nodes[kRoot]; }
    const Node& at(int idx) const { return nodes[static_cast<std::size_t>(idx)]; }
    std::size_t n() const { return root().params.n; }
    std::size_t k() const { return root().params.k; }

    int index_of(std::string_view path) const {
        for (std::size_t i = 0; i < nodes.size(); ++i)
            if (nodes[i].path == path) return static_cast<int>(i);
        throw std::invalid_argument("CodeTree: no node at path '" + std::string(path) + "'");
    }

    std::vector<int> branch_nodes() const {
        std::vector<int> out;
        for (std::size_t i = 0; i < nodes.size(); ++i)
            if (nodes[i].kind == NodeKind::Branch) out.push_back(static_cast<int>(i));
        return out;
    }
};

namespace detail {

inline int build_tree_node(CodeTree& tree, int m, int r, std::string path) {
    CodeTree::Node node;
    node.params = code_params(m, r);
    node.path = std::move(path);
    const int idx = static_cast<int>(tree.nodes.size());
    if (r == 0) {
        node.kind = CodeTree::NodeKind::LeafRepetition;
        tree.nodes.push_back(std::move(node));
    } else if (r == m) {
        node.kind = CodeTree::NodeKind::LeafFullRate;
        tree.nodes.push_back(std::move(node));
    } else {
        node.kind = CodeTree::NodeKind::Branch;
        tree.nodes.push_back(std::move(node));
        const int left = build_tree_node(tree, m - 1, r, tree.nodes[idx].path + "L");
        tree.nodes[idx].left = left;
        const int right = build_tree_node(tree, m - 1, r - 1, tree.nodes[idx].path + "R");
        tree.nodes[idx].right = right;
    }
    return idx;
}

}  // namespace detail

inline CodeTree build_plotkin_tree(int m, int r) {
    CodeTree tree;
    detail::build_tree_node(tree, m, r, "");
    return tree;
}

// (u, u xor v)
inline BitWord plotkin(std::span<const std::uint8_t> u, std::span<const std::uint8_t> v) {
    if (u.size() != v.size()) throw std::invalid_argument("plotkin: length mismatch");
    BitWord out(2 * u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        out[i] = u[i];
        out[u.size() + i] = u[i] ^ v[i];
    }
    return out;
}

namespace detail {

inline void rm_encode_into(const CodeTree& tree, int node_idx, std::span<const std::uint8_t> msg,
                           std::span<std::uint8_t> out) {
    const auto& node = tree.at(node_idx);
    switch (node.kind) {
        case CodeTree::NodeKind::LeafRepetition:
            for (auto& b : out) b = msg[0];
            return;
        case CodeTree::NodeKind::LeafFullRate:
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = msg[i];
            return;
        case CodeTree::NodeKind::Branch: {
            const std::size_t half = node.params.n / 2;
            const std::size_t k_left = tree.at(node.left).params.k;
            rm_encode_into(tree, node.left, msg.first(k_left), out.first(half));
            rm_encode_into(tree, node.right, msg.subspan(k_left), out.subspan(half));
            for (std::size_t i = 0; i < half; ++i) out[half + i] ^= out[i];
            return;
        }
    }
}

}  // namespace detail

// Encode the subtree rooted at node_idx; msg length must equal that node's k.
inline BitWord rm_encode_node(const CodeTree& tree, int node_idx, std::span<const std::uint8_t> msg) {
    const auto& node = tree.at(node_idx);
    if (msg.size() != node.params.k) throw std::invalid_argument("rm_encode: message length mismatch");
    BitWord out(node.params.n);
    detail::rm_encode_into(tree, node_idx, msg, out);
    return out;
}

inline BitWord rm_encode(const CodeTree& tree, std::span<const std::uint8_t> msg) {
    return rm_encode_node(tree, CodeTree::kRoot, msg);
}

// Depth-first, left-child-first placement of information bits. Because the
// walk order matches the encoder's recursion, every subtree owns one
// contiguous [offset, offset+length) slice of the message.
struct MessageLayout {
    struct Entry {
        std::string leaf_path;
        std::size_t offset = 0;
        std::size_t length = 0;
    };
    std::vector<Entry> entries;
    std::size_t total_bits = 0;
};

inline MessageLayout message_layout(const CodeTree& tree) {
    MessageLayout layout;
    for (const auto& node : tree.nodes) {
        if (node.kind == CodeTree::NodeKind::Branch) continue;
        layout.entries.push_back({node.path, layout.total_bits, node.params.k});
        layout.total_bits += node.params.k;
    }
    return layout;
}

// Row i encodes the unit message e_i; k x n over GF(2).
inline std::vector<BitWord> generator_matrix(int m, int r) {
    if (m > 12) throw std::invalid_argument("generator_matrix: m capped at 12");
    const CodeTree tree = build_plotkin_tree(m, r);
    std::vector<BitWord> rows;
    rows.reserve(tree.k());
    BitWord msg(tree.k(), 0);
    for (std::size_t i = 0; i < tree.k(); ++i) {
        msg[i] = 1;
        rows.push_back(rm_encode(tree, msg));
        msg[i] = 0;
    }
    return rows;
}

}  // namespace hiko
