#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>

#include "hiko/codes.hpp"
#include "hiko/rng.hpp"

using namespace hiko;

namespace {

// Pascal-triangle binomial sum, independent of code_params' multiplicative form.
std::size_t binom_sum(int m, int r) {
    std::vector<std::vector<std::size_t>> c(m + 1, std::vector<std::size_t>(m + 1, 0));
    for (int i = 0; i <= m; ++i) {
        c[i][0] = 1;
        for (int j = 1; j <= i; ++j) c[i][j] = c[i - 1][j - 1] + (j <= i - 1 ? c[i - 1][j] : 0);
    }
    std::size_t k = 0;
    for (int i = 0; i <= r; ++i) k += c[m][i];
    return k;
}

std::size_t weight(const BitWord& w) {
    return static_cast<std::size_t>(std::count(w.begin(), w.end(), 1));
}

// GF(2) rank by elimination.
std::size_t gf2_rank(std::vector<BitWord> rows) {
    std::size_t rank = 0;
    const std::size_t cols = rows.empty() ? 0 : rows[0].size();
    for (std::size_t col = 0; col < cols && rank < rows.size(); ++col) {
        std::size_t pivot = rank;
        while (pivot < rows.size() && rows[pivot][col] == 0) ++pivot;
        if (pivot == rows.size()) continue;
        std::swap(rows[rank], rows[pivot]);
        for (std::size_t i = 0; i < rows.size(); ++i)
            if (i != rank && rows[i][col])
                for (std::size_t j = 0; j < cols; ++j) rows[i][j] ^= rows[rank][j];
        ++rank;
    }
    return rank;
}

BitWord random_bits(std::size_t len, Philox& rng) {
    BitWord bits(len);
    for (auto& b : bits) b = static_cast<std::uint8_t>(rng.next_bit());
    return bits;
}

BitWord xor_words(const BitWord& a, const BitWord& b) {
    BitWord out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] ^ b[i];
    return out;
}

}  // namespace

TEST_CASE("code_params matches the binomial sum") {
    CHECK(code_params(3, 0).n == 8);
    CHECK(code_params(3, 0).k == 1);
    CHECK(code_params(8, 3).n == 256);
    CHECK(code_params(8, 3).k == 93);
    CHECK(code_params(4, 3).n == 16);
    CHECK(code_params(4, 3).k == 15);
    CHECK(code_params(4, 2).k == 11);
    for (int m = 0; m <= 12; ++m)
        for (int r = 0; r <= m; ++r) CHECK(code_params(m, r).k == binom_sum(m, r));
}

TEST_CASE("code_params rejects bad domains") {
    CHECK_THROWS_AS(code_params(3, 4), std::invalid_argument);
    CHECK_THROWS_AS(code_params(-1, 0), std::invalid_argument);
    CHECK_THROWS_AS(code_params(2, -1), std::invalid_argument);
    CHECK_THROWS_AS(code_params(21, 1), std::invalid_argument);
}

TEST_CASE("plotkin tree structure") {
    const CodeTree full = build_plotkin_tree(1, 1);
    REQUIRE(full.nodes.size() == 1);
    CHECK(full.root().kind == CodeTree::NodeKind::LeafFullRate);
    CHECK(full.k() == 2);

    const CodeTree t21 = build_plotkin_tree(2, 1);
    REQUIRE(t21.nodes.size() == 3);
    CHECK(t21.root().kind == CodeTree::NodeKind::Branch);
    CHECK(t21.at(t21.root().left).kind == CodeTree::NodeKind::LeafFullRate);
    CHECK(t21.at(t21.root().left).params == code_params(1, 1));
    CHECK(t21.at(t21.root().right).kind == CodeTree::NodeKind::LeafRepetition);
    CHECK(t21.at(t21.root().right).params == code_params(1, 0));
}

TEST_CASE("tree invariants hold for all m <= 10") {
    for (int m = 0; m <= 10; ++m) {
        for (int r = 0; r <= m; ++r) {
            const CodeTree tree = build_plotkin_tree(m, r);
            std::set<std::string> paths;
            std::size_t leaf_k = 0;
            for (const auto& node : tree.nodes) {
                CHECK(paths.insert(node.path).second);
                const bool is_leaf = node.kind != CodeTree::NodeKind::Branch;
                CHECK(is_leaf == (node.params.r == 0 || node.params.r == node.params.m));
                if (is_leaf) {
                    leaf_k += node.params.k;
                } else {
                    const auto& left = tree.at(node.left);
                    const auto& right = tree.at(node.right);
                    CHECK(left.params == code_params(node.params.m - 1, node.params.r));
                    CHECK(right.params == code_params(node.params.m - 1, node.params.r - 1));
                    CHECK(left.path == node.path + "L");
                    CHECK(right.path == node.path + "R");
                }
            }
            CHECK(leaf_k == tree.k());
        }
    }
}

TEST_CASE("plotkin examples") {
    CHECK(plotkin(BitWord{0}, BitWord{0}) == BitWord{0, 0});
    CHECK(plotkin(BitWord{1, 0}, BitWord{0, 1}) == BitWord{1, 0, 1, 1});
    CHECK_THROWS_AS(plotkin(BitWord{1}, BitWord{1, 0}), std::invalid_argument);

    Philox rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const BitWord u = random_bits(16, rng);
        const BitWord zero(16, 0);
        const BitWord out = plotkin(u, zero);
        CHECK(BitWord(out.begin(), out.begin() + 16) == u);
        CHECK(BitWord(out.begin() + 16, out.end()) == u);
    }
}

TEST_CASE("rm_encode worked examples") {
    const CodeTree t21 = build_plotkin_tree(2, 1);
    CHECK(rm_encode(t21, BitWord{0, 0, 0}) == BitWord{0, 0, 0, 0});
    CHECK(rm_encode(t21, BitWord{0, 0, 1}) == BitWord{0, 0, 1, 1});

    const CodeTree rep = build_plotkin_tree(4, 0);
    CHECK(rm_encode(rep, BitWord{1}) == BitWord(16, 1));

    CHECK_THROWS_AS(rm_encode(t21, BitWord{0, 1}), std::invalid_argument);
}

TEST_CASE("rm_encode is linear over GF(2)") {
    Philox rng(5);
    for (auto [m, r] : {std::pair{3, 2}, std::pair{4, 2}}) {
        const CodeTree tree = build_plotkin_tree(m, r);
        for (int trial = 0; trial < 50; ++trial) {
            const BitWord a = random_bits(tree.k(), rng);
            const BitWord b = random_bits(tree.k(), rng);
            CHECK(rm_encode(tree, xor_words(a, b)) == xor_words(rm_encode(tree, a), rm_encode(tree, b)));
        }
    }
}

TEST_CASE("exhaustive codebooks: injectivity and minimum distance") {
    for (auto [m, r] : {std::pair{2, 1}, std::pair{3, 1}, std::pair{3, 2}, std::pair{4, 2}}) {
        const CodeTree tree = build_plotkin_tree(m, r);
        std::set<BitWord> codebook;
        std::size_t min_weight = tree.n() + 1;
        BitWord msg(tree.k(), 0);
        for (std::size_t idx = 0; idx < (std::size_t{1} << tree.k()); ++idx) {
            for (std::size_t j = 0; j < tree.k(); ++j) msg[j] = static_cast<std::uint8_t>((idx >> j) & 1);
            const BitWord word = rm_encode(tree, msg);
            CHECK(codebook.insert(word).second);  // injective
            if (idx > 0) min_weight = std::min(min_weight, weight(word));  // linear: d_min = min weight
        }
        CHECK(min_weight == (std::size_t{1} << (m - r)));
    }
}

TEST_CASE("message_layout is contiguous, depth-first, left-first") {
    const MessageLayout single = message_layout(build_plotkin_tree(1, 1));
    REQUIRE(single.entries.size() == 1);
    CHECK(single.entries[0].leaf_path == "");
    CHECK(single.entries[0].offset == 0);
    CHECK(single.entries[0].length == 2);

    const MessageLayout l21 = message_layout(build_plotkin_tree(2, 1));
    REQUIRE(l21.entries.size() == 2);
    CHECK(l21.entries[0].leaf_path == "L");
    CHECK(l21.entries[0].offset == 0);
    CHECK(l21.entries[0].length == 2);
    CHECK(l21.entries[1].leaf_path == "R");
    CHECK(l21.entries[1].offset == 2);
    CHECK(l21.entries[1].length == 1);

    for (auto [m, r] : {std::pair{4, 2}, std::pair{6, 3}, std::pair{8, 3}}) {
        const CodeTree tree = build_plotkin_tree(m, r);
        const MessageLayout layout = message_layout(tree);
        std::size_t expect_offset = 0;
        for (const auto& entry : layout.entries) {
            CHECK(entry.offset == expect_offset);
            CHECK(entry.length == tree.at(tree.index_of(entry.leaf_path)).params.k);
            expect_offset += entry.length;
        }
        CHECK(expect_offset == tree.k());
    }
}

TEST_CASE("generator matrix reproduces unit encodings and has full rank") {
    const auto g11 = generator_matrix(1, 1);
    REQUIRE(g11.size() == 2);
    CHECK(gf2_rank(g11) == 2);

    const auto rep = generator_matrix(3, 0);
    REQUIRE(rep.size() == 1);
    CHECK(rep[0] == BitWord(8, 1));

    // Brute-force weight check: every non-all-ones row of G(3,1) has weight 2^(m-1).
    const auto g31 = generator_matrix(3, 1);
    for (const auto& row : g31)
        if (weight(row) != row.size()) CHECK(weight(row) == 4);

    for (auto [m, r] : {std::pair{4, 2}, std::pair{5, 3}}) {
        const CodeTree tree = build_plotkin_tree(m, r);
        const auto rows = generator_matrix(m, r);
        REQUIRE(rows.size() == tree.k());
        CHECK(gf2_rank(rows) == tree.k());
        BitWord unit(tree.k(), 0);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            unit[i] = 1;
            CHECK(rows[i] == rm_encode(tree, unit));
            unit[i] = 0;
        }
    }
}
