#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>

#include "treedex/gen.hpp"
#include "treedex/subtree.hpp"

using namespace treedex;

namespace {

SubtreeShape random_shape(std::mt19937_64& rng, std::size_t budget,
                          const std::vector<std::string>& alphabet) {
    SubtreeShape s;
    s.label = alphabet[rng() % alphabet.size()];
    std::size_t left = budget - 1;
    while (left > 0 && rng() % 3 != 0) {
        std::size_t take = 1 + rng() % left;
        s.children.push_back(random_shape(rng, take, alphabet));
        left -= take;
    }
    return s;
}

void shuffle_siblings(std::mt19937_64& rng, SubtreeShape& s) {
    std::shuffle(s.children.begin(), s.children.end(), rng);
    for (auto& c : s.children) shuffle_siblings(rng, c);
}

// Brute-force distinct connected subtree shapes containing each node subset.
std::set<std::string> brute_force_subtree_shapes(const ParseTree& t, std::size_t mss) {
    std::set<std::string> out;
    const std::size_t n = t.size();
    REQUIRE(n <= 16);
    for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
        std::size_t count = static_cast<std::size_t>(__builtin_popcount(mask));
        if (count > mss) continue;
        // connected = exactly one member whose parent is outside the set
        int root = -1;
        bool ok = true;
        for (std::size_t i = 0; i < n && ok; ++i) {
            if (!(mask & (1u << i))) continue;
            std::int32_t pid = t.nodes[i].parent_id;
            int pidx = -1;
            for (std::size_t j = 0; j < n; ++j)
                if (t.nodes[j].node_id == pid) pidx = static_cast<int>(j);
            if (pidx < 0 || !(mask & (1u << pidx))) {
                if (root >= 0) ok = false;
                root = static_cast<int>(i);
            }
        }
        if (!ok) continue;
        auto build = [&](auto&& self, std::size_t i) -> SubtreeShape {
            SubtreeShape s;
            s.label = t.nodes[i].label;
            for (std::size_t c : t.children_of(i))
                if (mask & (1u << c)) s.children.push_back(self(self, c));
            return s;
        };
        out.insert(render_shape(canonicalize(build(build, static_cast<std::size_t>(root)))));
    }
    return out;
}

}  // namespace

TEST_CASE("canonicalize is sibling-permutation invariant and idempotent") {
    std::mt19937_64 rng(2024);
    std::vector<std::string> alpha = {"A", "B", "C", "D"};
    for (int i = 0; i < 200; ++i) {
        SubtreeShape s = random_shape(rng, 1 + rng() % 9, alpha);
        SubtreeShape canon = canonicalize(s);
        CHECK(render_shape(canonicalize(canon)) == render_shape(canon));
        SubtreeShape shuffled = s;
        shuffle_siblings(rng, shuffled);
        CHECK(render_shape(canonicalize(shuffled)) == render_shape(canon));
    }
}

TEST_CASE("shape render/parse round-trip") {
    std::mt19937_64 rng(99);
    std::vector<std::string> alpha = {"NP", "VP", "DT", "x"};
    for (int i = 0; i < 200; ++i) {
        SubtreeShape s = canonicalize(random_shape(rng, 1 + rng() % 8, alpha));
        CHECK(parse_shape(render_shape(s)) == s);
    }
    CHECK(render_shape(parse_shape("A(B(C))(D)")) == "A(B(C))(D)");
    CHECK_THROWS_AS(parse_shape("A(B"), parse_error);
    CHECK_THROWS_AS(parse_shape(""), parse_error);
}

TEST_CASE("shape_compare is a strict total order") {
    std::mt19937_64 rng(7);
    std::vector<std::string> alpha = {"A", "B"};
    std::vector<SubtreeShape> shapes;
    for (int i = 0; i < 40; ++i) shapes.push_back(canonicalize(random_shape(rng, 1 + rng() % 6, alpha)));
    for (const auto& a : shapes)
        for (const auto& b : shapes) {
            int ab = shape_compare(a, b), ba = shape_compare(b, a);
            CHECK(ab == -ba);
            if (ab == 0) CHECK(render_shape(a) == render_shape(b));
            for (const auto& c : shapes)
                if (ab < 0 && shape_compare(b, c) < 0) CHECK(shape_compare(a, c) < 0);
        }
}

TEST_CASE("key codec round-trips") {
    std::mt19937_64 rng(31);
    std::vector<std::string> alpha = {"S", "NP", "VP", "DT", "NN", "agouti"};
    LabelTable table(alpha);
    for (int i = 0; i < 500; ++i) {
        SubtreeShape s = canonicalize(random_shape(rng, 1 + rng() % 6, alpha));
        SubtreeKey k = encode_key(s, table);
        CHECK(decode_key(k, table) == s);
    }
    SubtreeShape stranger = parse_shape("ZZZ");
    CHECK_THROWS_AS(encode_key(stranger, table), error);
}

TEST_CASE("key encoding is order-preserving on sizes") {
    // first varint of a key is the subtree size, used by stats()
    LabelTable table(std::vector<std::string>{"A", "B"});
    SubtreeKey k = encode_key(parse_shape("A(B)(B(A))"), table);
    std::size_t pos = 0;
    CHECK(get_varint(k.data(), k.size(), pos) == 4);
}

TEST_CASE("enumerate_subtrees matches brute force on fixed trees") {
    for (const char* text : {"(A (B) (C))", "(A (B (C)))", "(S (NP (DT a) (NN)) (VP (NN)))",
                             "(A (B) (B) (B))"}) {
        ParseTree t = parse_bracketed(text);
        number_nodes(t);
        for (std::size_t mss = 1; mss <= 4; ++mss) {
            auto enumerated = enumerate_subtrees(t, mss);
            std::set<std::string> got;
            for (const auto& e : enumerated) {
                REQUIRE(e.shape.size() <= mss);
                REQUIRE(e.shape == canonicalize(e.shape));
                got.insert(render_shape(e.shape));
            }
            CHECK(got == brute_force_subtree_shapes(t, mss));
        }
    }
}

TEST_CASE("enumerate_subtrees: chain and star counts") {
    ParseTree chain = parse_bracketed("(A (B (C)))");
    number_nodes(chain);
    std::set<std::string> shapes;
    for (const auto& e : enumerate_subtrees(chain, 3)) shapes.insert(render_shape(e.shape));
    CHECK(shapes == std::set<std::string>{"A", "B", "C", "A(B)", "B(C)", "A(B(C))"});

    ParseTree star = parse_bracketed("(A (B) (B))");
    number_nodes(star);
    shapes.clear();
    std::size_t instances = 0;
    for (const auto& e : enumerate_subtrees(star, 2)) {
        shapes.insert(render_shape(e.shape));
        ++instances;
    }
    CHECK(shapes == std::set<std::string>{"A", "B", "A(B)"});
    CHECK(instances == 5);  // A, B, B, and two A(B) instances
}

TEST_CASE("enumerate_subtrees instance node sets are connected and correct") {
    GeneratorConfig cfg;
    cfg.seed = 13;
    cfg.tree_count = 6;
    cfg.min_nodes = 8;
    cfg.max_nodes = 14;
    Corpus c = gen_corpus(cfg);
    for (const auto& t : c.trees) {
        for (const auto& e : enumerate_subtrees(t, 3)) {
            // rebuild the shape from the instance nodes and compare
            const auto& idx = e.instance.node_idx;
            auto in_set = [&](std::size_t i) {
                return std::find(idx.begin(), idx.end(), static_cast<std::uint32_t>(i)) != idx.end();
            };
            auto build = [&](auto&& self, std::size_t i) -> SubtreeShape {
                SubtreeShape s;
                s.label = t.nodes[i].label;
                for (std::size_t ch : t.children_of(i))
                    if (in_set(ch)) s.children.push_back(self(self, ch));
                return s;
            };
            REQUIRE(!idx.empty());
            CHECK(canonicalize(build(build, idx.front())) == e.shape);
        }
    }
}

TEST_CASE("is_subtree_of and embeds_at_root basics") {
    auto S = [](const char* s) { return canonicalize(parse_shape(s)); };
    CHECK(is_subtree_of(S("A"), S("A(B)")));
    CHECK(is_subtree_of(S("A(B)"), S("A(B)(C)")));
    CHECK(is_subtree_of(S("B"), S("A(B)")));
    CHECK(!is_subtree_of(S("A(C)"), S("A(B)")));
    CHECK(is_subtree_of(S("A(B)(B)"), S("A(B)(B)(C)")));
    CHECK(!is_subtree_of(S("A(B)(B)"), S("A(B)(C)")));  // injective: one B only
    CHECK(embeds_at_root(S("A"), S("A(B)")));
    CHECK(!embeds_at_root(S("B"), S("A(B)")));
    CHECK(embeds_at_root(S("A(B)"), S("A(B(C))(D)")));
    CHECK(!embeds_at_root(S("A(B(C))"), S("A(B)(C)")));
}

TEST_CASE("key_bit_bound matches the closed form") {
    CHECK(key_bit_bound(3, 16) == 3 * (2 + 4));
    CHECK(key_bit_bound(1, 2) == 1 * (1 + 1));
    CHECK(key_bit_bound(5, 100) == 5 * (3 + 7));
}
