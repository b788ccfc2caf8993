#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include "treedex/data_file.hpp"
#include "treedex/gen.hpp"
#include "treedex/index.hpp"

using namespace treedex;

namespace {

struct Workspace {
    std::string data = "/tmp/treedex_idx_test.data";
    std::string idx = "/tmp/treedex_idx_test.idx";
    ~Workspace() {
        std::remove(data.c_str());
        std::remove(idx.c_str());
    }
};

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("build_index produces the expected keys on a tiny corpus") {
    Workspace w;
    Corpus c = parse_corpus_text("(A (B (C)))\n(A (B))\n");
    write_data_file(c, w.data);
    build_index(w.data, 2, CodingScheme::SubtreeInterval, w.idx);
    IndexReader idx(w.idx);
    CHECK(idx.mss() == 2);
    CHECK(idx.scheme() == CodingScheme::SubtreeInterval);
    std::set<std::string> keys;
    for (const auto& k : idx.keys()) keys.insert(render_shape(decode_key(k, idx.label_table())));
    CHECK(keys == std::set<std::string>{"A", "B", "C", "A(B)", "B(C)"});
    CHECK(idx.posting_count_shape(parse_shape("A(B)")) == 2);
    CHECK(idx.posting_count_shape(parse_shape("B(C)")) == 1);
    CHECK(idx.posting_count_shape(parse_shape("ZZZ")) == 0);
    CHECK(idx.lookup_shape(parse_shape("ZZZ")).entries.empty());
}

TEST_CASE("interval postings carry correct node tuples") {
    Workspace w;
    Corpus c = parse_corpus_text("(A (B (C)) (B))\n");
    write_data_file(c, w.data);
    build_index(w.data, 2, CodingScheme::SubtreeInterval, w.idx);
    IndexReader idx(w.idx);
    PostingList pl = idx.lookup_shape(parse_shape("A(B)"));
    REQUIRE(pl.entries.size() == 2);
    for (const auto& p : pl.entries) {
        CHECK(p.tid == 0);
        REQUIRE(p.nodes.size() == 2);
        // slot 0 is the instance root A: pre 1, post 4, level 0
        CHECK(p.nodes[0].l == 1);
        CHECK(p.nodes[0].r == 4);
        CHECK(p.nodes[0].v == 0);
        CHECK(p.nodes[1].v == 1);
        CHECK(p.nodes[1].o == p.nodes[1].l);
    }
    // the two instances bind the two different B nodes
    CHECK(pl.entries[0].nodes[1].l != pl.entries[1].nodes[1].l);
}

TEST_CASE("root-split postings are deduplicated per root") {
    Workspace w;
    Corpus c = parse_corpus_text("(NP (NN) (NN) (NN))\n");
    write_data_file(c, w.data);

    build_index(w.data, 2, CodingScheme::SubtreeInterval, w.idx);
    {
        IndexReader idx(w.idx);
        CHECK(idx.posting_count_shape(parse_shape("NP(NN)")) == 3);
        CHECK(idx.posting_count_shape(parse_shape("NP")) == 1);
    }
    build_index(w.data, 2, CodingScheme::RootSplit, w.idx);
    {
        IndexReader idx(w.idx);
        CHECK(idx.posting_count_shape(parse_shape("NP(NN)")) == 1);
        PostingList pl = idx.lookup_shape(parse_shape("NP(NN)"));
        REQUIRE(pl.entries.size() == 1);
        REQUIRE(pl.entries[0].nodes.size() == 1);
        CHECK(pl.entries[0].nodes[0].l == 1);  // the NP root
    }
    build_index(w.data, 2, CodingScheme::FilterBased, w.idx);
    {
        IndexReader idx(w.idx);
        PostingList pl = idx.lookup_shape(parse_shape("NP(NN)"));
        REQUIRE(pl.entries.size() == 1);
        CHECK(pl.entries[0].nodes.empty());  // tid only
    }
}

TEST_CASE("posting lists are sorted and cursor agrees with lookup") {
    Workspace w;
    GeneratorConfig cfg;
    cfg.seed = 3;
    cfg.tree_count = 60;
    Corpus c = gen_corpus(cfg);
    write_data_file(c, w.data);
    for (auto scheme :
         {CodingScheme::FilterBased, CodingScheme::SubtreeInterval, CodingScheme::RootSplit}) {
        build_index(w.data, 3, scheme, w.idx);
        IndexReader idx(w.idx);
        for (const auto& key : idx.keys()) {
            PostingList pl = idx.lookup(key);
            CHECK(pl.entries.size() == idx.posting_count(key));
            for (std::size_t i = 1; i < pl.entries.size(); ++i) {
                const auto& a = pl.entries[i - 1];
                const auto& b = pl.entries[i];
                bool sorted =
                    a.tid < b.tid || (a.tid == b.tid && !a.nodes.empty() && a.nodes < b.nodes);
                CHECK(sorted);
            }
            PostingCursor cur = idx.cursor(key);
            std::size_t n = 0;
            Posting p;
            while (cur.next(p)) {
                REQUIRE(n < pl.entries.size());
                CHECK(p.tid == pl.entries[n].tid);
                CHECK(p.nodes == pl.entries[n].nodes);
                ++n;
            }
            CHECK(n == pl.entries.size());
        }
    }
}

TEST_CASE("interval posting counts equal instance enumeration counts") {
    Workspace w;
    GeneratorConfig cfg;
    cfg.seed = 8;
    cfg.tree_count = 20;
    cfg.min_nodes = 6;
    cfg.max_nodes = 20;
    Corpus c = gen_corpus(cfg);
    write_data_file(c, w.data);
    build_index(w.data, 3, CodingScheme::SubtreeInterval, w.idx);
    IndexReader idx(w.idx);
    std::map<std::string, std::uint64_t> expect;
    for (const auto& t : c.trees)
        for (const auto& e : enumerate_subtrees(t, 3)) ++expect[render_shape(e.shape)];
    std::uint64_t total = 0;
    for (const auto& key : idx.keys()) {
        std::string shape = render_shape(decode_key(key, idx.label_table()));
        CHECK(idx.posting_count(key) == expect[shape]);
        total += idx.posting_count(key);
    }
    CHECK(idx.stats().postings == total);
    CHECK(idx.stats().keys == idx.key_count());
}

TEST_CASE("index build is deterministic") {
    Workspace w;
    GeneratorConfig cfg;
    cfg.seed = 19;
    cfg.tree_count = 40;
    Corpus c = gen_corpus(cfg);
    write_data_file(c, w.data);
    std::string other = "/tmp/treedex_idx_test2.idx";
    for (auto scheme :
         {CodingScheme::FilterBased, CodingScheme::SubtreeInterval, CodingScheme::RootSplit}) {
        build_index(w.data, 2, scheme, w.idx);
        build_index(w.data, 2, scheme, other);
        CHECK(slurp(w.idx) == slurp(other));
    }
    std::remove(other.c_str());
}

TEST_CASE("index rejects bad files and bad mss") {
    Workspace w;
    Corpus c = parse_corpus_text("(A)\n");
    write_data_file(c, w.data);
    CHECK_THROWS_AS(build_index(w.data, 0, CodingScheme::FilterBased, w.idx), error);
    CHECK_THROWS_AS(build_index(w.data, 7, CodingScheme::FilterBased, w.idx), error);
    CHECK_THROWS_AS(IndexReader(w.data), io_error);  // wrong magic
    CHECK_THROWS_AS(IndexReader("/tmp/does_not_exist.idx"), io_error);
}

TEST_CASE("stats per-size breakdown sums to totals") {
    Workspace w;
    GeneratorConfig cfg;
    cfg.seed = 23;
    cfg.tree_count = 30;
    Corpus c = gen_corpus(cfg);
    write_data_file(c, w.data);
    build_index(w.data, 4, CodingScheme::RootSplit, w.idx);
    IndexReader idx(w.idx);
    IndexStats st = idx.stats();
    std::uint64_t keys = 0, postings = 0;
    for (const auto& [size, kp] : st.per_size) {
        CHECK(size >= 1);
        CHECK(size <= 4);
        keys += kp.first;
        postings += kp.second;
    }
    CHECK(keys == st.keys);
    CHECK(postings == st.postings);
}
