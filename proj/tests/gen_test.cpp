#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "treedex/exec.hpp"
#include "treedex/gen.hpp"

using namespace treedex;

TEST_CASE("gen_corpus is deterministic and honors the node budget") {
    GeneratorConfig cfg;
    cfg.seed = 42;
    cfg.tree_count = 50;
    Corpus a = gen_corpus(cfg);
    Corpus b = gen_corpus(cfg);
    REQUIRE(a.trees.size() == 50);
    REQUIRE(b.trees.size() == 50);
    for (std::size_t i = 0; i < a.trees.size(); ++i) {
        CHECK(a.trees[i] == b.trees[i]);
        CHECK(a.trees[i].size() >= cfg.min_nodes);
        CHECK(a.trees[i].size() <= cfg.max_nodes);
    }
    cfg.seed = 43;
    Corpus c = gen_corpus(cfg);
    CHECK(!(c.trees[0] == a.trees[0]));
}

TEST_CASE("generated labels come from the configured vocabulary") {
    GeneratorConfig cfg;
    cfg.seed = 9;
    cfg.tree_count = 20;
    Corpus corpus = gen_corpus(cfg);
    std::set<std::string> allowed(cfg.tags.begin(), cfg.tags.end());
    allowed.insert(cfg.words.begin(), cfg.words.end());
    for (const auto& lbl : corpus.label_alphabet()) CHECK(allowed.count(lbl) == 1);
}

TEST_CASE("frequency terciles partition the alphabet by document frequency") {
    GeneratorConfig cfg;
    cfg.seed = 4;
    cfg.tree_count = 200;
    Corpus corpus = gen_corpus(cfg);
    auto terc = detail::frequency_terciles(corpus);
    REQUIRE(terc.size() == 3);
    std::set<std::string> seen;
    std::size_t total = 0;
    for (const auto& bucket : terc) {
        total += bucket.size();
        for (const auto& l : bucket) CHECK(seen.insert(l).second);
    }
    CHECK(total == corpus.label_alphabet().size());

    auto doc_freq = [&](const std::string& l) {
        std::size_t n = 0;
        for (const auto& t : corpus.trees)
            for (const auto& node : t.nodes)
                if (node.label == l) { ++n; break; }
        return n;
    };
    for (const auto& h : terc[0])
        for (const auto& l : terc[2]) CHECK(doc_freq(h) >= doc_freq(l));
}

TEST_CASE("gen_queries respects size bounds, class labels, and axis probability") {
    GeneratorConfig cfg;
    cfg.seed = 11;
    cfg.tree_count = 150;
    Corpus corpus = gen_corpus(cfg);
    auto terc = detail::frequency_terciles(corpus);

    for (FreqClass cls : {FreqClass::H, FreqClass::L, FreqClass::HM, FreqClass::HML}) {
        QuerySpec spec;
        spec.seed = 21;
        spec.count = 15;
        spec.cls = cls;
        spec.min_size = 1;
        spec.max_size = 6;
        auto queries = gen_queries(corpus, spec);
        REQUIRE(queries.size() == 15);
        std::set<std::string> allowed;
        std::string name = freq_class_name(cls);
        if (name.find('H') != std::string::npos) allowed.insert(terc[0].begin(), terc[0].end());
        if (name.find('M') != std::string::npos) allowed.insert(terc[1].begin(), terc[1].end());
        if (name.find('L') != std::string::npos) allowed.insert(terc[2].begin(), terc[2].end());
        for (const auto& q : queries) {
            CHECK(q.size() >= 1);
            CHECK(q.size() <= 6);
            FlatQuery fq = flatten_query(q);
            for (const auto& l : fq.labels) CHECK(allowed.count(l) == 1);
            for (std::size_t n = 1; n < fq.size(); ++n) CHECK(fq.axis[n] == Axis::Child);
        }
    }

    QuerySpec spec;
    spec.seed = 22;
    spec.count = 20;
    spec.descendant_prob = 1.0;
    spec.min_size = 2;
    spec.max_size = 5;
    auto queries = gen_queries(corpus, spec);
    for (const auto& q : queries) {
        FlatQuery fq = flatten_query(q);
        for (std::size_t n = 1; n < fq.size(); ++n) CHECK(fq.axis[n] == Axis::Descendant);
    }
}

TEST_CASE("gen_queries is deterministic and queries actually match the corpus") {
    GeneratorConfig cfg;
    cfg.seed = 2;
    cfg.tree_count = 60;
    Corpus corpus = gen_corpus(cfg);
    QuerySpec spec;
    spec.seed = 5;
    spec.count = 10;
    auto a = gen_queries(corpus, spec);
    auto b = gen_queries(corpus, spec);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(render_query(a[i]) == render_query(b[i]));
    // patterns are grown from corpus subtrees, so '/'-only queries must match
    for (const auto& q : a) CHECK(!oracle_match_corpus(q, corpus).empty());
}

TEST_CASE("gen_queries reports unsatisfiable frequency classes") {
    Corpus tiny = parse_corpus_text("(A)\n(A)\n");
    QuerySpec spec;
    spec.cls = FreqClass::L;
    spec.min_size = 3;
    spec.max_size = 3;
    CHECK_THROWS_AS(gen_queries(tiny, spec), error);
}
