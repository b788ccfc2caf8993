#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>

#include "treedex/data_file.hpp"
#include "treedex/gen.hpp"

using namespace treedex;

namespace {
struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) : path("/tmp/treedex_test_" + name) {}
    ~TempFile() { std::remove(path.c_str()); }
};
}  // namespace

TEST_CASE("data file round-trips an empty corpus") {
    TempFile f("empty.data");
    Corpus c;
    auto sum = write_data_file(c, f.path);
    CHECK(sum.trees == 0);
    CHECK(sum.nodes == 0);
    DataFileReader r(f.path);
    CHECK(r.tree_count() == 0);
    CHECK(r.tids().empty());
}

TEST_CASE("data file round-trips trees exactly") {
    TempFile f("two.data");
    Corpus c = parse_corpus_text("(A (B) (C))\n(S (NP (DT the) (NN dog)) (VP (VBZ runs)))\n");
    write_data_file(c, f.path);
    DataFileReader r(f.path);
    REQUIRE(r.tree_count() == 2);
    CHECK(r.read_tree(0) == c.trees[0]);
    CHECK(r.read_tree(1) == c.trees[1]);
}

TEST_CASE("data file rejects unknown tid and duplicate tid") {
    TempFile f("bad.data");
    Corpus c = parse_corpus_text("(A)\n(B)\n");
    SECTION("unknown tid") {
        write_data_file(c, f.path);
        DataFileReader r(f.path);
        CHECK_THROWS_AS(r.read_tree(42), error);
    }
    SECTION("duplicate tid rejected at write time") {
        c.trees[1].tid = c.trees[0].tid;
        CHECK_THROWS_AS(write_data_file(c, f.path), error);
    }
    SECTION("out-of-order tids rejected at write time") {
        std::swap(c.trees[0], c.trees[1]);
        CHECK_THROWS_AS(write_data_file(c, f.path), error);
    }
}

TEST_CASE("data file rejects corrupt bytes") {
    TempFile f("corrupt.data");
    Corpus c = parse_corpus_text("(A (B))\n");
    write_data_file(c, f.path);
    std::string bytes;
    {
        std::ifstream in(f.path, std::ios::binary);
        bytes.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }
    bytes[0] ^= 0x5a;  // clobber the magic
    {
        std::ofstream out(f.path, std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }
    CHECK_THROWS_AS(DataFileReader(f.path), io_error);
}

TEST_CASE("1000-tree corpus: summary counts and full round-trip") {
    TempFile f("big.data");
    GeneratorConfig cfg;
    cfg.seed = 77;
    cfg.tree_count = 1000;
    Corpus c = gen_corpus(cfg);
    auto sum = write_data_file(c, f.path);
    CHECK(sum.trees == 1000);
    std::uint64_t nodes = 0;
    for (const auto& t : c.trees) nodes += t.size();
    CHECK(sum.nodes == nodes);
    DataFileReader r(f.path);
    REQUIRE(r.tree_count() == 1000);
    for (std::size_t i = 0; i < c.trees.size(); i += 97)
        CHECK(r.read_tree(c.trees[i].tid) == c.trees[i]);
}
