#include <catch2/catch_amalgamated.hpp>

#include "treedex/query.hpp"

using namespace treedex;

TEST_CASE("parse_query handles both axes") {
    QueryNode q = parse_query("S(NP(//agouti))(VP)");
    CHECK(q.label == "S");
    REQUIRE(q.children.size() == 2);
    CHECK(q.children[0].first == Axis::Child);
    CHECK(q.children[0].second.label == "NP");
    REQUIRE(q.children[0].second.children.size() == 1);
    CHECK(q.children[0].second.children[0].first == Axis::Descendant);
    CHECK(q.children[0].second.children[0].second.label == "agouti");
    CHECK(q.children[1].second.label == "VP");
    CHECK(q.size() == 4);
}

TEST_CASE("render_query inverts parse_query") {
    for (const char* s : {"A", "A(B)(C)", "S(NP(//agouti))(VP(VBZ)(//NN))", "A(//B(//C))"}) {
        CHECK(render_query(parse_query(s)) == s);
    }
}

TEST_CASE("parse_query rejects malformed text") {
    CHECK_THROWS_AS(parse_query(""), parse_error);
    CHECK_THROWS_AS(parse_query("A(B"), parse_error);
    CHECK_THROWS_AS(parse_query("A)B("), parse_error);
    CHECK_THROWS_AS(parse_query("A(B))"), parse_error);
    CHECK_THROWS_AS(parse_query("(A)"), parse_error);
}

TEST_CASE("flatten_query emits pre-order with parent and axis") {
    FlatQuery fq = flatten_query(parse_query("S(NP(DT)(//NN))(VP)"));
    REQUIRE(fq.size() == 5);
    CHECK(fq.labels == std::vector<std::string>{"S", "NP", "DT", "NN", "VP"});
    CHECK(fq.parent == std::vector<std::int32_t>{-1, 0, 1, 1, 0});
    CHECK(fq.axis[0] == Axis::Child);  // root axis is a placeholder
    CHECK(fq.axis[1] == Axis::Child);
    CHECK(fq.axis[2] == Axis::Child);
    CHECK(fq.axis[3] == Axis::Descendant);
    CHECK(fq.axis[4] == Axis::Child);
    CHECK(fq.kids[0] == std::vector<std::size_t>{1, 4});
    CHECK(fq.kids[1] == std::vector<std::size_t>{2, 3});
}

TEST_CASE("ResultRow orders by tid then position") {
    ResultRow a{1, 2, 3, 0}, b{1, 3, 1, 0}, c{2, 1, 1, 0};
    CHECK(a < b);
    CHECK(b < c);
    CHECK(a == a);
}
