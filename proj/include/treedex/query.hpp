#ifndef TREEDEX_QUERY_HPP
#define TREEDEX_QUERY_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "treedex/errors.hpp"
#include "treedex/subtree.hpp"

namespace treedex {

enum class Axis : std::uint8_t {
    Child,       // '/'  : parent-child
    Descendant,  // '//' : proper ancestor-descendant
};

/// Unordered tree pattern. Child order is preserved from the query text but
/// carries no matching semantics.
struct QueryNode {
    std::string label;
    std::vector<std::pair<Axis, QueryNode>> children;

    std::size_t size() const {
        std::size_t s = 1;
        for (const auto& [ax, c] : children) s += c.size();
        return s;
    }
    bool operator==(const QueryNode& o) const { return label == o.label && children == o.children; }
};

namespace detail {

// query  := node
// node   := LABEL group*
// group  := '(' axis node ')'
// axis   := '//' | epsilon
inline QueryNode parse_query_node(const std::string& s, std::size_t& p) {
    skip_ws(s, p);
    std::size_t start = p;
    std::string label;
    while (p < s.size() && s[p] != '(' && s[p] != ')' && s[p] != '/' &&
           !std::isspace(static_cast<unsigned char>(s[p])))
        label += s[p++];
    if (label.empty()) throw parse_error("expected label", start);
    QueryNode node;
    node.label = std::move(label);
    skip_ws(s, p);
    while (p < s.size() && s[p] == '(') {
        ++p;
        skip_ws(s, p);
        Axis ax = Axis::Child;
        if (p + 1 < s.size() && s[p] == '/' && s[p + 1] == '/') {
            ax = Axis::Descendant;
            p += 2;
        } else if (p < s.size() && s[p] == '/') {
            throw parse_error("lone '/': axis is implicit or '//'", p);
        }
        node.children.emplace_back(ax, parse_query_node(s, p));
        skip_ws(s, p);
        if (p >= s.size() || s[p] != ')') throw parse_error("expected ')'", p);
        ++p;
        skip_ws(s, p);
    }
    return node;
}

}  // namespace detail

inline QueryNode parse_query(const std::string& text) {
    std::size_t p = 0;
    QueryNode q = detail::parse_query_node(text, p);
    detail::skip_ws(text, p);
    if (p != text.size()) throw parse_error("trailing input", p);
    return q;
}

inline std::string render_query(const QueryNode& q) {
    std::string out = q.label;
    for (const auto& [ax, c] : q.children) {
        out += '(';
        if (ax == Axis::Descendant) out += "//";
        out += render_query(c);
        out += ')';
    }
    return out;
}

/// Query flattened to pre-order node indices; the working form for cover
/// decomposition, planning, and matching.
struct FlatQuery {
    std::vector<std::string> labels;
    std::vector<std::int32_t> parent;             // -1 at the root
    std::vector<Axis> axis;                       // axis to parent; root: Child
    std::vector<std::vector<std::size_t>> kids;   // child indices, textual order

    std::size_t size() const { return labels.size(); }
};

namespace detail {

inline void flatten_query(const QueryNode& q, std::int32_t parent, Axis ax, FlatQuery& out) {
    std::size_t me = out.labels.size();
    out.labels.push_back(q.label);
    out.parent.push_back(parent);
    out.axis.push_back(ax);
    out.kids.emplace_back();
    if (parent >= 0) out.kids[static_cast<std::size_t>(parent)].push_back(me);
    for (const auto& [cax, c] : q.children)
        flatten_query(c, static_cast<std::int32_t>(me), cax, out);
}

}  // namespace detail

inline FlatQuery flatten_query(const QueryNode& q) {
    FlatQuery out;
    detail::flatten_query(q, -1, Axis::Child, out);
    return out;
}

/// One full embedding: tree id plus the bound tree node per query node, as
/// pre ranks aligned with FlatQuery order. Bindings are injective.
struct Embedding {
    std::uint64_t tid = 0;
    std::vector<std::uint32_t> node_pre;
    friend auto operator<=>(const Embedding&, const Embedding&) = default;
};

/// Projection reported to the caller: the binding of the query root.
struct ResultRow {
    std::uint64_t tid = 0;
    std::uint32_t pre = 0, post = 0, level = 0;
    friend auto operator<=>(const ResultRow&, const ResultRow&) = default;
};

}  // namespace treedex

#endif
