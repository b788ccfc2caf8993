#ifndef TREEDEX_TREE_HPP
#define TREEDEX_TREE_HPP

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "treedex/errors.hpp"

namespace treedex {

constexpr std::int32_t kNoParent = -1;

/// One node of a numbered parse tree. pre/post are the pre- and post-visit
/// ranks of a DFS traversal (1-based, tree-local); level is 0 at the root.
struct TreeNode {
    std::int32_t node_id = 0;
    std::int32_t parent_id = kNoParent;
    std::string label;
    std::uint32_t pre = 0;
    std::uint32_t post = 0;
    std::uint32_t level = 0;
};

/// A parse tree with nodes stored in pre order once numbered.
struct ParseTree {
    std::uint64_t tid = 0;
    std::vector<TreeNode> nodes;

    std::size_t size() const { return nodes.size(); }
    const TreeNode& root() const { return nodes.front(); }

    /// Children indices of node i, in stored order.
    std::vector<std::size_t> children_of(std::size_t i) const {
        std::vector<std::size_t> out;
        std::int32_t id = nodes[i].node_id;
        for (std::size_t j = 0; j < nodes.size(); ++j)
            if (nodes[j].parent_id == id) out.push_back(j);
        return out;
    }
};

inline bool operator==(const TreeNode& a, const TreeNode& b) {
    return a.node_id == b.node_id && a.parent_id == b.parent_id && a.label == b.label &&
           a.pre == b.pre && a.post == b.post && a.level == b.level;
}

inline bool operator==(const ParseTree& a, const ParseTree& b) {
    return a.tid == b.tid && a.nodes == b.nodes;
}

struct Corpus {
    std::vector<ParseTree> trees;

    std::set<std::string> label_alphabet() const {
        std::set<std::string> s;
        for (const auto& t : trees)
            for (const auto& n : t.nodes) s.insert(n.label);
        return s;
    }
};

/// Interval-coding ancestry tests (the whole point of pre/post/level numbers).
inline bool is_ancestor(const TreeNode& u, const TreeNode& v) {
    return u.pre < v.pre && v.post < u.post;
}
inline bool is_parent(const TreeNode& u, const TreeNode& v) {
    return is_ancestor(u, v) && v.level == u.level + 1;
}

// --- bracketed input -------------------------------------------------------

namespace detail {

inline void skip_ws(const std::string& s, std::size_t& p) {
    while (p < s.size() && std::isspace(static_cast<unsigned char>(s[p]))) ++p;
}

inline std::string read_token(const std::string& s, std::size_t& p) {
    std::size_t start = p;
    while (p < s.size() && !std::isspace(static_cast<unsigned char>(s[p])) && s[p] != '(' &&
           s[p] != ')')
        ++p;
    if (p == start) throw parse_error("expected label", start);
    return s.substr(start, p - start);
}

// Builds nodes depth-first; returns index of the node created.
inline std::size_t parse_bracketed_rec(const std::string& s, std::size_t& p, ParseTree& t,
                                       std::int32_t parent_id) {
    skip_ws(s, p);
    if (p >= s.size() || s[p] != '(') throw parse_error("expected '('", p);
    ++p;
    skip_ws(s, p);
    std::size_t idx = t.nodes.size();
    t.nodes.emplace_back();
    t.nodes[idx].node_id = static_cast<std::int32_t>(idx);
    t.nodes[idx].parent_id = parent_id;
    t.nodes[idx].label = read_token(s, p);
    skip_ws(s, p);
    while (p < s.size() && s[p] != ')') {
        if (s[p] == '(') {
            parse_bracketed_rec(s, p, t, t.nodes[idx].node_id);
        } else {
            // bare token: a terminal word becomes a leaf labeled by the word
            std::size_t leaf = t.nodes.size();
            t.nodes.emplace_back();
            t.nodes[leaf].node_id = static_cast<std::int32_t>(leaf);
            t.nodes[leaf].parent_id = t.nodes[idx].node_id;
            t.nodes[leaf].label = read_token(s, p);
        }
        skip_ws(s, p);
    }
    if (p >= s.size()) throw parse_error("unbalanced brackets", p);
    ++p;  // ')'
    return idx;
}

}  // namespace detail

/// Parses one bracketed tree `(LABEL child*)`. Numbering is not assigned;
/// call number_nodes afterwards.
inline ParseTree parse_bracketed(const std::string& text) {
    std::size_t p = 0;
    detail::skip_ws(text, p);
    if (p >= text.size()) throw parse_error("empty input", p);
    ParseTree t;
    detail::parse_bracketed_rec(text, p, t, kNoParent);
    detail::skip_ws(text, p);
    if (p != text.size()) throw parse_error("trailing input", p);
    return t;
}

/// Assigns pre/post/level by DFS in textual child order and reorders nodes
/// to pre order.
inline void number_nodes(ParseTree& tree) {
    const std::size_t n = tree.nodes.size();
    if (n == 0) throw structure_error("empty tree");
    std::vector<std::vector<std::size_t>> kids(n);
    std::size_t root = n;
    for (std::size_t i = 0; i < n; ++i) {
        std::int32_t pid = tree.nodes[i].parent_id;
        if (pid == kNoParent) {
            if (root != n) throw structure_error("multiple roots");
            root = i;
        } else {
            if (pid < 0 || static_cast<std::size_t>(pid) >= n)
                throw structure_error("parent id out of range");
            kids[static_cast<std::size_t>(pid)].push_back(i);
        }
    }
    if (root == n) throw structure_error("no root");

    std::uint32_t pre = 0, post = 0;
    std::size_t visited = 0;
    // iterative DFS with explicit post-visit
    struct Frame {
        std::size_t idx;
        std::size_t child;
    };
    std::vector<Frame> stack{{root, 0}};
    tree.nodes[root].pre = ++pre;
    tree.nodes[root].level = 0;
    ++visited;
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.child < kids[f.idx].size()) {
            std::size_t c = kids[f.idx][f.child++];
            tree.nodes[c].pre = ++pre;
            tree.nodes[c].level = tree.nodes[f.idx].level + 1;
            ++visited;
            stack.push_back({c, 0});
        } else {
            tree.nodes[f.idx].post = ++post;
            stack.pop_back();
        }
    }
    if (visited != n) throw structure_error("cycle or unreachable nodes in parent links");

    std::sort(tree.nodes.begin(), tree.nodes.end(),
              [](const TreeNode& a, const TreeNode& b) { return a.pre < b.pre; });
}

/// Renders a tree back to bracketed text (children in stored order).
inline std::string render_bracketed(const ParseTree& t, std::size_t i = 0) {
    std::string out = "(" + t.nodes[i].label;
    for (std::size_t c : t.children_of(i)) {
        out += ' ';
        out += render_bracketed(t, c);
    }
    out += ')';
    return out;
}

/// Reads a UTF-8 text corpus, one bracketed tree per line; tids are the
/// 0-based line indices of non-empty lines.
inline Corpus parse_corpus_text(const std::string& text) {
    Corpus c;
    std::size_t pos = 0;
    std::uint64_t tid = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        std::string line = text.substr(pos, eol - pos);
        pos = eol + 1;
        bool blank = true;
        for (char ch : line)
            if (!std::isspace(static_cast<unsigned char>(ch))) blank = false;
        if (blank) continue;
        ParseTree t = parse_bracketed(line);
        t.tid = tid++;
        number_nodes(t);
        c.trees.push_back(std::move(t));
    }
    return c;
}

// --- stats ------------------------------------------------------------------

struct CorpusStats {
    std::uint64_t node_count = 0;
    std::uint64_t internal_count = 0;
    double avg_branching = 0.0;
    std::uint64_t max_branching = 0;
    std::uint64_t alphabet_size = 0;
    std::uint64_t tree_count = 0;
};

inline CorpusStats corpus_stats(const Corpus& c) {
    CorpusStats s;
    std::uint64_t child_total = 0;
    for (const auto& t : c.trees) {
        s.node_count += t.size();
        std::vector<std::uint32_t> deg(t.size(), 0);
        for (std::size_t i = 0; i < t.size(); ++i) {
            std::int32_t pid = t.nodes[i].parent_id;
            if (pid != kNoParent) {
                for (std::size_t j = 0; j < t.size(); ++j)
                    if (t.nodes[j].node_id == pid) ++deg[j];
            }
        }
        for (std::uint32_t d : deg) {
            if (d > 0) {
                ++s.internal_count;
                child_total += d;
                if (d > s.max_branching) s.max_branching = d;
            }
        }
    }
    s.tree_count = c.trees.size();
    s.alphabet_size = c.label_alphabet().size();
    s.avg_branching =
        s.internal_count ? static_cast<double>(child_total) / static_cast<double>(s.internal_count)
                         : 0.0;
    return s;
}

}  // namespace treedex

#endif
