#ifndef TREEDEX_SUBTREE_HPP
#define TREEDEX_SUBTREE_HPP

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "treedex/errors.hpp"
#include "treedex/tree.hpp"
#include "treedex/varint.hpp"

namespace treedex {

/// An unordered labeled subtree shape. Canonical form keeps children sorted
/// (label first, then recursive structure) so sibling order never matters.
struct SubtreeShape {
    std::string label;
    std::vector<SubtreeShape> children;

    std::size_t size() const {
        std::size_t s = 1;
        for (const auto& c : children) s += c.size();
        return s;
    }
};

/// Total order on shapes: label, then children lexicographically.
inline int shape_compare(const SubtreeShape& a, const SubtreeShape& b) {
    if (a.label != b.label) return a.label < b.label ? -1 : 1;
    std::size_t n = std::min(a.children.size(), b.children.size());
    for (std::size_t i = 0; i < n; ++i) {
        int c = shape_compare(a.children[i], b.children[i]);
        if (c != 0) return c;
    }
    if (a.children.size() != b.children.size())
        return a.children.size() < b.children.size() ? -1 : 1;
    return 0;
}

inline bool operator==(const SubtreeShape& a, const SubtreeShape& b) {
    return shape_compare(a, b) == 0;
}
inline bool operator<(const SubtreeShape& a, const SubtreeShape& b) {
    return shape_compare(a, b) < 0;
}

/// Sorts children at every level; idempotent and sibling-permutation
/// invariant.
inline SubtreeShape canonicalize(SubtreeShape shape) {
    for (auto& c : shape.children) c = canonicalize(std::move(c));
    std::sort(shape.children.begin(), shape.children.end(),
              [](const SubtreeShape& x, const SubtreeShape& y) { return x < y; });
    return shape;
}

/// Debug syntax: A(B)(C) with nesting.
inline std::string render_shape(const SubtreeShape& s) {
    std::string out = s.label;
    for (const auto& c : s.children) out += "(" + render_shape(c) + ")";
    return out;
}

namespace detail {
inline SubtreeShape parse_shape_rec(const std::string& s, std::size_t& p) {
    std::size_t start = p;
    while (p < s.size() && s[p] != '(' && s[p] != ')' &&
           !std::isspace(static_cast<unsigned char>(s[p])))
        ++p;
    if (p == start) throw parse_error("expected label", start);
    SubtreeShape out;
    out.label = s.substr(start, p - start);
    skip_ws(s, p);
    while (p < s.size() && s[p] == '(') {
        ++p;
        skip_ws(s, p);
        out.children.push_back(parse_shape_rec(s, p));
        skip_ws(s, p);
        if (p >= s.size() || s[p] != ')') throw parse_error("expected ')'", p);
        ++p;
        skip_ws(s, p);
    }
    return out;
}
}  // namespace detail

inline SubtreeShape parse_shape(const std::string& text) {
    std::size_t p = 0;
    detail::skip_ws(text, p);
    SubtreeShape s = detail::parse_shape_rec(text, p);
    detail::skip_ws(text, p);
    if (p != text.size()) throw parse_error("trailing input", p);
    return s;
}

// --- index keys ---------------------------------------------------------

/// Maps labels to dense ids; ids are the sorted ranks, so a table built from
/// the same alphabet is always identical.
class LabelTable {
  public:
    LabelTable() = default;
    template <typename Range>
    explicit LabelTable(const Range& labels) : labels_(labels.begin(), labels.end()) {
        std::sort(labels_.begin(), labels_.end());
        labels_.erase(std::unique(labels_.begin(), labels_.end()), labels_.end());
    }

    std::size_t size() const { return labels_.size(); }
    const std::vector<std::string>& labels() const { return labels_; }

    /// Returns the id, or -1 when absent.
    std::int64_t find(const std::string& s) const {
        auto it = std::lower_bound(labels_.begin(), labels_.end(), s);
        if (it == labels_.end() || *it != s) return -1;
        return it - labels_.begin();
    }
    const std::string& at(std::uint64_t id) const {
        if (id >= labels_.size()) throw io_error("label id out of range");
        return labels_[id];
    }

  private:
    std::vector<std::string> labels_;
};

using SubtreeKey = std::vector<std::uint8_t>;

/// Pre-order sequence of (size, label id) varint pairs.
inline SubtreeKey encode_key(const SubtreeShape& shape, const LabelTable& table) {
    SubtreeKey out;
    auto rec = [&](auto&& self, const SubtreeShape& s) -> void {
        std::int64_t id = table.find(s.label);
        if (id < 0) throw error("label not in alphabet: " + s.label);
        put_varint(out, s.size());
        put_varint(out, static_cast<std::uint64_t>(id));
        for (const auto& c : s.children) self(self, c);
    };
    rec(rec, shape);
    return out;
}

inline SubtreeShape decode_key(const SubtreeKey& key, const LabelTable& table) {
    std::size_t pos = 0;
    auto rec = [&](auto&& self) -> SubtreeShape {
        std::uint64_t size = get_varint(key.data(), key.size(), pos);
        std::uint64_t id = get_varint(key.data(), key.size(), pos);
        if (size == 0) throw io_error("bad key: zero size");
        SubtreeShape s;
        s.label = table.at(id);
        std::uint64_t consumed = 1;
        while (consumed < size) {
            SubtreeShape c = self(self);
            consumed += c.size();
            if (consumed > size) throw io_error("bad key: child overflow");
            s.children.push_back(std::move(c));
        }
        return s;
    };
    SubtreeShape s = rec(rec);
    if (pos != key.size()) throw io_error("bad key: trailing bytes");
    return s;
}

/// Reference bit bound for a key: mss * (ceil(log2(mss+1)) + ceil(log2 |alphabet|)).
/// Documented as the information-theoretic floor; stored keys are byte-aligned.
inline std::uint64_t key_bit_bound(std::uint64_t mss, std::uint64_t alphabet_size) {
    auto clog2 = [](std::uint64_t v) {
        std::uint64_t b = 0;
        while ((1ull << b) < v) ++b;
        return b;
    };
    return mss * (clog2(mss + 1) + clog2(alphabet_size));
}

// --- enumeration ----------------------------------------------------------

/// One occurrence of a shape inside a data tree. Node ids are aligned
/// one-to-one with the canonical pre-order of the shape; nodes[0] is the
/// instance root.
struct SubtreeInstance {
    std::uint64_t tid = 0;
    std::vector<std::uint32_t> node_idx;  // indices into ParseTree::nodes (pre order)
};

struct EnumeratedSubtree {
    SubtreeShape shape;  // canonical
    SubtreeInstance instance;
};

namespace detail {

struct Candidate {
    SubtreeShape shape;  // canonical
    std::vector<std::uint32_t> nodes;
    std::size_t size;
};

// All connected subtrees rooted at node v with size <= budget. Each node set
// is produced exactly once: the root is fixed and children combine by subset.
inline std::vector<Candidate> rooted_subtrees(const ParseTree& t,
                                              const std::vector<std::vector<std::uint32_t>>& kids,
                                              std::uint32_t v, std::size_t budget) {
    std::vector<Candidate> partials;
    partials.push_back({SubtreeShape{t.nodes[v].label, {}}, {v}, 1});
    for (std::uint32_t c : kids[v]) {
        std::vector<Candidate> next = partials;  // skip child c
        std::vector<Candidate> child_cands;
        bool computed = false;
        for (const auto& p : partials) {
            if (p.size >= budget) continue;
            if (!computed) {
                child_cands = rooted_subtrees(t, kids, c, budget - 1);
                computed = true;
            }
            for (const auto& cc : child_cands) {
                if (p.size + cc.size > budget) continue;
                Candidate merged = p;
                merged.size += cc.size;
                // keep children canonically sorted as we splice the new one in
                std::size_t at = 0, node_at = 1;
                while (at < merged.shape.children.size() &&
                       shape_compare(merged.shape.children[at], cc.shape) <= 0) {
                    node_at += merged.shape.children[at].size();
                    ++at;
                }
                merged.shape.children.insert(merged.shape.children.begin() + at, cc.shape);
                merged.nodes.insert(merged.nodes.begin() + node_at, cc.nodes.begin(),
                                    cc.nodes.end());
                next.push_back(std::move(merged));
            }
        }
        partials = std::move(next);
    }
    return partials;
}

}  // namespace detail

/// Emits every connected subtree of size 1..mss, once per distinct node set,
/// paired with its canonical shape.
inline std::vector<EnumeratedSubtree> enumerate_subtrees(const ParseTree& tree, std::size_t mss) {
    if (mss < 1 || mss > 6) throw error("mss out of range (1..6)");
    std::vector<std::vector<std::uint32_t>> kids(tree.size());
    for (std::uint32_t i = 0; i < tree.size(); ++i) {
        std::int32_t pid = tree.nodes[i].parent_id;
        if (pid == kNoParent) continue;
        for (std::uint32_t j = 0; j < tree.size(); ++j)
            if (tree.nodes[j].node_id == pid) kids[j].push_back(i);
    }
    std::vector<EnumeratedSubtree> out;
    for (std::uint32_t v = 0; v < tree.size(); ++v) {
        for (auto& cand : detail::rooted_subtrees(tree, kids, v, mss)) {
            EnumeratedSubtree e;
            e.shape = std::move(cand.shape);
            e.instance.tid = tree.tid;
            e.instance.node_idx = std::move(cand.nodes);
            out.push_back(std::move(e));
        }
    }
    return out;
}

// --- subtree relation -------------------------------------------------------

namespace detail {
// injective matching of a's children into u's children, each pair embedding
inline bool embed_children(const std::vector<SubtreeShape>& need,
                           const std::vector<SubtreeShape>& have, std::size_t i,
                           std::vector<bool>& used);

inline bool embeds_at(const SubtreeShape& a, const SubtreeShape& b) {
    if (a.label != b.label) return false;
    if (a.children.size() > b.children.size()) return false;
    std::vector<bool> used(b.children.size(), false);
    return embed_children(a.children, b.children, 0, used);
}

inline bool embed_children(const std::vector<SubtreeShape>& need,
                           const std::vector<SubtreeShape>& have, std::size_t i,
                           std::vector<bool>& used) {
    if (i == need.size()) return true;
    for (std::size_t j = 0; j < have.size(); ++j) {
        if (used[j] || !embeds_at(need[i], have[j])) continue;
        used[j] = true;
        if (embed_children(need, have, i + 1, used)) return true;
        used[j] = false;
    }
    return false;
}
}  // namespace detail

/// True when a embeds into b with both roots aligned.
inline bool embeds_at_root(const SubtreeShape& a, const SubtreeShape& b) {
    return detail::embeds_at(a, b);
}

/// Definition: a is a subtree of b when an embedding exists anywhere in b,
/// preserving labels and parent-child edges, injective on nodes.
inline bool is_subtree_of(const SubtreeShape& a, const SubtreeShape& b) {
    if (detail::embeds_at(a, b)) return true;
    for (const auto& c : b.children)
        if (is_subtree_of(a, c)) return true;
    return false;
}

}  // namespace treedex

#endif
