#ifndef TREEDEX_DECOMPOSE_HPP
#define TREEDEX_DECOMPOSE_HPP

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "treedex/errors.hpp"
#include "treedex/index.hpp"
#include "treedex/query.hpp"
#include "treedex/subtree.hpp"

namespace treedex {

/// One cover subtree: a canonical shape plus the query node anchored at each
/// canonical pre-order slot. anchor[0] is the subtree root's query node.
struct CoverSubtree {
    SubtreeShape shape;
    std::vector<std::size_t> anchor;

    std::size_t root() const { return anchor.front(); }
    bool contains(std::size_t qnode) const {
        return std::find(anchor.begin(), anchor.end(), qnode) != anchor.end();
    }
    std::optional<std::size_t> slot_of(std::size_t qnode) const {
        auto it = std::find(anchor.begin(), anchor.end(), qnode);
        if (it == anchor.end()) return std::nullopt;
        return static_cast<std::size_t>(it - anchor.begin());
    }
};

enum class CoverKind : std::uint8_t { NodeCover, FullCover, RootSplitCover };

struct Cover {
    std::vector<CoverSubtree> subtrees;
    CoverKind kind = CoverKind::NodeCover;
};

/// Computes covers over one Child-connected query region. Stateful: emitted
/// subtrees accumulate and later bins are padded with already-covered nodes.
class CoverEngine {
  public:
    CoverEngine(const FlatQuery& q, std::size_t mss, bool root_split,
                std::vector<char> region_mask = {}, std::vector<char> must_root = {})
        : q_(q),
          mss_(mss),
          root_split_(root_split),
          mask_(std::move(region_mask)),
          must_root_(std::move(must_root)) {
        if (mss_ < 1 || mss_ > 6) throw error("mss out of range (1..6)");
        if (mask_.empty()) mask_.assign(q_.size(), 1);
        if (must_root_.empty()) must_root_.assign(q_.size(), 0);
        covered_.assign(q_.size(), 0);
        cover_count_.assign(q_.size(), 0);
        kids_.resize(q_.size());
        for (std::size_t n = 0; n < q_.size(); ++n) {
            if (!mask_[n]) continue;
            for (std::size_t c : q_.kids[n])
                if (mask_[c] && q_.axis[c] == Axis::Child) kids_[n].push_back(c);
        }
        full_size_.assign(q_.size(), 0);
    }

    /// Runs the full decomposition of the region rooted at `root` and returns
    /// the subtrees in emission order.
    std::vector<CoverSubtree> run(std::size_t root, bool min_rc) {
        min_rc_ = min_rc;
        compute_sizes(root);
        bool inner_must_root = false;
        for (std::size_t n = 0; n < q_.size(); ++n)
            if (mask_[n] && n != root && must_root_[n]) inner_must_root = true;
        if (full_size_[root] < mss_ && !inner_must_root) {
            emit(root, region_nodes(root));
        } else {
            frame(root, true);
        }
        return out_;
    }

    /// One bin rooted at Q (exposed for partitioning tests). compute_sizes
    /// must reflect the region; run() callers never need this directly.
    CoverSubtree assign(std::size_t Q) {
        if (full_size_[Q] == 0) compute_sizes(Q);
        std::vector<std::size_t> t = assign_set(Q);
        emit(Q, t);
        return out_.back();
    }

    const std::vector<char>& covered() const { return covered_; }

  private:
    void compute_sizes(std::size_t n) {
        full_size_[n] = 1;
        for (std::size_t c : kids_[n]) {
            compute_sizes(c);
            full_size_[n] += full_size_[c];
        }
    }

    std::vector<std::size_t> region_nodes(std::size_t n) const {
        std::vector<std::size_t> out{n};
        for (std::size_t c : kids_[n]) {
            auto sub = region_nodes(c);
            out.insert(out.end(), sub.begin(), sub.end());
        }
        return out;
    }

    std::size_t uncovered_in(std::size_t n) const {
        std::size_t u = covered_[n] ? 0 : 1;
        for (std::size_t c : kids_[n]) u += uncovered_in(c);
        return u;
    }

    // Minimal connected subtree rooted at n reaching every uncovered node
    // below (and including) n. Covered nodes appear only as connectors.
    void steiner_set(std::size_t n, std::vector<std::size_t>& out) const {
        out.push_back(n);
        for (std::size_t c : kids_[n])
            if (uncovered_in(c) > 0) steiner_set(c, out);
    }

    std::size_t steiner_size(std::size_t Q) const {
        std::size_t s = 1;
        for (std::size_t c : kids_[Q])
            if (uncovered_in(c) > 0) {
                std::vector<std::size_t> tmp;
                steiner_set(c, tmp);
                s += tmp.size();
            }
        return s;
    }

    bool has_must_root_below(std::size_t n) const {
        for (std::size_t c : kids_[n])
            if (must_root_[c] || has_must_root_below(c)) return true;
        return false;
    }

    bool must_recurse(std::size_t c) const {
        if (!root_split_) return false;
        if (has_must_root_below(c)) return true;
        return must_root_[c] && full_size_[c] < mss_;
    }

    void frame(std::size_t Q, bool is_root) {
        for (std::size_t c : kids_[Q]) {
            if (full_size_[c] > mss_ || must_recurse(c)) {
                frame(c, false);
            } else if (full_size_[c] == mss_) {
                emit(c, region_nodes(c));
            }
        }
        while (uncovered_in(Q) > 0 && (min_rc_ || steiner_size(Q) >= mss_))
            emit(Q, assign_set(Q));
        while (!min_rc_ && is_root && uncovered_in(Q) > 0) emit(Q, assign_set(Q));
    }

    // One bin: pack uncovered child material first-fit by decreasing weight
    // (capacity mss - 1 beside Q itself), then pad to mss from covered
    // neighbor subtrees.
    std::vector<std::size_t> assign_set(std::size_t Q) {
        std::vector<std::size_t> t{Q};
        std::size_t cnt = 1;

        struct Item {
            std::size_t child;
            std::vector<std::size_t> nodes;
            SubtreeShape shape;
        };
        std::vector<Item> items;
        for (std::size_t c : kids_[Q])
            if (uncovered_in(c) > 0) {
                Item it;
                it.child = c;
                steiner_set(c, it.nodes);
                it.shape = materialize(c, it.nodes).shape;
                items.push_back(std::move(it));
            }
        std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
            if (a.nodes.size() != b.nodes.size()) return a.nodes.size() > b.nodes.size();
            int c = shape_compare(a.shape, b.shape);
            if (c != 0) return c < 0;
            return a.child < b.child;
        });
        for (const Item& it : items) {
            if (cnt + it.nodes.size() > mss_) continue;
            t.insert(t.end(), it.nodes.begin(), it.nodes.end());
            cnt += it.nodes.size();
        }

        while (cnt < mss_) {
            std::vector<std::size_t> cands;
            for (std::size_t p : t)
                for (std::size_t c : kids_[p])
                    if (std::find(t.begin(), t.end(), c) == t.end()) cands.push_back(c);
            if (cands.empty()) break;
            std::sort(cands.begin(), cands.end(), [&](std::size_t a, std::size_t b) {
                if (full_size_[a] != full_size_[b]) return full_size_[a] < full_size_[b];
                SubtreeShape sa = materialize(a, region_nodes(a)).shape;
                SubtreeShape sb = materialize(b, region_nodes(b)).shape;
                int c = shape_compare(sa, sb);
                if (c != 0) return c < 0;
                return a < b;
            });
            std::size_t c = cands.front();
            std::size_t k = std::min(mss_ - cnt, full_size_[c]);
            std::vector<std::size_t> filler = grow_filler(Q, t, c, k);
            t.insert(t.end(), filler.begin(), filler.end());
            cnt += filler.size();
        }
        return t;
    }

    // Grows the padding subtree rooted at c one node at a time: avoid nodes
    // that would introduce a deep-branching witness against an emitted
    // subtree, then prefer the least-reused nodes, then the canonically
    // largest subtree (tie broken toward stability).
    std::vector<std::size_t> grow_filler(std::size_t Q, const std::vector<std::size_t>& t,
                                         std::size_t c, std::size_t k) {
        std::vector<std::size_t> f{c};
        while (f.size() < k) {
            std::vector<std::size_t> cands;
            for (std::size_t p : f)
                for (std::size_t u : kids_[p])
                    if (std::find(f.begin(), f.end(), u) == f.end() &&
                        std::find(t.begin(), t.end(), u) == t.end())
                        cands.push_back(u);
            if (cands.empty()) break;
            auto score = [&](std::size_t u) {
                return std::pair<int, int>(witness_penalty(Q, t, f, u), cover_count_[u]);
            };
            std::sort(cands.begin(), cands.end(), [&](std::size_t a, std::size_t b) {
                auto sa = score(a), sb = score(b);
                if (sa != sb) return sa < sb;
                SubtreeShape ta = materialize(a, region_nodes(a)).shape;
                SubtreeShape tb = materialize(b, region_nodes(b)).shape;
                int cmp = shape_compare(ta, tb);
                if (cmp != 0) return cmp > 0;  // canonically larger first
                return a < b;
            });
            f.push_back(cands.front());
        }
        return f;
    }

    // Would adding u (a child of some node p in the filler) let the bin and
    // an earlier subtree disagree about p's children without a subtree rooted
    // at p to arbitrate?
    int witness_penalty(std::size_t Q, const std::vector<std::size_t>& t,
                        const std::vector<std::size_t>& f, std::size_t u) {
        std::size_t p = static_cast<std::size_t>(q_.parent[u]);
        if (p == Q) return 0;
        auto in = [](const std::vector<std::size_t>& v, std::size_t x) {
            return std::find(v.begin(), v.end(), x) != v.end();
        };
        for (const auto& s : emitted_) {
            if (s.root == p || !in(s.nodes, p) || in(s.nodes, u)) continue;
            bool split = false;
            for (std::size_t x : kids_[p])
                if (in(s.nodes, x) && !in(t, x) && !in(f, x) && x != u) split = true;
            if (!split) continue;
            bool repaired = false;
            for (const auto& r : emitted_) {
                if (r.root != p) continue;
                bool all = true;
                for (std::size_t x : kids_[p]) {
                    bool mentioned = in(s.nodes, x) || in(t, x) || in(f, x) || x == u;
                    if (mentioned && !in(r.nodes, x)) all = false;
                }
                if (all) repaired = true;
            }
            if (!repaired) return 1;
        }
        return 0;
    }

    CoverSubtree materialize(std::size_t root, const std::vector<std::size_t>& nodes) const {
        struct Piece {
            SubtreeShape shape;
            std::vector<std::size_t> anchor;
        };
        auto in = [&](std::size_t x) {
            return std::find(nodes.begin(), nodes.end(), x) != nodes.end();
        };
        auto build = [&](auto&& self, std::size_t n) -> Piece {
            std::vector<Piece> parts;
            for (std::size_t c : kids_[n])
                if (in(c)) parts.push_back(self(self, c));
            std::sort(parts.begin(), parts.end(), [](const Piece& a, const Piece& b) {
                int c = shape_compare(a.shape, b.shape);
                if (c != 0) return c < 0;
                return a.anchor < b.anchor;
            });
            Piece out;
            out.shape.label = q_.labels[n];
            out.anchor.push_back(n);
            for (auto& p : parts) {
                out.shape.children.push_back(std::move(p.shape));
                out.anchor.insert(out.anchor.end(), p.anchor.begin(), p.anchor.end());
            }
            return out;
        };
        Piece p = build(build, root);
        return CoverSubtree{std::move(p.shape), std::move(p.anchor)};
    }

    void emit(std::size_t root, std::vector<std::size_t> nodes) {
        out_.push_back(materialize(root, nodes));
        for (std::size_t n : nodes) {
            covered_[n] = 1;
            ++cover_count_[n];
        }
        emitted_.push_back({root, std::move(nodes)});
    }

    struct Emitted {
        std::size_t root;
        std::vector<std::size_t> nodes;
    };

    const FlatQuery& q_;
    std::size_t mss_;
    bool root_split_;
    bool min_rc_ = false;
    std::vector<char> mask_, must_root_, covered_;
    std::vector<int> cover_count_;
    std::vector<std::vector<std::size_t>> kids_;
    std::vector<std::size_t> full_size_;
    std::vector<CoverSubtree> out_;
    std::vector<Emitted> emitted_;
};

namespace detail {

inline void check_child_only(const FlatQuery& fq) {
    for (std::size_t n = 1; n < fq.size(); ++n)
        if (fq.axis[n] != Axis::Child)
            throw error("cover decomposition applies to '/'-only regions");
}

}  // namespace detail

/// Join-optimal cover of a '/'-only query: minimum number of subtrees, all of
/// size exactly mss (single whole-query subtree when |q| < mss).
inline Cover optimal_cover(const FlatQuery& fq, std::size_t mss) {
    detail::check_child_only(fq);
    CoverEngine eng(fq, mss, /*root_split=*/false);
    Cover c;
    c.kind = CoverKind::NodeCover;
    c.subtrees = eng.run(0, /*min_rc=*/false);
    return c;
}

inline Cover optimal_cover(const QueryNode& q, std::size_t mss) {
    FlatQuery fq = flatten_query(q);
    return optimal_cover(fq, mss);
}

/// Smallest root-split cover of a '/'-only query: subtree roots pairwise
/// relate by same-node or parent-child and every branch point is settled
/// before its ancestors (no deep-branching anomaly).
inline Cover min_rc(const FlatQuery& fq, std::size_t mss) {
    detail::check_child_only(fq);
    CoverEngine eng(fq, mss, /*root_split=*/true);
    Cover c;
    c.kind = CoverKind::RootSplitCover;
    c.subtrees = eng.run(0, /*min_rc=*/true);
    return c;
}

inline Cover min_rc(const QueryNode& q, std::size_t mss) {
    FlatQuery fq = flatten_query(q);
    return min_rc(fq, mss);
}

/// One witness per (s_i, s_j, v): the two subtrees share v as a non-root node
/// yet disagree about v's children, with no emitted subtree rooted at v that
/// carries every mentioned child (which would arbitrate the disagreement).
struct AnomalyWitness {
    std::size_t s_i = 0, s_j = 0;  // indices into Cover::subtrees
    std::size_t v = 0;             // shared branching query node
    std::size_t u = 0, u_prime = 0;  // sample split evidence (children of v)
};

inline std::vector<AnomalyWitness> detect_anomaly(const Cover& cover, const FlatQuery& fq) {
    std::vector<AnomalyWitness> out;
    const auto& subs = cover.subtrees;
    for (std::size_t i = 0; i < subs.size(); ++i) {
        for (std::size_t j = i + 1; j < subs.size(); ++j) {
            for (std::size_t v = 0; v < fq.size(); ++v) {
                if (subs[i].root() == v || subs[j].root() == v) continue;
                if (!subs[i].contains(v) || !subs[j].contains(v)) continue;
                std::optional<std::size_t> u, u_prime;
                for (std::size_t x : fq.kids[v]) {
                    if (fq.axis[x] != Axis::Child) continue;
                    if (subs[i].contains(x) && !subs[j].contains(x) && !u) u = x;
                    if (subs[j].contains(x) && !subs[i].contains(x) && !u_prime) u_prime = x;
                }
                if (!u || !u_prime) continue;
                bool repaired = false;
                for (const auto& r : subs) {
                    if (r.root() != v) continue;
                    bool all = true;
                    for (std::size_t x : fq.kids[v]) {
                        if (fq.axis[x] != Axis::Child) continue;
                        if ((subs[i].contains(x) || subs[j].contains(x)) && !r.contains(x))
                            all = false;
                    }
                    if (all) repaired = true;
                }
                if (repaired) continue;
                out.push_back({i, j, v, *u, *u_prime});
            }
        }
    }
    return out;
}

inline std::vector<AnomalyWitness> detect_anomaly(const Cover& cover, const QueryNode& q) {
    FlatQuery fq = flatten_query(q);
    return detect_anomaly(cover, fq);
}

enum class PredicateKind : std::uint8_t { SameNode, ParentChild, AncestorDescendant };

/// Binary predicate between two leaf slots. Slots are canonical pre-order
/// positions in the leaf's key; under root-split coding only slot 0 is bound.
struct JoinPredicate {
    PredicateKind kind = PredicateKind::SameNode;
    std::size_t left_leaf = 0, right_leaf = 0;
    std::size_t left_slot = 0, right_slot = 0;
};

struct PlanLeaf {
    CoverSubtree subtree;
    std::uint64_t estimate = 0;  // posting-list length when an index is given
};

struct JoinPlan {
    CodingScheme scheme = CodingScheme::FilterBased;
    std::size_t mss = 0;
    FlatQuery query;
    std::vector<PlanLeaf> leaves;          // left-deep join order
    std::vector<JoinPredicate> predicates;
    std::size_t root_leaf = 0, root_slot = 0;  // where the query root is bound
    // Root-split only: true when two same-label query nodes could bind the
    // same tree node without either binding being visible at a leaf root, so
    // the join result must be confirmed against the data file.
    bool verify = false;
};

inline std::size_t count_joins(const JoinPlan& plan) {
    return plan.leaves.empty() ? 0 : plan.leaves.size() - 1;
}

/// Decompose a query into cover leaves and join predicates. `//` edges bound
/// Child-connected regions; each region is covered independently. When an
/// index is supplied, leaves are ordered by ascending posting-list length.
inline JoinPlan plan_query(const QueryNode& q, std::size_t mss, CodingScheme scheme,
                           const IndexReader* index = nullptr) {
    JoinPlan plan;
    plan.scheme = scheme;
    plan.mss = mss;
    plan.query = flatten_query(q);
    const FlatQuery& fq = plan.query;
    bool root_split = scheme == CodingScheme::RootSplit;

    std::vector<std::size_t> region(fq.size(), 0);
    std::vector<std::size_t> region_roots{0};
    for (std::size_t n = 1; n < fq.size(); ++n) {
        if (fq.axis[n] == Axis::Descendant) {
            region[n] = region_roots.size();
            region_roots.push_back(n);
        } else {
            region[n] = region[static_cast<std::size_t>(fq.parent[n])];
        }
    }
    std::vector<char> must_root(fq.size(), 0);
    if (root_split)
        for (std::size_t n = 1; n < fq.size(); ++n)
            if (fq.axis[n] == Axis::Descendant)
                must_root[static_cast<std::size_t>(fq.parent[n])] = 1;

    std::vector<PlanLeaf> leaves;
    for (std::size_t r = 0; r < region_roots.size(); ++r) {
        std::vector<char> mask(fq.size(), 0);
        for (std::size_t n = 0; n < fq.size(); ++n) mask[n] = region[n] == r;
        CoverEngine eng(fq, mss, root_split, mask, must_root);
        for (auto& s : eng.run(region_roots[r], /*min_rc=*/root_split))
            leaves.push_back({std::move(s), 0});
    }

    if (index)
        for (auto& leaf : leaves) leaf.estimate = index->posting_count_shape(leaf.subtree.shape);
    std::stable_sort(leaves.begin(), leaves.end(),
                     [](const PlanLeaf& a, const PlanLeaf& b) { return a.estimate < b.estimate; });
    plan.leaves = std::move(leaves);

    // Leaf choices below must be expressible: under root-split coding a
    // predicate endpoint has to be a leaf root.
    auto leaf_for = [&](std::size_t v, bool need_root) -> std::pair<std::size_t, std::size_t> {
        for (std::size_t i = 0; i < plan.leaves.size(); ++i) {
            const auto& sub = plan.leaves[i].subtree;
            if (need_root) {
                if (sub.root() == v) return {i, 0};
            } else if (auto s = sub.slot_of(v)) {
                return {i, *s};
            }
        }
        throw error("internal: query node has no usable leaf slot");
    };

    for (std::size_t v = 0; v < fq.size(); ++v) {
        std::vector<std::pair<std::size_t, std::size_t>> holders;
        for (std::size_t i = 0; i < plan.leaves.size(); ++i) {
            const auto& sub = plan.leaves[i].subtree;
            if (root_split) {
                if (sub.root() == v) holders.emplace_back(i, 0);
            } else if (auto s = sub.slot_of(v)) {
                holders.emplace_back(i, *s);
            }
        }
        for (std::size_t a = 0; a < holders.size(); ++a)
            for (std::size_t b = a + 1; b < holders.size(); ++b)
                plan.predicates.push_back({PredicateKind::SameNode, holders[a].first,
                                           holders[b].first, holders[a].second,
                                           holders[b].second});
    }

    if (root_split) {
        // Root-relation chain: only root bindings are visible, so every
        // distinct leaf root is tied to the leaf rooted at its query parent,
        // even when that edge also lies inside some leaf.
        std::vector<char> is_root_node(fq.size(), 0);
        for (const auto& leaf : plan.leaves) is_root_node[leaf.subtree.root()] = 1;
        for (std::size_t n = 1; n < fq.size(); ++n) {
            if (!is_root_node[n]) continue;
            std::size_t p = static_cast<std::size_t>(fq.parent[n]);
            PredicateKind kind = fq.axis[n] == Axis::Child ? PredicateKind::ParentChild
                                                           : PredicateKind::AncestorDescendant;
            auto [li, ls] = leaf_for(p, true);
            auto [ri, rs] = leaf_for(n, true);
            plan.predicates.push_back({kind, li, ri, ls, rs});
        }
        // Lossiness check: a query node bound only inside leaves (never at a
        // root) is invisible to the joins, so a same-label node that can sit
        // at the same depth could be mapped to the same tree node. -1 marks a
        // node whose depth is not fixed (some `//` on its root path).
        // Ancestor-related pairs never collide (every query edge binds
        // strictly downward), and a single-leaf plan binds a literal subtree
        // instance, which is one-to-one by construction.
        std::vector<std::int64_t> depth(fq.size(), 0);
        for (std::size_t n = 1; n < fq.size(); ++n) {
            std::int64_t pd = depth[static_cast<std::size_t>(fq.parent[n])];
            depth[n] = (fq.axis[n] == Axis::Descendant || pd < 0) ? -1 : pd + 1;
        }
        auto is_ancestor_of = [&](std::size_t a, std::size_t d) {
            while (fq.parent[d] >= 0) {
                d = static_cast<std::size_t>(fq.parent[d]);
                if (d == a) return true;
            }
            return false;
        };
        // Two nodes can share a binding only if their labels match and, when
        // both hang by `/` edges, their parents share one as well; walking up,
        // the chain dies at a label mismatch or at two visible roots (the
        // final one-to-one filter keeps distinct visible bindings apart).
        auto can_collide = [&](auto&& self, std::size_t a, std::size_t b) -> bool {
            if (fq.labels[a] != fq.labels[b]) return false;
            if (a == b) return true;
            if (is_root_node[a] && is_root_node[b]) return false;
            if (fq.axis[a] == Axis::Descendant || fq.axis[b] == Axis::Descendant) return true;
            std::int32_t pa = fq.parent[a], pb = fq.parent[b];
            if (pa < 0 || pb < 0) return true;
            if (pa == pb) return true;
            return self(self, static_cast<std::size_t>(pa), static_cast<std::size_t>(pb));
        };
        if (plan.leaves.size() > 1)
            for (std::size_t a = 0; a < fq.size() && !plan.verify; ++a)
                for (std::size_t b = a + 1; b < fq.size() && !plan.verify; ++b) {
                    if (fq.labels[a] != fq.labels[b]) continue;
                    if (is_root_node[a] && is_root_node[b]) continue;
                    if (depth[a] >= 0 && depth[b] >= 0 && depth[a] != depth[b]) continue;
                    if (is_ancestor_of(a, b)) continue;
                    if (!can_collide(can_collide, a, b)) continue;
                    plan.verify = true;
                }
    } else {
        for (std::size_t n = 1; n < fq.size(); ++n) {
            std::size_t p = static_cast<std::size_t>(fq.parent[n]);
            if (fq.axis[n] == Axis::Child) {
                bool interior = false;
                for (const auto& leaf : plan.leaves)
                    if (leaf.subtree.contains(p) && leaf.subtree.contains(n)) interior = true;
                if (interior) continue;
                auto [li, ls] = leaf_for(p, false);
                auto [ri, rs] = leaf_for(n, false);
                plan.predicates.push_back({PredicateKind::ParentChild, li, ri, ls, rs});
            } else {
                auto [li, ls] = leaf_for(p, false);
                auto [ri, rs] = leaf_for(n, false);
                plan.predicates.push_back({PredicateKind::AncestorDescendant, li, ri, ls, rs});
            }
        }
    }

    auto [rl, rs] = leaf_for(0, root_split);
    plan.root_leaf = rl;
    plan.root_slot = rs;
    return plan;
}

}  // namespace treedex

#endif
