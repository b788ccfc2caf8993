#ifndef TREEDEX_EXEC_HPP
#define TREEDEX_EXEC_HPP

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "treedex/data_file.hpp"
#include "treedex/decompose.hpp"
#include "treedex/errors.hpp"
#include "treedex/index.hpp"
#include "treedex/query.hpp"
#include "treedex/tree.hpp"

namespace treedex {

/// Sorted, duplicate-free query result: one row per distinct root binding.
using MatchSet = std::vector<ResultRow>;

/// Partial join result: one (l, r, v) triple per query node bound so far.
/// l == 0 marks an unbound slot (pre ranks start at 1).
struct NodeBindingTuple {
    std::uint64_t tid = 0;
    std::vector<NodeTuple> slots;
    friend auto operator<=>(const NodeBindingTuple&, const NodeBindingTuple&) = default;
};

namespace detail {

struct TreeView {
    const ParseTree& tree;
    std::vector<std::vector<std::size_t>> kids;

    explicit TreeView(const ParseTree& t) : tree(t), kids(t.size()) {
        std::unordered_map<std::int32_t, std::size_t> by_id;
        for (std::size_t i = 0; i < t.size(); ++i) by_id[t.nodes[i].node_id] = i;
        for (std::size_t i = 0; i < t.size(); ++i)
            if (t.nodes[i].parent_id != kNoParent)
                kids[by_id.at(t.nodes[i].parent_id)].push_back(i);
    }

    // Nodes are in pre order, so a subtree is the contiguous run whose post
    // ranks stay below the root's.
    std::vector<std::size_t> descendants(std::size_t p) const {
        std::vector<std::size_t> out;
        for (std::size_t i = p + 1; i < tree.size() && tree.nodes[i].post < tree.nodes[p].post;
             ++i)
            out.push_back(i);
        return out;
    }
};

inline bool oracle_extend(const FlatQuery& fq, const TreeView& tv, std::size_t qn,
                          std::vector<std::size_t>& assign, std::vector<char>& used) {
    if (qn == fq.size()) return true;
    std::size_t p_tree = assign[static_cast<std::size_t>(fq.parent[qn])];
    std::vector<std::size_t> cands = fq.axis[qn] == Axis::Child
                                         ? tv.kids[p_tree]
                                         : tv.descendants(p_tree);
    for (std::size_t c : cands) {
        if (used[c] || tv.tree.nodes[c].label != fq.labels[qn]) continue;
        used[c] = 1;
        assign[qn] = c;
        bool ok = oracle_extend(fq, tv, qn + 1, assign, used);
        used[c] = 0;  // unwind even on success: later roots may reuse nodes
        if (ok) return true;
    }
    return false;
}

}  // namespace detail

/// Exhaustive backtracking matcher: the ground truth every index path must
/// reproduce. Embeddings are injective and label- and axis-preserving; the
/// result keeps one row per distinct root binding.
inline MatchSet oracle_match(const FlatQuery& fq, const ParseTree& tree) {
    detail::TreeView tv(tree);
    MatchSet out;
    std::vector<std::size_t> assign(fq.size());
    std::vector<char> used(tree.size(), 0);
    for (std::size_t r = 0; r < tree.size(); ++r) {
        if (tree.nodes[r].label != fq.labels[0]) continue;
        used[r] = 1;
        assign[0] = r;
        if (detail::oracle_extend(fq, tv, 1, assign, used)) {
            const TreeNode& n = tree.nodes[r];
            out.push_back({tree.tid, n.pre, n.post, n.level});
        }
        used[r] = 0;
    }
    return out;
}

inline MatchSet oracle_match(const QueryNode& q, const ParseTree& tree) {
    return oracle_match(flatten_query(q), tree);
}

inline MatchSet oracle_match_corpus(const QueryNode& q, const Corpus& corpus) {
    FlatQuery fq = flatten_query(q);
    MatchSet out;
    for (const auto& t : corpus.trees) {
        MatchSet rows = oracle_match(fq, t);
        out.insert(out.end(), rows.begin(), rows.end());
    }
    std::sort(out.begin(), out.end());
    return out;
}

namespace detail {

inline bool eval_pair(PredicateKind kind, const NodeTuple& a, const NodeTuple& b) {
    switch (kind) {
        case PredicateKind::SameNode:
            return a.l == b.l && a.r == b.r && a.v == b.v;
        case PredicateKind::ParentChild:
            return a.l < b.l && b.r < a.r && b.v == a.v + 1;
        case PredicateKind::AncestorDescendant:
            return a.l < b.l && b.r < a.r;
    }
    return false;
}

// Merge a right posting's slots into a copy of the left tuple; fails when a
// query node would be bound to two different tree nodes.
inline bool merge_binding(NodeBindingTuple& t, const Posting& p, const CoverSubtree& sub) {
    for (std::size_t s = 0; s < p.nodes.size(); ++s) {
        std::size_t qn = sub.anchor[s];
        NodeTuple& slot = t.slots[qn];
        NodeTuple incoming{p.nodes[s].l, p.nodes[s].r, p.nodes[s].v, 0};
        if (slot.l != 0) {
            if (slot.l != incoming.l || slot.r != incoming.r || slot.v != incoming.v)
                return false;
        } else {
            slot = incoming;
        }
    }
    return true;
}

}  // namespace detail

/// One MPMGJN-style stage: joins the accumulated tuples with one leaf's
/// postings under a structural predicate, merging the leaf's slot bindings
/// into the survivors. `left_qnode` is the join node on the accumulated side;
/// `right_slot` the joining slot of the posting. `swapped` means the posting
/// side is the ancestor/parent. Both inputs must be tid-sorted; within a tid
/// group the streams are re-sorted to the join key, then joined in one
/// coordinated pass with bounded backtracking on the inner stream.
inline std::vector<NodeBindingTuple> structural_merge_join(
    const std::vector<NodeBindingTuple>& left, const PostingList& right,
    const CoverSubtree& right_sub, PredicateKind kind, std::size_t left_qnode,
    std::size_t right_slot, bool swapped) {
    for (std::size_t i = 1; i < left.size(); ++i)
        if (left[i - 1].tid > left[i].tid) throw error("internal: unsorted left join input");
    for (std::size_t i = 1; i < right.entries.size(); ++i)
        if (right.entries[i - 1].tid > right.entries[i].tid)
            throw error("internal: unsorted right join input");

    std::vector<NodeBindingTuple> out;
    std::size_t li = 0, ri = 0;
    while (li < left.size() && ri < right.entries.size()) {
        std::uint64_t tid = left[li].tid;
        if (right.entries[ri].tid < tid) {
            ++ri;
            continue;
        }
        if (right.entries[ri].tid > tid) {
            ++li;
            continue;
        }
        std::size_t le = li, re = ri;
        while (le < left.size() && left[le].tid == tid) ++le;
        while (re < right.entries.size() && right.entries[re].tid == tid) ++re;

        std::vector<std::size_t> lidx(le - li), ridx(re - ri);
        for (std::size_t i = 0; i < lidx.size(); ++i) lidx[i] = li + i;
        for (std::size_t i = 0; i < ridx.size(); ++i) ridx[i] = ri + i;
        std::sort(lidx.begin(), lidx.end(), [&](std::size_t a, std::size_t b) {
            return left[a].slots[left_qnode].l < left[b].slots[left_qnode].l;
        });
        std::sort(ridx.begin(), ridx.end(), [&](std::size_t a, std::size_t b) {
            return right.entries[a].nodes[right_slot].l < right.entries[b].nodes[right_slot].l;
        });

        // One coordinated pass: the accumulated side is the outer stream; the
        // inner pointer only backtracks to the first posting whose pre-order
        // block can still meet a later outer node. Subtrees are contiguous in
        // pre rank, so once an outer node passes a posting's block (or vice
        // versa) that stream element is exhausted.
        std::size_t start = 0;
        for (std::size_t ai : lidx) {
            const NodeTuple& a = left[ai].slots[left_qnode];
            for (std::size_t k = start; k < ridx.size(); ++k) {
                const Posting& p = right.entries[ridx[k]];
                const auto& bn = p.nodes[right_slot];
                NodeTuple b{bn.l, bn.r, bn.v, 0};
                if (kind == PredicateKind::SameNode) {
                    if (b.l > a.l) break;
                    if (b.l < a.l) {
                        if (k == start) ++start;
                        continue;
                    }
                    if (b.r != a.r || b.v != a.v) continue;
                } else if (!swapped) {  // a is the ancestor side
                    if (b.l <= a.l) {
                        if (k == start) ++start;
                        continue;
                    }
                    if (b.r > a.r) break;  // past a's descendant block
                    if (kind == PredicateKind::ParentChild && b.v != a.v + 1) continue;
                } else {  // posting side is the ancestor
                    if (b.l >= a.l) break;
                    if (b.r < a.r) {
                        if (k == start) ++start;  // a is already past b's block
                        continue;
                    }
                    if (kind == PredicateKind::ParentChild && a.v != b.v + 1) continue;
                }
                NodeBindingTuple merged = left[ai];
                if (detail::merge_binding(merged, p, right_sub)) out.push_back(std::move(merged));
            }
        }
        li = le;
        ri = re;
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

struct PhaseTimings {
    double decompose_s = 0, fetch_s = 0, join_s = 0, filter_s = 0;
};

namespace detail {

inline std::vector<NodeBindingTuple> seed_tuples(const PostingList& list, const CoverSubtree& sub,
                                                 std::size_t query_size) {
    std::vector<NodeBindingTuple> out;
    out.reserve(list.entries.size());
    for (const Posting& p : list.entries) {
        NodeBindingTuple t;
        t.tid = p.tid;
        t.slots.assign(query_size, NodeTuple{});
        if (merge_binding(t, p, sub)) out.push_back(std::move(t));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

inline bool tuple_injective(const NodeBindingTuple& t) {
    for (std::size_t i = 0; i < t.slots.size(); ++i) {
        if (t.slots[i].l == 0) continue;
        for (std::size_t j = i + 1; j < t.slots.size(); ++j)
            if (t.slots[j].l != 0 && t.slots[j].l == t.slots[i].l) return false;
    }
    return true;
}

}  // namespace detail

/// Runs a plan against an index. FilterBased intersects tid lists and defers
/// to the oracle over fetched trees (dataFile required); the positional
/// codings run the left-deep merge-join pipeline with no post-validation.
inline MatchSet execute_plan(const JoinPlan& plan, const IndexReader& index,
                             DataFileReader* data = nullptr, PhaseTimings* times = nullptr) {
    if (index.scheme() != plan.scheme) throw error("index/plan coding scheme mismatch");
    if (index.mss() != plan.mss) throw error("index/plan mss mismatch");
    using clock = std::chrono::steady_clock;
    auto secs = [](clock::time_point a, clock::time_point b) {
        return std::chrono::duration<double>(b - a).count();
    };

    if (plan.scheme == CodingScheme::FilterBased) {
        if (!data) throw error("filter-based execution requires the data file");
        auto t0 = clock::now();
        std::vector<std::vector<std::uint64_t>> tid_lists;
        for (const auto& leaf : plan.leaves) {
            PostingList list = index.lookup_shape(leaf.subtree.shape);
            std::vector<std::uint64_t> tids;
            tids.reserve(list.entries.size());
            for (const auto& p : list.entries) tids.push_back(p.tid);
            tid_lists.push_back(std::move(tids));
        }
        std::sort(tid_lists.begin(), tid_lists.end(),
                  [](const auto& a, const auto& b) { return a.size() < b.size(); });
        std::vector<std::uint64_t> cand = tid_lists.empty() ? std::vector<std::uint64_t>{}
                                                            : tid_lists.front();
        for (std::size_t i = 1; i < tid_lists.size() && !cand.empty(); ++i) {
            std::vector<std::uint64_t> next;
            std::set_intersection(cand.begin(), cand.end(), tid_lists[i].begin(),
                                  tid_lists[i].end(), std::back_inserter(next));
            cand = std::move(next);
        }
        auto t1 = clock::now();
        MatchSet out;
        for (std::uint64_t tid : cand) {
            ParseTree tree = data->read_tree(tid);
            MatchSet rows = oracle_match(plan.query, tree);
            out.insert(out.end(), rows.begin(), rows.end());
        }
        std::sort(out.begin(), out.end());
        auto t2 = clock::now();
        if (times) {
            times->fetch_s += secs(t0, t1);
            times->filter_s += secs(t1, t2);
        }
        return out;
    }

    auto t0 = clock::now();
    std::vector<PostingList> lists;
    for (const auto& leaf : plan.leaves) lists.push_back(index.lookup_shape(leaf.subtree.shape));
    auto t1 = clock::now();

    std::vector<NodeBindingTuple> tuples =
        detail::seed_tuples(lists[0], plan.leaves[0].subtree, plan.query.size());
    for (std::size_t j = 1; j < plan.leaves.size() && !tuples.empty(); ++j) {
        std::vector<JoinPredicate> connecting;
        for (const auto& pr : plan.predicates) {
            std::size_t hi = std::max(pr.left_leaf, pr.right_leaf);
            std::size_t lo = std::min(pr.left_leaf, pr.right_leaf);
            if (hi == j && lo < j) connecting.push_back(pr);
        }
        if (connecting.empty()) {
            // No structural link to the prefix: per-tid cross product.
            std::vector<NodeBindingTuple> joined;
            std::size_t li = 0;
            for (const Posting& p : lists[j].entries) {
                while (li < tuples.size() && tuples[li].tid < p.tid) ++li;
                for (std::size_t k = li; k < tuples.size() && tuples[k].tid == p.tid; ++k) {
                    NodeBindingTuple merged = tuples[k];
                    if (detail::merge_binding(merged, p, plan.leaves[j].subtree))
                        joined.push_back(std::move(merged));
                }
            }
            std::sort(joined.begin(), joined.end());
            joined.erase(std::unique(joined.begin(), joined.end()), joined.end());
            tuples = std::move(joined);
            continue;
        }
        const JoinPredicate& pr = connecting.front();
        bool swapped = pr.left_leaf == j;  // new leaf is the parent/ancestor side
        std::size_t left_leaf = swapped ? pr.right_leaf : pr.left_leaf;
        std::size_t left_slot = swapped ? pr.right_slot : pr.left_slot;
        std::size_t right_slot = swapped ? pr.left_slot : pr.right_slot;
        std::size_t left_qnode = plan.leaves[left_leaf].subtree.anchor[left_slot];
        tuples = structural_merge_join(tuples, lists[j], plan.leaves[j].subtree, pr.kind,
                                       left_qnode, right_slot, swapped);
        for (std::size_t extra = 1; extra < connecting.size(); ++extra) {
            const JoinPredicate& fp = connecting[extra];
            std::size_t a_qn = plan.leaves[fp.left_leaf].subtree.anchor[fp.left_slot];
            std::size_t b_qn = plan.leaves[fp.right_leaf].subtree.anchor[fp.right_slot];
            std::erase_if(tuples, [&](const NodeBindingTuple& t) {
                return !detail::eval_pair(fp.kind, t.slots[a_qn], t.slots[b_qn]);
            });
        }
    }
    std::erase_if(tuples,
                  [](const NodeBindingTuple& t) { return !detail::tuple_injective(t); });

    MatchSet out;
    std::size_t root_qn = plan.leaves[plan.root_leaf].subtree.anchor[plan.root_slot];
    for (const auto& t : tuples) {
        const NodeTuple& r = t.slots[root_qn];
        out.push_back({t.tid, r.l, r.r, r.v});
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    auto t2 = clock::now();

    if (plan.verify && !out.empty()) {
        // Some query node is invisible at every leaf root and shares a label
        // with another node, so the joins alone cannot certify a one-to-one
        // embedding. Confirm each candidate root against the stored tree.
        if (!data) throw error("this root-split plan requires the data file");
        MatchSet confirmed;
        ParseTree tree;
        std::optional<detail::TreeView> tv;
        std::uint64_t last_tid = out.front().tid + 1;  // anything != first tid
        std::vector<std::size_t> assign(plan.query.size());
        std::vector<char> used;
        for (const auto& row : out) {
            if (row.tid != last_tid) {
                last_tid = row.tid;
                tree = data->read_tree(row.tid);
                tv.emplace(tree);
                used.assign(tree.size(), 0);
            }
            std::size_t r = row.pre - 1;  // nodes are stored in pre order
            used[r] = 1;
            assign[0] = r;
            if (detail::oracle_extend(plan.query, *tv, 1, assign, used)) confirmed.push_back(row);
            used[r] = 0;
        }
        out = std::move(confirmed);
    }
    auto t3 = clock::now();
    if (times) {
        times->fetch_s += secs(t0, t1);
        times->join_s += secs(t1, t2);
        times->filter_s += secs(t2, t3);
    }
    return out;
}

inline std::string render_match_lines(const MatchSet& rows) {
    std::string out;
    for (const auto& r : rows) {
        out += std::to_string(r.tid);
        out += '\t';
        out += std::to_string(r.pre);
        out += '\t';
        out += std::to_string(r.post);
        out += '\t';
        out += std::to_string(r.level);
        out += '\n';
    }
    return out;
}

}  // namespace treedex

#endif
