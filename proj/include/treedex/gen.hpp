#ifndef TREEDEX_GEN_HPP
#define TREEDEX_GEN_HPP

#include <algorithm>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "treedex/errors.hpp"
#include "treedex/query.hpp"
#include "treedex/tree.hpp"

namespace treedex {

/// Synthetic corpus shape: mostly 1-2 children with a rare wide tail, the
/// profile of parsed-sentence treebanks. Identical seed, identical corpus.
struct GeneratorConfig {
    std::uint64_t seed = 1;
    std::size_t tree_count = 100;
    std::size_t max_depth = 8;
    std::size_t min_nodes = 10, max_nodes = 60;
    double word_leaf_prob = 0.35;
    std::vector<std::pair<std::size_t, double>> branching = {
        {1, 0.62}, {2, 0.28}, {3, 0.06}, {4, 0.03}, {10, 0.01}};
    std::vector<std::string> tags = {"S",  "NP",  "VP",  "PP",  "DT", "NN",  "NNS", "VBZ",
                                     "JJ", "RB",  "IN",  "CC",  "CD", "PRP", "VBD", "TO",
                                     "MD", "WDT", "POS", "EX"};
    std::vector<std::string> words = {
        "agouti", "is",    "a",     "the",   "rodent", "runs",  "fast",  "river",
        "bank",   "sees",  "old",   "tree",  "green",  "dog",   "cat",   "sat",
        "mat",    "big",   "small", "eats",  "fish",   "bird",  "flies", "high",
        "low",    "man",   "woman", "walks", "talks",  "sun",   "moon",  "star",
        "red",    "blue",  "jumps", "over",  "under",  "near",  "far",   "stone"};
};

namespace detail {

// Hand-rolled sampling: std::uniform_* distributions are not portable across
// standard library implementations, and corpora must be seed-reproducible.
inline double unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::size_t below(std::mt19937_64& rng, std::size_t n) {
    return static_cast<std::size_t>(rng() % n);
}

// Skewed pick: squaring the uniform biases toward the front of the list,
// giving distinct high/medium/low label frequencies.
inline std::size_t skewed(std::mt19937_64& rng, std::size_t n) {
    double u = unit(rng);
    return std::min(n - 1, static_cast<std::size_t>(u * u * static_cast<double>(n)));
}

inline std::size_t sample_pmf(std::mt19937_64& rng,
                              const std::vector<std::pair<std::size_t, double>>& pmf) {
    double u = unit(rng);
    double acc = 0;
    for (const auto& [k, p] : pmf) {
        acc += p;
        if (u < acc) return k;
    }
    return pmf.back().first;
}

inline void grow_tree(const GeneratorConfig& cfg, std::mt19937_64& rng, std::string& out,
                      std::size_t depth, std::size_t& budget) {
    std::size_t tag = skewed(rng, cfg.tags.size());
    out += '(';
    out += cfg.tags[tag];
    if (depth < cfg.max_depth && budget > 0) {
        std::size_t k = sample_pmf(rng, cfg.branching);
        for (std::size_t i = 0; i < k && budget > 0; ++i) {
            --budget;
            out += ' ';
            if (unit(rng) < cfg.word_leaf_prob || depth + 1 >= cfg.max_depth) {
                out += cfg.words[skewed(rng, cfg.words.size())];
            } else {
                grow_tree(cfg, rng, out, depth + 1, budget);
            }
        }
    }
    out += ')';
}

}  // namespace detail

inline Corpus gen_corpus(const GeneratorConfig& cfg) {
    if (cfg.branching.empty() || cfg.tags.empty() || cfg.words.empty() ||
        cfg.min_nodes > cfg.max_nodes)
        throw error("infeasible generator configuration");
    std::mt19937_64 rng(cfg.seed);
    std::string text;
    for (std::size_t t = 0; t < cfg.tree_count; ++t) {
        // budget counts nodes beyond the root; growth can stall at the depth
        // cap, so redraw until the tree reaches min_nodes
        std::string tree;
        for (std::size_t attempt = 0;; ++attempt) {
            if (attempt == 10000) throw error("generator cannot reach min_nodes; relax the config");
            tree.clear();
            std::size_t budget =
                cfg.min_nodes - 1 + detail::below(rng, cfg.max_nodes - cfg.min_nodes + 1);
            std::size_t start = budget;
            detail::grow_tree(cfg, rng, tree, 0, budget);
            if (1 + (start - budget) >= cfg.min_nodes) break;
        }
        text += tree;
        text += '\n';
    }
    return parse_corpus_text(text);
}

enum class FreqClass : std::uint8_t { H, M, L, HM, HL, ML, HML };

inline const char* freq_class_name(FreqClass c) {
    switch (c) {
        case FreqClass::H: return "H";
        case FreqClass::M: return "M";
        case FreqClass::L: return "L";
        case FreqClass::HM: return "HM";
        case FreqClass::HL: return "HL";
        case FreqClass::ML: return "ML";
        case FreqClass::HML: return "HML";
    }
    return "?";
}

struct QuerySpec {
    std::uint64_t seed = 1;
    std::size_t count = 10;
    FreqClass cls = FreqClass::HML;
    std::size_t min_size = 1, max_size = 10;
    double descendant_prob = 0.0;
};

namespace detail {

// Labels ranked by document frequency and cut into terciles: H is the most
// frequent third, L the least.
inline std::vector<std::vector<std::string>> frequency_terciles(const Corpus& corpus) {
    std::map<std::string, std::size_t> doc_freq;
    for (const auto& t : corpus.trees) {
        std::vector<std::string> seen;
        for (const auto& n : t.nodes) seen.push_back(n.label);
        std::sort(seen.begin(), seen.end());
        seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
        for (const auto& s : seen) ++doc_freq[s];
    }
    std::vector<std::pair<std::string, std::size_t>> ranked(doc_freq.begin(), doc_freq.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    std::vector<std::vector<std::string>> out(3);
    std::size_t n = ranked.size();
    for (std::size_t i = 0; i < n; ++i) out[i * 3 / std::max<std::size_t>(n, 1)].push_back(ranked[i].first);
    return out;
}

inline std::vector<std::string> class_labels(const std::vector<std::vector<std::string>>& terc,
                                             FreqClass cls) {
    std::vector<std::string> out;
    auto add = [&](std::size_t i) { out.insert(out.end(), terc[i].begin(), terc[i].end()); };
    switch (cls) {
        case FreqClass::H: add(0); break;
        case FreqClass::M: add(1); break;
        case FreqClass::L: add(2); break;
        case FreqClass::HM: add(0); add(1); break;
        case FreqClass::HL: add(0); add(2); break;
        case FreqClass::ML: add(1); add(2); break;
        case FreqClass::HML: add(0); add(1); add(2); break;
    }
    return out;
}

inline QueryNode build_pattern(const ParseTree& tree,
                               const std::vector<std::vector<std::size_t>>& kids,
                               const std::vector<char>& picked, std::size_t n) {
    QueryNode q;
    q.label = tree.nodes[n].label;
    for (std::size_t c : kids[n])
        if (picked[c]) q.children.emplace_back(Axis::Child, build_pattern(tree, kids, picked, c));
    return q;
}

inline void mutate_axes(std::mt19937_64& rng, double prob, QueryNode& q) {
    for (auto& [ax, c] : q.children) {
        if (unit(rng) < prob) ax = Axis::Descendant;
        mutate_axes(rng, prob, c);
    }
}

}  // namespace detail

/// Draws queries as connected subtrees of corpus trees whose labels fall in
/// the requested frequency class, optionally relaxing some edges to `//`.
inline std::vector<QueryNode> gen_queries(const Corpus& corpus, const QuerySpec& spec) {
    if (corpus.trees.empty()) throw error("cannot generate queries over an empty corpus");
    auto terciles = detail::frequency_terciles(corpus);
    std::vector<std::string> allowed = detail::class_labels(terciles, spec.cls);
    if (allowed.empty()) throw error(std::string("frequency class unsatisfiable: ") +
                                     freq_class_name(spec.cls));
    std::sort(allowed.begin(), allowed.end());
    auto in_class = [&](const std::string& s) {
        return std::binary_search(allowed.begin(), allowed.end(), s);
    };

    std::mt19937_64 rng(spec.seed);
    std::vector<QueryNode> out;
    while (out.size() < spec.count) {
        std::size_t target =
            spec.min_size + detail::below(rng, spec.max_size - spec.min_size + 1);
        QueryNode q;
        bool ok = false;
        for (std::size_t attempt = 0; attempt < 64 && !ok; ++attempt) {
            if (attempt > 0 && attempt % 16 == 0) target = std::max<std::size_t>(1, target / 2);
            const ParseTree& tree = corpus.trees[detail::below(rng, corpus.trees.size())];
            std::vector<std::size_t> starts;
            for (std::size_t i = 0; i < tree.size(); ++i)
                if (in_class(tree.nodes[i].label)) starts.push_back(i);
            if (starts.empty()) continue;
            std::size_t root = starts[detail::below(rng, starts.size())];

            std::vector<std::vector<std::size_t>> kids(tree.size());
            std::map<std::int32_t, std::size_t> by_id;
            for (std::size_t i = 0; i < tree.size(); ++i) by_id[tree.nodes[i].node_id] = i;
            for (std::size_t i = 0; i < tree.size(); ++i)
                if (tree.nodes[i].parent_id != kNoParent)
                    kids[by_id[tree.nodes[i].parent_id]].push_back(i);

            std::vector<char> picked(tree.size(), 0);
            picked[root] = 1;
            std::size_t have = 1;
            std::vector<std::size_t> frontier;
            auto extend_frontier = [&](std::size_t n) {
                for (std::size_t c : kids[n])
                    if (!picked[c] && in_class(tree.nodes[c].label)) frontier.push_back(c);
            };
            extend_frontier(root);
            while (have < target && !frontier.empty()) {
                std::size_t pick = detail::below(rng, frontier.size());
                std::size_t n = frontier[pick];
                frontier.erase(frontier.begin() + static_cast<std::ptrdiff_t>(pick));
                if (picked[n]) continue;
                picked[n] = 1;
                ++have;
                extend_frontier(n);
            }
            if (have != target) continue;
            q = detail::build_pattern(tree, kids, picked, root);
            detail::mutate_axes(rng, spec.descendant_prob, q);
            ok = true;
        }
        if (!ok)
            throw error(std::string("frequency class unsatisfiable at requested sizes: ") +
                        freq_class_name(spec.cls));
        out.push_back(std::move(q));
    }
    return out;
}

}  // namespace treedex

#endif
