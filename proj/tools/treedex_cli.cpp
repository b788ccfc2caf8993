// treedex command-line front end: ingest bracketed corpora, build per-scheme
// indexes, run queries (optionally cross-checked against the oracle matcher),
// report stats, and benchmark query latencies.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <memory>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "treedex/treedex.hpp"

namespace {

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw treedex::io_error("cannot open: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::vector<std::string> read_lines(const std::string& path) {
    std::istringstream in(slurp(path));
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) out.push_back(line);
    return out;
}

double ms_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
}

struct QueryOptions {
    std::string index_path, data_path, query, query_file;
    bool explain = false, count = false, time = false, oracle = false;
};

void explain_plan(const treedex::JoinPlan& plan) {
    std::cout << "cover (" << plan.leaves.size() << " subtrees):\n";
    for (std::size_t i = 0; i < plan.leaves.size(); ++i)
        std::cout << "  leaf " << i << ": " << treedex::render_shape(plan.leaves[i].subtree.shape)
                  << "  postings=" << plan.leaves[i].estimate << "\n";
    std::cout << "predicates (" << plan.predicates.size() << "):\n";
    for (const auto& p : plan.predicates) {
        const char* kind = p.kind == treedex::PredicateKind::SameNode        ? "same-node"
                           : p.kind == treedex::PredicateKind::ParentChild   ? "parent-child"
                                                                             : "ancestor-descendant";
        std::cout << "  " << kind << " leaf" << p.left_leaf << "[" << p.left_slot << "] ~ leaf"
                  << p.right_leaf << "[" << p.right_slot << "]\n";
    }
    std::cout << "joins: " << treedex::count_joins(plan) << "\n";
}

int run_queries(const QueryOptions& opt) {
    treedex::IndexReader index(opt.index_path);
    std::unique_ptr<treedex::DataFileReader> data;
    if (!opt.data_path.empty())
        data = std::make_unique<treedex::DataFileReader>(opt.data_path);
    if ((index.scheme() == treedex::CodingScheme::FilterBased || opt.oracle) && !data)
        throw treedex::error("this operation requires --data");

    std::vector<std::string> queries;
    if (!opt.query.empty()) queries.push_back(opt.query);
    if (!opt.query_file.empty())
        for (auto& q : read_lines(opt.query_file)) queries.push_back(q);
    if (queries.empty()) throw treedex::error("no query given (use --query or --queries)");

    bool all_equal = true;
    for (const auto& qtext : queries) {
        treedex::QueryNode q = treedex::parse_query(qtext);
        auto t0 = std::chrono::steady_clock::now();
        treedex::JoinPlan plan =
            treedex::plan_query(q, index.mss(), index.scheme(), &index);
        double decompose_ms = ms_since(t0);
        if (opt.explain) explain_plan(plan);

        treedex::PhaseTimings phases;
        treedex::MatchSet rows = treedex::execute_plan(plan, index, data.get(), &phases);
        if (opt.count) {
            std::cout << rows.size() << "\n";
        } else {
            std::cout << treedex::render_match_lines(rows);
        }
        if (opt.time) {
            std::cout << std::fixed << std::setprecision(3) << "time decompose=" << decompose_ms
                      << "ms fetch=" << phases.fetch_s * 1e3 << "ms join=" << phases.join_s * 1e3
                      << "ms filter=" << phases.filter_s * 1e3 << "ms\n";
        }
        if (opt.oracle) {
            treedex::MatchSet expect;
            for (std::uint64_t tid : data->tids()) {
                treedex::ParseTree tree = data->read_tree(tid);
                treedex::MatchSet r = treedex::oracle_match(q, tree);
                expect.insert(expect.end(), r.begin(), r.end());
            }
            std::sort(expect.begin(), expect.end());
            if (expect == rows) {
                std::cout << "MATCH-SET EQUAL (" << rows.size() << " rows)\n";
            } else {
                all_equal = false;
                std::cout << "MATCH-SET DIFF: index=" << rows.size()
                          << " oracle=" << expect.size() << " for query " << qtext << "\n";
            }
        }
    }
    return all_equal ? 0 : 1;
}

int run_bench(const std::string& index_path, const std::string& data_path,
              const std::string& query_file, std::size_t repeat) {
    treedex::IndexReader index(index_path);
    std::unique_ptr<treedex::DataFileReader> data;
    if (!data_path.empty()) data = std::make_unique<treedex::DataFileReader>(data_path);
    if (index.scheme() == treedex::CodingScheme::FilterBased && !data)
        throw treedex::error("filter-based bench requires --data");

    struct Bin {
        const char* name;
        std::uint64_t lo, hi;
        std::vector<double> ms;
    };
    std::vector<Bin> bins = {{"<10", 0, 9},
                             {"10-100", 10, 100},
                             {"100-1k", 101, 1000},
                             {"1k-10k", 1001, 10000},
                             {">10k", 10001, UINT64_MAX}};

    for (const auto& qtext : read_lines(query_file)) {
        treedex::QueryNode q = treedex::parse_query(qtext);
        treedex::JoinPlan plan = treedex::plan_query(q, index.mss(), index.scheme(), &index);
        std::size_t matches = 0;
        double total = 0;
        for (std::size_t r = 0; r < repeat; ++r) {
            auto t0 = std::chrono::steady_clock::now();
            treedex::MatchSet rows = treedex::execute_plan(plan, index, data.get());
            total += ms_since(t0);
            matches = rows.size();
        }
        double mean = total / static_cast<double>(repeat);
        for (auto& b : bins)
            if (matches >= b.lo && matches <= b.hi) b.ms.push_back(mean);
        std::cout << "rec bench query=" << qtext << " matches=" << matches << " mean_ms="
                  << std::fixed << std::setprecision(3) << mean << "\n";
    }
    std::cout << "bin        queries  mean_ms   p95_ms\n";
    for (auto& b : bins) {
        if (b.ms.empty()) continue;
        std::sort(b.ms.begin(), b.ms.end());
        double mean = 0;
        for (double v : b.ms) mean += v;
        mean /= static_cast<double>(b.ms.size());
        double p95 = b.ms[(b.ms.size() - 1) * 95 / 100];
        std::cout << std::left << std::setw(10) << b.name << " " << std::setw(8) << b.ms.size()
                  << " " << std::fixed << std::setprecision(3) << std::setw(9) << mean << " "
                  << p95 << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"treedex: subtree-indexed search over bracketed parse trees"};
    app.require_subcommand(1);

    std::string corpus_path, data_path, index_path, out_path, scheme_name = "interval";
    std::size_t mss = 3;

    auto* ingest = app.add_subcommand("ingest", "bracketed text corpus -> data file");
    ingest->add_option("--corpus", corpus_path, "one bracketed tree per line")->required();
    ingest->add_option("--out", out_path, "output data file")->required();

    auto* build = app.add_subcommand("build", "data file -> index");
    build->add_option("--data", data_path)->required();
    build->add_option("--out", out_path, "output index file")->required();
    build->add_option("--mss", mss, "maximum indexed subtree size (1..6)");
    build->add_option("--scheme", scheme_name, "filter | interval | root-split");

    QueryOptions qopt;
    auto* query = app.add_subcommand("query", "run queries against an index");
    query->add_option("--index", qopt.index_path)->required();
    query->add_option("--data", qopt.data_path, "data file (filter scheme / --oracle)");
    query->add_option("--query", qopt.query, "query string, e.g. S(NP)(//VP)");
    query->add_option("--queries", qopt.query_file, "file of queries, one per line");
    query->add_flag("--explain", qopt.explain, "print cover and predicates");
    query->add_flag("--count", qopt.count, "print only the match count");
    query->add_flag("--time", qopt.time, "print phase timings");
    query->add_flag("--oracle", qopt.oracle, "cross-check against the exact matcher");

    auto* stats = app.add_subcommand("stats", "index / corpus summaries");
    stats->add_option("--index", index_path);
    stats->add_option("--data", data_path);

    std::string bench_queries;
    std::size_t bench_repeat = 5;
    auto* bench = app.add_subcommand("bench", "latency benchmark over a query file");
    bench->add_option("--index", index_path)->required();
    bench->add_option("--data", data_path);
    bench->add_option("--queries", bench_queries)->required();
    bench->add_option("--repeat", bench_repeat);

    std::uint64_t gen_seed = 1;
    std::size_t gen_trees = 100, gen_count = 20;
    std::string gen_class = "HML", gen_queries_out;
    double gen_desc_prob = 0.0;
    auto* gen = app.add_subcommand("gen", "emit a synthetic corpus and query files");
    gen->add_option("--out", out_path, "bracketed corpus output path")->required();
    gen->add_option("--seed", gen_seed);
    gen->add_option("--trees", gen_trees);
    gen->add_option("--queries-out", gen_queries_out, "also emit generated queries");
    gen->add_option("--count", gen_count, "number of queries");
    gen->add_option("--class", gen_class, "H M L HM HL ML HML");
    gen->add_option("--descendant-prob", gen_desc_prob, "probability an edge becomes //");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest) {
            treedex::Corpus corpus = treedex::parse_corpus_text(slurp(corpus_path));
            auto sum = treedex::write_data_file(corpus, out_path);
            std::cout << "rec ingest trees=" << sum.trees << " nodes=" << sum.nodes
                      << " bytes=" << sum.bytes << "\n";
        } else if (*build) {
            treedex::CodingScheme scheme = treedex::scheme_from_name(scheme_name);
            auto sum = treedex::build_index(data_path, mss, scheme, out_path);
            std::cout << "rec build keys=" << sum.keys << " postings=" << sum.postings
                      << " bytes=" << sum.bytes << " seconds=" << std::fixed
                      << std::setprecision(3) << sum.wall_seconds << "\n";
        } else if (*query) {
            return run_queries(qopt);
        } else if (*stats) {
            if (!data_path.empty()) {
                treedex::DataFileReader data(data_path);
                treedex::Corpus corpus;
                for (std::uint64_t tid : data.tids()) corpus.trees.push_back(data.read_tree(tid));
                auto s = treedex::corpus_stats(corpus);
                std::cout << "corpus: trees=" << s.tree_count << " nodes=" << s.node_count
                          << " internal=" << s.internal_count << " avg_branching=" << std::fixed
                          << std::setprecision(3) << s.avg_branching
                          << " max_branching=" << s.max_branching
                          << " labels=" << s.alphabet_size << "\n";
                std::cout << "rec corpus trees=" << s.tree_count << " nodes=" << s.node_count
                          << " avg_branching=" << s.avg_branching << "\n";
            }
            if (!index_path.empty()) {
                treedex::IndexReader index(index_path);
                auto s = index.stats();
                std::cout << "index: scheme=" << treedex::scheme_name(index.scheme())
                          << " mss=" << index.mss() << " keys=" << s.keys
                          << " postings=" << s.postings << " bytes=" << s.bytes << "\n";
                std::cout << "size  keys      postings\n";
                for (const auto& [size, kp] : s.per_size) {
                    std::cout << std::left << std::setw(5) << size << " " << std::setw(9)
                              << kp.first << " " << kp.second << "\n";
                    std::cout << "rec index size=" << size << " keys=" << kp.first
                              << " postings=" << kp.second << "\n";
                }
            }
        } else if (*bench) {
            return run_bench(index_path, data_path, bench_queries, bench_repeat);
        } else if (*gen) {
            treedex::GeneratorConfig cfg;
            cfg.seed = gen_seed;
            cfg.tree_count = gen_trees;
            treedex::Corpus corpus = treedex::gen_corpus(cfg);
            std::ofstream out(out_path, std::ios::trunc);
            if (!out) throw treedex::io_error("cannot open for write: " + out_path);
            for (const auto& t : corpus.trees) out << treedex::render_bracketed(t) << "\n";
            std::cout << "rec gen trees=" << corpus.trees.size() << "\n";
            if (!gen_queries_out.empty()) {
                treedex::QuerySpec spec;
                spec.seed = gen_seed + 1;
                spec.count = gen_count;
                spec.descendant_prob = gen_desc_prob;
                const std::vector<std::pair<std::string, treedex::FreqClass>> classes = {
                    {"H", treedex::FreqClass::H},   {"M", treedex::FreqClass::M},
                    {"L", treedex::FreqClass::L},   {"HM", treedex::FreqClass::HM},
                    {"HL", treedex::FreqClass::HL}, {"ML", treedex::FreqClass::ML},
                    {"HML", treedex::FreqClass::HML}};
                bool found = false;
                for (const auto& [name, cls] : classes)
                    if (name == gen_class) {
                        spec.cls = cls;
                        found = true;
                    }
                if (!found) throw treedex::error("unknown frequency class: " + gen_class);
                std::ofstream qf(gen_queries_out, std::ios::trunc);
                if (!qf) throw treedex::io_error("cannot open for write: " + gen_queries_out);
                for (const auto& q : treedex::gen_queries(corpus, spec))
                    qf << treedex::render_query(q) << "\n";
                std::cout << "rec gen queries=" << gen_count << "\n";
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
