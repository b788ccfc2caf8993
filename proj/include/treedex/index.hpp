#ifndef TREEDEX_INDEX_HPP
#define TREEDEX_INDEX_HPP

#include <chrono>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "treedex/data_file.hpp"
#include "treedex/errors.hpp"
#include "treedex/subtree.hpp"
#include "treedex/tree.hpp"
#include "treedex/varint.hpp"

namespace treedex {

enum class CodingScheme : std::uint8_t {
    FilterBased = 0,
    SubtreeInterval = 1,
    RootSplit = 2,
};

inline const char* scheme_name(CodingScheme s) {
    switch (s) {
        case CodingScheme::FilterBased: return "filter";
        case CodingScheme::SubtreeInterval: return "interval";
        case CodingScheme::RootSplit: return "root-split";
    }
    return "?";
}

inline CodingScheme scheme_from_name(const std::string& s) {
    if (s == "filter" || s == "filter-based") return CodingScheme::FilterBased;
    if (s == "interval" || s == "subtree-interval") return CodingScheme::SubtreeInterval;
    if (s == "root-split" || s == "rootsplit") return CodingScheme::RootSplit;
    throw error("unknown coding scheme: " + s);
}

/// (l, r, v, o) = (pre, post, level, pre-order rank) of one instance node.
struct NodeTuple {
    std::uint32_t l = 0, r = 0, v = 0, o = 0;
    friend auto operator<=>(const NodeTuple&, const NodeTuple&) = default;
};

/// One posting. FilterBased carries only the tid; RootSplit carries one root
/// tuple (o unused); SubtreeInterval carries one tuple per instance node in
/// the key's canonical pre order.
struct Posting {
    std::uint64_t tid = 0;
    std::vector<NodeTuple> nodes;
    friend auto operator<=>(const Posting&, const Posting&) = default;
};

struct PostingList {
    SubtreeKey key;
    CodingScheme scheme = CodingScheme::FilterBased;
    std::vector<Posting> entries;
};

// Index file layout (little-endian):
//   magic          8 bytes "TDXIDX01"
//   version        u32
//   scheme         u8
//   mss            u8
//   pad            u16
//   key count      u64
//   label table:   u32 count, per label u32 length + bytes (sorted; rank = id)
//   directory:     per key, sorted by key bytes:
//                    u16 key length, key bytes,
//                    u64 posting offset, u64 posting byte length, u64 count
//   posting area:  varint blocks per key (see encode/decode below)

namespace detail {

constexpr char kIndexMagic[8] = {'T', 'D', 'X', 'I', 'D', 'X', '0', '1'};
constexpr std::uint32_t kIndexVersion = 1;

inline void encode_postings(std::vector<std::uint8_t>& out, CodingScheme scheme,
                            const std::vector<Posting>& entries) {
    std::uint64_t prev_tid = 0;
    std::uint32_t prev_l = 0;
    bool first = true;
    for (const auto& p : entries) {
        std::uint64_t dt = first ? p.tid : p.tid - prev_tid;
        put_varint(out, dt);
        if (scheme == CodingScheme::FilterBased) {
            first = false;
            prev_tid = p.tid;
            continue;
        }
        std::uint32_t l0 = p.nodes.front().l;
        if (!first && dt == 0) {
            put_varint(out, l0 - prev_l);
        } else {
            put_varint(out, l0);
        }
        if (scheme == CodingScheme::SubtreeInterval) {
            put_varint(out, p.nodes.size());
            put_varint(out, p.nodes.front().r);
            put_varint(out, p.nodes.front().v);
            put_varint(out, p.nodes.front().o);
            for (std::size_t i = 1; i < p.nodes.size(); ++i) {
                put_varint(out, p.nodes[i].l);
                put_varint(out, p.nodes[i].r);
                put_varint(out, p.nodes[i].v);
                put_varint(out, p.nodes[i].o);
            }
        } else {  // RootSplit
            put_varint(out, p.nodes.front().r);
            put_varint(out, p.nodes.front().v);
        }
        first = false;
        prev_tid = p.tid;
        prev_l = l0;
    }
}

}  // namespace detail

/// Sequentially decodes one key's posting block without materializing the
/// whole list. Single-consumer; independent cursors over one key may coexist.
class PostingCursor {
  public:
    PostingCursor() = default;
    PostingCursor(const std::uint8_t* data, std::size_t size, std::uint64_t count,
                  CodingScheme scheme)
        : data_(data), size_(size), remaining_(count), scheme_(scheme) {}

    std::uint64_t remaining() const { return remaining_; }

    bool next(Posting& out) {
        if (remaining_ == 0) return false;
        --remaining_;
        std::uint64_t dt = get_varint(data_, size_, pos_);
        std::uint64_t tid = first_ ? dt : prev_tid_ + dt;
        out.tid = tid;
        out.nodes.clear();
        if (scheme_ != CodingScheme::FilterBased) {
            std::uint64_t l_raw = get_varint(data_, size_, pos_);
            std::uint32_t l0 = (!first_ && dt == 0) ? prev_l_ + static_cast<std::uint32_t>(l_raw)
                                                    : static_cast<std::uint32_t>(l_raw);
            if (scheme_ == CodingScheme::SubtreeInterval) {
                std::uint64_t m = get_varint(data_, size_, pos_);
                NodeTuple t0;
                t0.l = l0;
                t0.r = static_cast<std::uint32_t>(get_varint(data_, size_, pos_));
                t0.v = static_cast<std::uint32_t>(get_varint(data_, size_, pos_));
                t0.o = static_cast<std::uint32_t>(get_varint(data_, size_, pos_));
                out.nodes.push_back(t0);
                for (std::uint64_t i = 1; i < m; ++i) {
                    NodeTuple t;
                    t.l = static_cast<std::uint32_t>(get_varint(data_, size_, pos_));
                    t.r = static_cast<std::uint32_t>(get_varint(data_, size_, pos_));
                    t.v = static_cast<std::uint32_t>(get_varint(data_, size_, pos_));
                    t.o = static_cast<std::uint32_t>(get_varint(data_, size_, pos_));
                    out.nodes.push_back(t);
                }
            } else {
                NodeTuple t0;
                t0.l = l0;
                t0.r = static_cast<std::uint32_t>(get_varint(data_, size_, pos_));
                t0.v = static_cast<std::uint32_t>(get_varint(data_, size_, pos_));
                out.nodes.push_back(t0);
            }
            prev_l_ = l0;
        }
        first_ = false;
        prev_tid_ = tid;
        return true;
    }

  private:
    const std::uint8_t* data_ = nullptr;
    std::size_t size_ = 0;
    std::size_t pos_ = 0;
    std::uint64_t remaining_ = 0;
    CodingScheme scheme_ = CodingScheme::FilterBased;
    bool first_ = true;
    std::uint64_t prev_tid_ = 0;
    std::uint32_t prev_l_ = 0;
};

struct BuildSummary {
    std::uint64_t keys = 0;
    std::uint64_t postings = 0;
    std::uint64_t bytes = 0;
    double wall_seconds = 0.0;
};

/// Builds a persistent index from a written data file. Output is a pure
/// function of (corpus, mss, scheme): rebuilds are bit-identical.
inline BuildSummary build_index(const std::string& data_path, std::size_t mss, CodingScheme scheme,
                                const std::string& index_path) {
    if (mss < 1 || mss > 6) throw error("mss out of range (1..6)");
    auto t0 = std::chrono::steady_clock::now();
    DataFileReader data(data_path);
    LabelTable table(data.labels());

    std::map<SubtreeKey, std::vector<Posting>> lists;
    for (std::uint64_t tid : data.tids()) {
        ParseTree tree = data.read_tree(tid);
        std::map<SubtreeKey, std::vector<Posting>> per_tree;
        for (const auto& e : enumerate_subtrees(tree, mss)) {
            SubtreeKey key = encode_key(e.shape, table);
            Posting p;
            p.tid = tid;
            if (scheme != CodingScheme::FilterBased) {
                for (std::uint32_t idx : e.instance.node_idx) {
                    const TreeNode& n = tree.nodes[idx];
                    p.nodes.push_back({n.pre, n.post, n.level, n.pre});
                    if (scheme == CodingScheme::RootSplit) break;  // root only
                }
                if (scheme == CodingScheme::RootSplit) p.nodes.front().o = 0;
            }
            per_tree[std::move(key)].push_back(std::move(p));
        }
        for (auto& [key, ps] : per_tree) {
            std::sort(ps.begin(), ps.end());
            ps.erase(std::unique(ps.begin(), ps.end()), ps.end());
            if (scheme == CodingScheme::FilterBased) ps.resize(1);
            auto& dst = lists[key];
            dst.insert(dst.end(), ps.begin(), ps.end());
        }
    }

    std::vector<std::uint8_t> postings;
    std::string directory;
    std::uint64_t total_postings = 0;
    for (const auto& [key, entries] : lists) {
        std::uint64_t off = postings.size();
        detail::encode_postings(postings, scheme, entries);
        directory.push_back(static_cast<char>(key.size() & 0xff));
        directory.push_back(static_cast<char>((key.size() >> 8) & 0xff));
        directory.append(reinterpret_cast<const char*>(key.data()), key.size());
        detail::put_u64(directory, off);
        detail::put_u64(directory, postings.size() - off);
        detail::put_u64(directory, entries.size());
        total_postings += entries.size();
    }

    std::string out;
    out.append(detail::kIndexMagic, 8);
    detail::put_u32(out, detail::kIndexVersion);
    out.push_back(static_cast<char>(scheme));
    out.push_back(static_cast<char>(mss));
    out.push_back(0);
    out.push_back(0);
    detail::put_u64(out, lists.size());
    detail::put_u32(out, static_cast<std::uint32_t>(table.size()));
    for (const auto& s : table.labels()) {
        detail::put_u32(out, static_cast<std::uint32_t>(s.size()));
        out += s;
    }
    detail::put_u64(out, directory.size());
    out += directory;
    out.append(reinterpret_cast<const char*>(postings.data()), postings.size());

    std::ofstream f(index_path, std::ios::binary | std::ios::trunc);
    if (!f) throw io_error("cannot open for write: " + index_path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw io_error("write failed: " + index_path);

    BuildSummary sum;
    sum.keys = lists.size();
    sum.postings = total_postings;
    sum.bytes = out.size();
    sum.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return sum;
}

struct IndexStats {
    std::uint64_t keys = 0;
    std::uint64_t postings = 0;
    std::uint64_t bytes = 0;
    std::map<std::size_t, std::pair<std::uint64_t, std::uint64_t>> per_size;  // size -> (keys, postings)
};

/// Read-only view of a built index. Immutable; concurrent lookups are safe.
class IndexReader {
  public:
    explicit IndexReader(const std::string& path) {
        std::ifstream f(path, std::ios::binary);
        if (!f) throw io_error("cannot open: " + path);
        buf_.assign(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
        if (buf_.size() < 32 || std::memcmp(buf_.data(), detail::kIndexMagic, 8) != 0)
            throw io_error("bad index magic: " + path);
        detail::ByteReader r{buf_, 8};
        if (r.u32() != detail::kIndexVersion) throw io_error("unsupported index version");
        scheme_ = static_cast<CodingScheme>(static_cast<std::uint8_t>(buf_[r.pos++]));
        mss_ = static_cast<std::uint8_t>(buf_[r.pos++]);
        r.pos += 2;
        std::uint64_t key_count = r.u64();
        std::uint32_t nlabels = r.u32();
        std::vector<std::string> labels;
        labels.reserve(nlabels);
        for (std::uint32_t i = 0; i < nlabels; ++i) {
            std::uint32_t len = r.u32();
            if (r.pos + len > buf_.size()) throw io_error("index truncated in label table");
            labels.emplace_back(buf_.data() + r.pos, len);
            r.pos += len;
        }
        table_ = LabelTable(labels);
        std::uint64_t dir_len = r.u64();
        std::size_t dir_end = r.pos + static_cast<std::size_t>(dir_len);
        posting_base_ = dir_end;
        while (r.pos < dir_end) {
            std::uint16_t klen = static_cast<std::uint8_t>(buf_[r.pos]) |
                                 (static_cast<std::uint16_t>(static_cast<std::uint8_t>(buf_[r.pos + 1])) << 8);
            r.pos += 2;
            SubtreeKey key(buf_.begin() + static_cast<std::ptrdiff_t>(r.pos),
                           buf_.begin() + static_cast<std::ptrdiff_t>(r.pos + klen));
            r.pos += klen;
            Entry e;
            e.offset = r.u64();
            e.length = r.u64();
            e.count = r.u64();
            dir_.emplace_back(std::move(key), e);
        }
        if (dir_.size() != key_count) throw io_error("index directory count mismatch");
    }

    CodingScheme scheme() const { return scheme_; }
    std::size_t mss() const { return mss_; }
    const LabelTable& label_table() const { return table_; }
    std::uint64_t key_count() const { return dir_.size(); }

    /// Streaming lookup; empty cursor when the key is absent.
    PostingCursor cursor(const SubtreeKey& key) const {
        const Entry* e = find(key);
        if (!e) return PostingCursor();
        return PostingCursor(
            reinterpret_cast<const std::uint8_t*>(buf_.data()) + posting_base_ + e->offset,
            static_cast<std::size_t>(e->length), e->count, scheme_);
    }

    std::uint64_t posting_count(const SubtreeKey& key) const {
        const Entry* e = find(key);
        return e ? e->count : 0;
    }

    PostingList lookup(const SubtreeKey& key) const {
        PostingList list;
        list.key = key;
        list.scheme = scheme_;
        PostingCursor c = cursor(key);
        Posting p;
        while (c.next(p)) list.entries.push_back(p);
        return list;
    }

    /// Convenience: canonicalizes and encodes; absent labels mean empty list.
    PostingList lookup_shape(const SubtreeShape& shape) const {
        SubtreeShape canon = canonicalize(shape);
        if (!shape_in_alphabet(canon)) {
            PostingList empty;
            empty.scheme = scheme_;
            return empty;
        }
        return lookup(encode_key(canon, table_));
    }

    std::uint64_t posting_count_shape(const SubtreeShape& shape) const {
        SubtreeShape canon = canonicalize(shape);
        if (!shape_in_alphabet(canon)) return 0;
        return posting_count(encode_key(canon, table_));
    }

    std::vector<SubtreeKey> keys() const {
        std::vector<SubtreeKey> out;
        out.reserve(dir_.size());
        for (const auto& [k, e] : dir_) out.push_back(k);
        return out;
    }

    IndexStats stats() const {
        IndexStats s;
        s.keys = dir_.size();
        s.bytes = buf_.size();
        for (const auto& [key, e] : dir_) {
            s.postings += e.count;
            std::size_t pos = 0;
            std::size_t size = static_cast<std::size_t>(get_varint(key.data(), key.size(), pos));
            auto& [keys, postings] = s.per_size[size];
            ++keys;
            postings += e.count;
        }
        return s;
    }

  private:
    struct Entry {
        std::uint64_t offset = 0, length = 0, count = 0;
    };

    bool shape_in_alphabet(const SubtreeShape& s) const {
        if (table_.find(s.label) < 0) return false;
        for (const auto& c : s.children)
            if (!shape_in_alphabet(c)) return false;
        return true;
    }

    const Entry* find(const SubtreeKey& key) const {
        auto it = std::lower_bound(dir_.begin(), dir_.end(), key,
                                   [](const auto& a, const SubtreeKey& k) { return a.first < k; });
        if (it == dir_.end() || it->first != key) return nullptr;
        return &it->second;
    }

    std::string buf_;
    CodingScheme scheme_ = CodingScheme::FilterBased;
    std::size_t mss_ = 0;
    std::size_t posting_base_ = 0;
    LabelTable table_;
    std::vector<std::pair<SubtreeKey, Entry>> dir_;
};

}  // namespace treedex

#endif
