#ifndef TREEDEX_DATA_FILE_HPP
#define TREEDEX_DATA_FILE_HPP

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "treedex/errors.hpp"
#include "treedex/tree.hpp"

namespace treedex {

// Data file layout (all integers little-endian, fixed width):
//
//   magic            8 bytes  "TDXDATA1"
//   version          u32
//   tree count       u64
//   per-tree records, sequential:
//     tid            u64
//     node count     u32
//     checksum       u32      FNV-1a over the node tuples
//     node tuples    node count x (nodeId i32, parentId i32, labelId u32,
//                                  pre u32, post u32, level u32)
//   string table:    u32 count, then per label u32 length + bytes
//   offset table:    tree count x (tid u64, byte offset u64)
//   footer:          string table offset u64, offset table offset u64,
//                    magic again (8 bytes)

namespace detail {

constexpr char kDataMagic[8] = {'T', 'D', 'X', 'D', 'A', 'T', 'A', '1'};
constexpr std::uint32_t kDataVersion = 1;

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_i32(std::string& out, std::int32_t v) {
    put_u32(out, static_cast<std::uint32_t>(v));
}

struct ByteReader {
    const std::string& buf;
    std::size_t pos = 0;
    std::uint32_t u32() {
        if (pos + 4 > buf.size()) throw io_error("data file truncated");
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(buf[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t lo = u32(), hi = u32();
        return lo | (hi << 32);
    }
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
};

inline std::uint32_t fnv1a(const char* data, std::size_t n) {
    std::uint32_t h = 2166136261u;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= static_cast<std::uint8_t>(data[i]);
        h *= 16777619u;
    }
    return h;
}

}  // namespace detail

struct DataFileSummary {
    std::uint64_t trees = 0;
    std::uint64_t nodes = 0;
    std::uint64_t bytes = 0;
};

/// Writes all trees of a numbered corpus to a flat random-access file.
/// Trees must arrive in strictly increasing tid order.
inline DataFileSummary write_data_file(const Corpus& corpus, const std::string& path) {
    std::map<std::string, std::uint32_t> label_ids;
    std::vector<std::string> labels;
    auto intern = [&](const std::string& s) -> std::uint32_t {
        auto it = label_ids.find(s);
        if (it != label_ids.end()) return it->second;
        std::uint32_t id = static_cast<std::uint32_t>(labels.size());
        label_ids.emplace(s, id);
        labels.push_back(s);
        return id;
    };

    std::string out;
    out.append(detail::kDataMagic, 8);
    detail::put_u32(out, detail::kDataVersion);
    detail::put_u64(out, corpus.trees.size());

    DataFileSummary sum;
    std::vector<std::pair<std::uint64_t, std::uint64_t>> offsets;
    bool first = true;
    std::uint64_t prev_tid = 0;
    for (const auto& t : corpus.trees) {
        if (!first && t.tid <= prev_tid)
            throw structure_error("tids must be strictly increasing (duplicate or out of order)");
        first = false;
        prev_tid = t.tid;
        offsets.emplace_back(t.tid, out.size());

        std::string body;
        for (const auto& n : t.nodes) {
            detail::put_i32(body, n.node_id);
            detail::put_i32(body, n.parent_id);
            detail::put_u32(body, intern(n.label));
            detail::put_u32(body, n.pre);
            detail::put_u32(body, n.post);
            detail::put_u32(body, n.level);
        }
        detail::put_u64(out, t.tid);
        detail::put_u32(out, static_cast<std::uint32_t>(t.nodes.size()));
        detail::put_u32(out, detail::fnv1a(body.data(), body.size()));
        out += body;
        sum.nodes += t.nodes.size();
    }

    std::uint64_t string_table_off = out.size();
    detail::put_u32(out, static_cast<std::uint32_t>(labels.size()));
    for (const auto& s : labels) {
        detail::put_u32(out, static_cast<std::uint32_t>(s.size()));
        out += s;
    }
    std::uint64_t offset_table_off = out.size();
    for (auto [tid, off] : offsets) {
        detail::put_u64(out, tid);
        detail::put_u64(out, off);
    }
    detail::put_u64(out, string_table_off);
    detail::put_u64(out, offset_table_off);
    out.append(detail::kDataMagic, 8);

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw io_error("cannot open for write: " + path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw io_error("write failed: " + path);

    sum.trees = corpus.trees.size();
    sum.bytes = out.size();
    return sum;
}

/// Random-access reader over a written data file. Immutable once opened;
/// safe to share across threads.
class DataFileReader {
  public:
    explicit DataFileReader(const std::string& path) {
        std::ifstream f(path, std::ios::binary);
        if (!f) throw io_error("cannot open: " + path);
        buf_.assign(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
        if (buf_.size() < 20 + 24 || std::memcmp(buf_.data(), detail::kDataMagic, 8) != 0)
            throw io_error("bad data file magic: " + path);
        if (std::memcmp(buf_.data() + buf_.size() - 8, detail::kDataMagic, 8) != 0)
            throw io_error("bad data file footer: " + path);
        detail::ByteReader hdr{buf_, 8};
        if (hdr.u32() != detail::kDataVersion) throw io_error("unsupported data file version");
        tree_count_ = hdr.u64();

        detail::ByteReader foot{buf_, buf_.size() - 24};
        std::uint64_t string_table_off = foot.u64();
        std::uint64_t offset_table_off = foot.u64();

        detail::ByteReader st{buf_, static_cast<std::size_t>(string_table_off)};
        std::uint32_t nlabels = st.u32();
        labels_.reserve(nlabels);
        for (std::uint32_t i = 0; i < nlabels; ++i) {
            std::uint32_t len = st.u32();
            if (st.pos + len > buf_.size()) throw io_error("data file truncated in string table");
            labels_.emplace_back(buf_.data() + st.pos, len);
            st.pos += len;
        }

        detail::ByteReader ot{buf_, static_cast<std::size_t>(offset_table_off)};
        for (std::uint64_t i = 0; i < tree_count_; ++i) {
            std::uint64_t tid = ot.u64();
            std::uint64_t off = ot.u64();
            offsets_.emplace(tid, off);
        }
    }

    std::uint64_t tree_count() const { return tree_count_; }
    const std::vector<std::string>& labels() const { return labels_; }
    std::vector<std::uint64_t> tids() const {
        std::vector<std::uint64_t> out;
        out.reserve(offsets_.size());
        for (auto& [tid, off] : offsets_) out.push_back(tid);
        return out;
    }

    ParseTree read_tree(std::uint64_t tid) const {
        auto it = offsets_.find(tid);
        if (it == offsets_.end()) throw io_error("unknown tid: " + std::to_string(tid));
        detail::ByteReader r{buf_, static_cast<std::size_t>(it->second)};
        ParseTree t;
        t.tid = r.u64();
        if (t.tid != tid) throw io_error("offset table corrupt");
        std::uint32_t n = r.u32();
        std::uint32_t checksum = r.u32();
        std::size_t body_start = r.pos;
        if (r.pos + static_cast<std::size_t>(n) * 24 > buf_.size())
            throw io_error("data file truncated in record");
        t.nodes.resize(n);
        for (std::uint32_t i = 0; i < n; ++i) {
            TreeNode& nd = t.nodes[i];
            nd.node_id = r.i32();
            nd.parent_id = r.i32();
            std::uint32_t lid = r.u32();
            if (lid >= labels_.size()) throw io_error("label id out of range");
            nd.label = labels_[lid];
            nd.pre = r.u32();
            nd.post = r.u32();
            nd.level = r.u32();
        }
        if (detail::fnv1a(buf_.data() + body_start, static_cast<std::size_t>(n) * 24) != checksum)
            throw io_error("checksum mismatch for tid " + std::to_string(tid));
        return t;
    }

  private:
    std::string buf_;
    std::uint64_t tree_count_ = 0;
    std::vector<std::string> labels_;
    std::map<std::uint64_t, std::uint64_t> offsets_;
};

}  // namespace treedex

#endif
