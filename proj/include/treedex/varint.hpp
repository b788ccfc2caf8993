#ifndef TREEDEX_VARINT_HPP
#define TREEDEX_VARINT_HPP

#include <cstdint>
#include <vector>

#include "treedex/errors.hpp"

namespace treedex {

// LEB128-style unsigned varints, used for posting areas and key bytes.

inline void put_varint(std::vector<std::uint8_t>& out, std::uint64_t v) {
    while (v >= 0x80) {
        out.push_back(static_cast<std::uint8_t>(v) | 0x80);
        v >>= 7;
    }
    out.push_back(static_cast<std::uint8_t>(v));
}

inline std::uint64_t get_varint(const std::uint8_t* data, std::size_t size, std::size_t& pos) {
    std::uint64_t v = 0;
    int shift = 0;
    for (;;) {
        if (pos >= size) throw io_error("truncated varint");
        std::uint8_t b = data[pos++];
        v |= static_cast<std::uint64_t>(b & 0x7f) << shift;
        if (!(b & 0x80)) return v;
        shift += 7;
        if (shift > 63) throw io_error("varint overflow");
    }
}

}  // namespace treedex

#endif
