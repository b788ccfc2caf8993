#ifndef TREEDEX_ERRORS_HPP
#define TREEDEX_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace treedex {

struct error : std::runtime_error {
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed textual input (bracketed trees, shape syntax, query syntax).
struct parse_error : error {
    parse_error(const std::string& msg, std::size_t offset)
        : error(msg + " at offset " + std::to_string(offset)), offset(offset) {}
    std::size_t offset;
};

/// Structural violations (cycles, bad parent links, tid order).
struct structure_error : error {
    using error::error;
};

/// On-disk format problems (bad magic, checksum mismatch, truncation).
struct io_error : error {
    using error::error;
};

}  // namespace treedex

#endif
