#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace slr {

/// A documented precondition was violated by the caller.
class contract_error : public std::logic_error {
public:
    explicit contract_error(const std::string& what) : std::logic_error(what) {}
};

/// Malformed PGM input. offset() is the byte position at which decoding gave up.
class pgm_error : public std::runtime_error {
public:
    pgm_error(const std::string& what, std::size_t offset)
        : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"),
          offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// Rule text rejected by the lexer, parser or validator. Positions are 1-based.
class parse_error : public std::runtime_error {
public:
    parse_error(int line, int column, const std::string& what)
        : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) +
                             ": " + what),
          line_(line),
          column_(column) {}
    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    int line_;
    int column_;
};

/// Segment too short (or a zero-length ray) for the requested geometric operation.
class degenerate_geometry : public std::runtime_error {
public:
    explicit degenerate_geometry(const std::string& what) : std::runtime_error(what) {}
};

/// Scene description rejected (syntax or a shape outside the image).
class scene_error : public std::runtime_error {
public:
    explicit scene_error(const std::string& what) : std::runtime_error(what) {}
};

/// Weights configuration rejected.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

/// Query names a predicate/arity the rule set does not define.
class unknown_predicate : public std::runtime_error {
public:
    explicit unknown_predicate(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace slr
