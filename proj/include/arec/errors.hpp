#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace arec {

// Malformed input file; carries the 1-based line number of the offending line
// (0 when the problem is not tied to a line, e.g. an empty file).
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Lookup of an identifier (keyword, record, document, session, context) that does not exist.
class NotFound : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

// Operation invoked in a state that does not allow it (e.g. answering a resolved keyword).
class StateError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace arec
