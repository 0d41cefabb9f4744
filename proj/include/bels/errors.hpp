#pragma once

#include <stdexcept>
#include <string>

namespace bels {

// Matrix operands do not conform (wrong dimensions, malformed one-hot rows, ...).
struct ShapeMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A linear system could not be solved even with the ridge term on the diagonal.
// Signals degenerate accumulators rather than a programming error.
struct SingularSystem : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidConfig : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct FileNotFound : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Carries the 1-based line number of the offending CSV row.
struct ParseError : std::runtime_error {
    ParseError(const std::string& what, std::size_t line)
        : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line_number(line) {}
    std::size_t line_number;
};

// A feature cell failed numeric parsing; names the column.
struct NonNumericFeature : std::runtime_error {
    NonNumericFeature(const std::string& column, std::size_t line)
        : std::runtime_error("non-numeric value in feature column '" + column + "' (line " +
                             std::to_string(line) + ")"),
          column_name(column) {}
    std::string column_name;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EmptyStream : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace bels
