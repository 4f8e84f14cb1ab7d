#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace actsugg {

/// Bad index, dimension, or parameter handed to a library call.
struct ArgumentError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// The observation has zero likelihood under the predicted belief.
struct ImpossibleObservation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// The suggestion likelihood is zero on the whole belief support.
struct ImpossibleSuggestion : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed text input. `line` and `column` are 1-based; 0 when unknown.
struct ParseError : std::runtime_error {
    ParseError(const std::string& what, std::size_t line, std::size_t column)
        : std::runtime_error(what + " (line " + std::to_string(line) + ", column " +
                             std::to_string(column) + ")"),
          line(line), column(column) {}
    std::size_t line;
    std::size_t column;
};

/// Well-formed input whose content contradicts its own header or invariants.
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Scenario or CLI configuration that cannot be run.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace actsugg
