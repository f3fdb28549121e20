#pragma once

#include <stdexcept>
#include <string>

namespace xmln {

// Error taxonomy mirrors the CLI exit codes: config 2, data 3, numeric 4.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Rule-DSL syntax error carrying source position (1-based).
struct ParseError : std::runtime_error {
    int line;
    int column;
    ParseError(int line_, int column_, const std::string& msg)
        : std::runtime_error("parse error at " + std::to_string(line_) + ":" +
                             std::to_string(column_) + ": " + msg),
          line(line_), column(column_) {}
};

} // namespace xmln
