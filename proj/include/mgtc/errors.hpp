#pragma once

#include <stdexcept>
#include <string>

namespace mgtc {

// Error categories map 1:1 onto CLI exit codes (see tools/mgtc_cli.cpp).
struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

struct TruncationError : FormatError {
    explicit TruncationError(const std::string& msg) : FormatError(msg) {}
};

struct UnsupportedFormatError : FormatError {
    explicit UnsupportedFormatError(const std::string& msg) : FormatError(msg) {}
};

struct ShapeError : std::invalid_argument {
    explicit ShapeError(const std::string& msg) : std::invalid_argument(msg) {}
};

struct BoundsError : std::out_of_range {
    explicit BoundsError(const std::string& msg) : std::out_of_range(msg) {}
};

struct FeasibilityError : std::invalid_argument {
    double max_ratio;
    FeasibilityError(const std::string& msg, double max_ratio_)
        : std::invalid_argument(msg), max_ratio(max_ratio_) {}
};

struct ConfigError : std::invalid_argument {
    explicit ConfigError(const std::string& msg) : std::invalid_argument(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace mgtc
