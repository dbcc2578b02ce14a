#pragma once

#include <stdexcept>
#include <string>

namespace climex {

struct DimensionMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Factorization pivot fell below tolerance; the matrix is not usably SPD.
struct NotSpd : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RankDeficient : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TooFewSamples : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonBinaryTarget : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DegenerateFeature : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EmptySplit : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace climex
