#pragma once
// Error taxonomy shared across the library. The CLI maps these onto exit
// codes: ConfigError -> 1 (usage), DataError -> 2, NumericError -> 3.

#include <stdexcept>
#include <string>

namespace turnmjp {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Invalid configuration or arguments (speaker count, sweep counts, paths).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Malformed or inconsistent data: schema violations, dimension mismatches,
// guard violations, insufficient samples.
class DataError : public Error {
public:
    using Error::Error;
};

// Numerical failures: non-positive-definite covariances, degenerate
// signals, optimizer infeasibility.
class NumericError : public Error {
public:
    using Error::Error;
};

} // namespace turnmjp
