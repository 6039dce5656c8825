#pragma once

#include <stdexcept>
#include <string>

namespace tsadv {

// Configuration file problems (bad key, bad value, missing section).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input data (CSV parse failures, shape mismatches at load).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite values encountered mid-computation; attack and training loops
// abort with this rather than propagating NaNs.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace tsadv
