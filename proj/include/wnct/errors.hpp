#pragma once

#include <stdexcept>
#include <string>

namespace wnct {

/// Bad command-line usage or malformed configuration. CLI exit code 1.
struct usage_error : std::runtime_error {
    explicit usage_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Missing/corrupt files or inputs violating operation contracts. CLI exit code 2.
struct data_error : std::runtime_error {
    explicit data_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Non-finite values where finite ones are required (e.g. diverged loss). CLI exit code 3.
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw data_error(msg);
}

} // namespace wnct
