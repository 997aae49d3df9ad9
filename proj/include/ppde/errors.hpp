#pragma once

#include <stdexcept>
#include <string>

namespace ppde {

// Configuration / input problems. The CLI maps these to exit code 2.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failures (NaN loss, degenerate estimators, ...). CLI exit code 3.
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace ppde
