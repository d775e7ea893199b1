#pragma once

#include <stdexcept>
#include <string>

namespace facefit {

/// Malformed or inconsistent input: bad files, dimension mismatches,
/// rejected frames. Maps to CLI exit code 2.
class data_error : public std::runtime_error {
public:
    explicit data_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical breakdown: NaN gradients, degenerate energies, failed fits.
/// Maps to CLI exit code 3.
class numerical_error : public std::runtime_error {
public:
    explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace facefit
