#pragma once

#include <stdexcept>
#include <string>

namespace evinv {

/// Base class for everything this library throws on purpose.
class error : public std::runtime_error {
public:
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

/// Bad run configuration: unknown key, missing field, out-of-range value.
class config_error : public error {
public:
    using error::error;
};

/// A solvability hypothesis is violated hard enough that the computation
/// cannot proceed (e.g. the measurement is not separated from zero).
class hypothesis_error : public error {
public:
    using error::error;
};

/// Numerical breakdown: singular system matrix, degenerate denominator,
/// loss of positivity where positivity is required.
class numeric_error : public error {
public:
    using error::error;
};

} // namespace evinv
