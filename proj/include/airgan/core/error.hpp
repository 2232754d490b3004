#pragma once

#include <stdexcept>
#include <string>

namespace airgan {

/// Base exception for every failure raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration value or malformed config file.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Tensor or layer shape mismatch.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Non-finite value detected in a numeric pipeline.
class NumericError : public Error {
public:
    using Error::Error;
};

inline void require(bool condition, const std::string& message)
{
    if (!condition) {
        throw Error(message);
    }
}

inline void require_config(bool condition, const std::string& message)
{
    if (!condition) {
        throw ConfigError(message);
    }
}

} // namespace airgan
