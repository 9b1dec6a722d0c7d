#pragma once

#include <stdexcept>
#include <string>

namespace posr {

// Base class of every error thrown by the library. Subclasses map onto the
// CLI exit codes: ConfigError -> 1, IoError -> 2, NumericError -> 3.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Shape or extent mismatch between operands.
class DimensionError : public Error {
public:
    using Error::Error;
};

// A precondition of an operation was violated (API misuse).
class ContractError : public Error {
public:
    using Error::Error;
};

// Invalid configuration or command line usage.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Filesystem or decode/encode failure.
class IoError : public Error {
public:
    using Error::Error;
};

// NaN/Inf detected where finite values are required.
class NumericError : public Error {
public:
    using Error::Error;
};

} // namespace posr
