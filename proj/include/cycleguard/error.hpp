#pragma once

#include <stdexcept>
#include <string>

namespace cycleguard {

// Error taxonomy. The CLI maps categories to exit codes:
// data errors -> 2, config/usage errors -> 3, numeric failures -> 4.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Shape or extent mismatch between tensors or layer contracts.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Non-finite values or numerically invalid results.
class NumericError : public Error {
public:
    using Error::Error;
};

// Malformed, missing, or unusable input data.
class DataError : public Error {
public:
    using Error::Error;
};

class IoError : public DataError {
public:
    using DataError::DataError;
};

// Invalid configuration values or unknown keys.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Operation applied in the wrong object state (e.g. normalizing twice).
class StateError : public Error {
public:
    using Error::Error;
};

// API contract violations (empty inputs, missing gradients, untrained models).
class ContractError : public Error {
public:
    using Error::Error;
};

}  // namespace cycleguard
