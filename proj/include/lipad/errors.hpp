#pragma once

#include <stdexcept>
#include <string>

namespace lipad {

// Error taxonomy mirrored by the CLI exit codes:
// config -> 2, data/io -> 3, numeric -> 4.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Violated precondition / API misuse.
struct ContractError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionError : ContractError {
    using ContractError::ContractError;
};

} // namespace lipad
