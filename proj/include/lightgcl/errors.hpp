// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace lightgcl {

// Bad user input: invalid hyperparameters, unknown config keys, inconsistent
// dimensions. Maps to CLI exit code 1.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Unreadable or malformed data files. Maps to CLI exit code 2.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// NaN/Inf in a loss or gradient. Maps to CLI exit code 3.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Warnings go to stderr unless silenced (tests silence them).
void warn(const std::string& message);
void set_warnings_enabled(bool enabled);

}  // namespace lightgcl
