#pragma once

#include <stdexcept>
#include <string>

namespace patchae {

// Base for every error the library raises. Each subclass maps to one CLI
// exit code (see exit_code()).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid configuration value or range.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Argument shape / dimension mismatch.
class InputError : public Error {
public:
    using Error::Error;
};

// Missing or unreadable files, malformed dataset layout.
class DataError : public Error {
public:
    using Error::Error;
};

// Corrupt or incompatible binary container (bad magic, version, hash).
class FormatError : public DataError {
public:
    using DataError::DataError;
};

// Required weights could not be loaded.
class LoadError : public DataError {
public:
    using DataError::DataError;
};

// Non-finite loss or parameters during training.
class NumericalError : public Error {
public:
    using Error::Error;
};

// AUROC on single-class input and similar evaluation misuse.
class EvaluationError : public Error {
public:
    using Error::Error;
};

// 0 success, 1 usage/config, 2 data, 3 numerical.
int exit_code(const Error& e) noexcept;

}  // namespace patchae
