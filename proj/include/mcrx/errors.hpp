/**
 * @file errors.hpp
 * @brief Exception types shared by the library and the CLI.
 *
 * The CLI maps each family onto a process exit code:
 *   ConfigError -> 2, DataError -> 3, NonConvergence -> 4.
 */
#pragma once

#include <stdexcept>
#include <string>

namespace mcrx {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Model parameters that produce an unevaluable response (e.g. a Lambert W
/// argument below the branch point).
class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or insufficient input data (CSV parse failures, short traces).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NonConvergence : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace mcrx
