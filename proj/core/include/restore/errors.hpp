#pragma once

#include <stdexcept>
#include <string>

namespace restore {

/// Bad user input: config files, dimension mismatches, out-of-range arguments.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A computation produced a non-finite value or otherwise lost numerical meaning.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace restore
