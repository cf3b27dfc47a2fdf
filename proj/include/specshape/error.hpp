#pragma once

#include <stdexcept>
#include <string>

namespace specshape {

/// Domain or numerical failure (bad tensor, inadmissible mesh, solver breakdown).
class Error : public std::runtime_error
{
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input: unparseable configuration, unknown keys, bad literals.
class ConfigError : public std::runtime_error
{
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace specshape
