#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace grevo {

/// Bad user input: config values, CLI flags, inconsistent arguments.
class ConfigError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file. The message carries "<source>:<line>: ".
class FormatError : public std::runtime_error
{
public:
    FormatError(const std::string& source, std::size_t line, const std::string& what)
        : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line)
    {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

} // namespace grevo
