#pragma once

#include <stdexcept>
#include <string>

namespace entroprune {

// Base class for all toolkit errors.
class Error : public std::runtime_error {
  public:
    explicit Error(const std::string &msg) : std::runtime_error(msg) {}
};

// Bad parameters, violated preconditions, malformed configuration,
// out-of-order pipeline steps. Maps to exit status 1 in the CLI.
class ValidationError : public Error {
  public:
    explicit ValidationError(const std::string &msg) : Error(msg) {}
};

// Unreadable, unwritable or malformed files. Maps to exit status 2.
class IoError : public Error {
  public:
    explicit IoError(const std::string &msg) : Error(msg) {}
};

} // namespace entroprune
