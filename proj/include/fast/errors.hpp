#pragma once

#include <stdexcept>
#include <string>

namespace fast {

// Error taxonomy shared by the C++ core and the C API layer. The C API maps
// each type to a stable status code; see fast_c.h.

struct InvalidParameterError : std::runtime_error {
  explicit InvalidParameterError(const std::string& msg) : std::runtime_error(msg) {}
};

struct FormatError : std::runtime_error {
  explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace fast
