#pragma once

#include <stdexcept>
#include <string>

namespace cfvn {

// Bad arguments or malformed data: maps to exit code 1 in the driver.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// File system or stream failure: maps to exit code 2 in the driver.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cfvn
