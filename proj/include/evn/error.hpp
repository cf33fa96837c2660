#pragma once

#include <stdexcept>
#include <string>

namespace evn {

// Bad invocation: missing files, invalid configuration, misuse of an API.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent content inside an input file.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace evn
