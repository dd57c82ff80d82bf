#pragma once

#include <stdexcept>
#include <string>

namespace oedkit {

// Error taxonomy shared by the library and the CLI. The CLI maps these to
// process exit codes: ConfigError -> 2, NumericalError -> 3, IoError -> 4.

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace oedkit
