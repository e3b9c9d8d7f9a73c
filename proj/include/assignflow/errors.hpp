#pragma once

#include <stdexcept>
#include <string>

namespace assignflow {

// Filesystem and format failures; the CLI maps these to exit code 3,
// numerical failures (any other runtime_error) to 4 and bad arguments to 2.
class IoError : public std::runtime_error {
  public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace assignflow
