#pragma once
#include <stdexcept>
#include <string>

namespace missmult {

// Error taxonomy mirrored by the CLI exit codes:
//   1 usage, 2 data, 3 numerical.
class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
  static constexpr int exit_code = 1;
};

class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
  static constexpr int exit_code = 2;
};

class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
  static constexpr int exit_code = 3;
};

}  // namespace missmult
