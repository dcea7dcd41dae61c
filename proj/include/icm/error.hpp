#pragma once

#include <stdexcept>
#include <string>

namespace icm {

// Failure categories map one-to-one onto CLI exit codes.
enum class ErrorKind {
  config = 2,      // invalid parameters, dimensions, flags
  data = 3,        // malformed or out-of-domain input data
  degenerate = 4,  // numerical degeneracy (zero EGC, singular fits, ...)
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

struct DataError : Error {
  explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

struct DegenerateError : Error {
  explicit DegenerateError(const std::string& what)
      : Error(ErrorKind::degenerate, what) {}
};

}  // namespace icm
