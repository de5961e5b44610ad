#pragma once

#include <stdexcept>
#include <string>

namespace posir {

/// Broad failure category. The CLI maps each one to an exit code.
enum class ErrorKind {
  usage,    // bad arguments or configuration
  data,     // malformed or non-finite input
  numeric,  // a numeric precondition does not hold (delta too large, sigma <= 0, ...)
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace posir
