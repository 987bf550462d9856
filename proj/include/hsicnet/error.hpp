#pragma once

#include <stdexcept>
#include <string>

namespace hsicnet {

// Coarse failure categories. They map 1:1 onto C API status codes and CLI
// exit codes, so every throw site has to pick the category deliberately.
enum class ErrorKind {
  invalid_argument,  // caller broke a documented precondition
  config,            // malformed or contradictory configuration
  data,              // unreadable / inconsistent dataset or artifact
  numeric,           // non-finite values, divergence, degenerate statistics
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace hsicnet
