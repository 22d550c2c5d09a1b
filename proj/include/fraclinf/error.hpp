#pragma once

#include <stdexcept>
#include <string>

namespace fraclinf {

enum class ErrorCode {
  invalid_argument,
  grid_mismatch,
  hypothesis_violation,
  trivial_problem,
  support_violation,
  numerical_failure,
  not_converged,
  config_error,
  io_error,
};

/// Library-wide exception; `code()` lets callers (the CLI) map failures to exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace fraclinf
