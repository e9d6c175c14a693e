#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace shelterq {

// Error taxonomy shared by the library and the command-line tool. Each exception
// carries a short stable machine-readable code (e.g. "unstable-without-abandonment")
// alongside the human-readable message. The CLI maps the classes to exit codes:
// validation -> 2, infeasible -> 3, numerical -> 4.
class Error : public std::runtime_error {
public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

private:
  std::string code_;
};

// Bad inputs or model-domain violations (exit code 2).
class ValidationError : public Error {
public:
  using Error::Error;
};

// Well-posed request with no feasible answer (exit code 3).
class InfeasibleError : public Error {
public:
  using Error::Error;
};

// Internal numerical failure: non-convergence or an out-of-range result (exit code 4).
class NumericalError : public Error {
public:
  using Error::Error;
};

}  // namespace shelterq
