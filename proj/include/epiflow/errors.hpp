#ifndef EPIFLOW_ERRORS_HPP
#define EPIFLOW_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace epiflow {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Graph construction / generation
struct InvalidSpec : Error {
  using Error::Error;
};
struct ConnectivityFailure : Error {
  using Error::Error;
};
struct InvalidRange : Error {
  using Error::Error;
};
struct InvariantViolation : Error {
  using Error::Error;
};

// File I/O
struct ParseError : Error {
  ParseError(const std::string& what, long line_number)
      : Error(what + " (line " + std::to_string(line_number) + ")"), line(line_number) {}
  long line;
};
struct IoError : Error {
  using Error::Error;
};

// Linear algebra / spectral
struct IndexMismatch : Error {
  using Error::Error;
};
struct SingularSystem : Error {
  using Error::Error;
};
struct SingularResolvent : SingularSystem {
  using SingularSystem::SingularSystem;
};
struct NoConvergence : Error {
  NoConvergence(const std::string& what, double last_residual)
      : Error(what + " (last residual " + std::to_string(last_residual) + ")"),
        residual(last_residual) {}
  double residual;
};

// Time stepping
struct StepTooLarge : Error {
  using Error::Error;
};

// CLI / config
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace epiflow

#endif
