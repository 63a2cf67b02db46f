#pragma once

#include <stdexcept>
#include <string>

namespace fvopt {

enum class ErrorKind {
  invalid_params,
  non_convergent,
  singular_system,
  out_of_domain,
  too_large,
  no_alive_source,
  ansatz_infeasible,
  degenerate_range,
  io_error,
  config_error,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_params: return "InvalidParams";
    case ErrorKind::non_convergent: return "NonConvergent";
    case ErrorKind::singular_system: return "SingularSystem";
    case ErrorKind::out_of_domain: return "OutOfDomain";
    case ErrorKind::too_large: return "TooLarge";
    case ErrorKind::no_alive_source: return "NoAliveSource";
    case ErrorKind::ansatz_infeasible: return "AnsatzInfeasible";
    case ErrorKind::degenerate_range: return "DegenerateRange";
    case ErrorKind::io_error: return "IoError";
    case ErrorKind::config_error: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace fvopt
