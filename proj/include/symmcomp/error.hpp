#pragma once

#include <stdexcept>
#include <string>

namespace symmcomp {

enum class ErrorKind {
  invalid_argument,
  invalid_mesh,
  non_integrable_weight,
  hypothesis,
  not_converged,
  fatal,
  parse,
  io,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid argument";
    case ErrorKind::invalid_mesh: return "invalid mesh";
    case ErrorKind::non_integrable_weight: return "non-integrable weight";
    case ErrorKind::hypothesis: return "hypothesis violated";
    case ErrorKind::not_converged: return "not converged";
    case ErrorKind::fatal: return "fatal";
    case ErrorKind::parse: return "parse error";
    case ErrorKind::io: return "i/o error";
  }
  return "unknown";
}

/// Exception carrying a machine-checkable category next to the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace symmcomp
