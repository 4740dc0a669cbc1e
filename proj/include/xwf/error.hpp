#pragma once

#include <stdexcept>
#include <string>

namespace xwf {

enum class ErrorKind {
  validation,   // bad inputs, broken invariants, schema violations
  parse,        // malformed file content
  join,         // subject present in only one input file
  convergence,  // iterative fit did not converge
  degenerate,   // data admits no meaningful estimate (e.g. zero variance)
  io,           // filesystem failures
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::validation: return "validation";
    case ErrorKind::parse: return "parse";
    case ErrorKind::join: return "join";
    case ErrorKind::convergence: return "convergence";
    case ErrorKind::degenerate: return "degenerate";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

}  // namespace xwf
