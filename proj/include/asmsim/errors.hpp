#pragma once

#include <stdexcept>
#include <string>

namespace asmsim {

// Failure categories; the CLI maps these onto process exit codes.
enum class ErrorKind {
  InvalidInput,  // bad arguments, malformed files, schema violations
  Geometry,      // degenerate or non-watertight input geometry
  Detection,     // perception pipeline could not produce a pose
  Planning,      // no grasp path / no motion plan
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// Exit-code contract: 0 success, 2 input/geometry, 3 planning, 4 detection.
inline int exitCodeFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Planning:
      return 3;
    case ErrorKind::Detection:
      return 4;
    default:
      return 2;
  }
}

}  // namespace asmsim
