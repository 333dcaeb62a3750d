#pragma once

#include <stdexcept>
#include <string>

namespace robinflux {

// Error taxonomy shared by the whole library.  The kind maps 1:1 onto the
// C API status codes, so anything thrown below the C boundary must be one
// of these (or a std::exception, which the boundary reports as internal).
enum class ErrorKind {
  invalid_argument,  // bad input: geometry params, config, out-of-domain points
  io,                // filesystem / serialization trouble
  solver,            // CG did not converge or the system is not SPD
  check,             // a theorem-level check evaluated and failed
  internal,          // broken invariant inside the library
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error invalid_argument(const std::string& msg) {
  return Error(ErrorKind::invalid_argument, msg);
}
inline Error io_error(const std::string& msg) {
  return Error(ErrorKind::io, msg);
}
inline Error solver_error(const std::string& msg) {
  return Error(ErrorKind::solver, msg);
}
inline Error check_error(const std::string& msg) {
  return Error(ErrorKind::check, msg);
}
inline Error internal_error(const std::string& msg) {
  return Error(ErrorKind::internal, msg);
}

}  // namespace robinflux
