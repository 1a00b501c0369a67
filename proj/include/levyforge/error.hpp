#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace levyforge {

enum class ErrorKind {
  parse,        // malformed input file content
  ordering,     // timestamps not strictly increasing
  domain,       // value outside the mathematical domain of an operation
  shape,        // vector/matrix dimensions disagree
  size,         // too few observations or too many steps
  numerical,    // factorization, quadrature or overflow failure
  training,     // loss became non-finite during training
  search,       // optimizer could not evaluate any candidate
  calibration,  // calibration diverged
  contract,     // API misuse (stale cache, wrong call order)
  unsupported,  // parameterization or method deliberately not implemented
  io,           // file could not be opened or written
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Single exception type for the library; `kind()` lets callers branch
/// without a class hierarchy.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + message),
        kind_(kind),
        detail_(message) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// The message without the "<kind> error: " prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) throw Error(kind, message);
}

inline std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::parse: return "parse";
    case ErrorKind::ordering: return "ordering";
    case ErrorKind::domain: return "domain";
    case ErrorKind::shape: return "shape";
    case ErrorKind::size: return "size";
    case ErrorKind::numerical: return "numerical";
    case ErrorKind::training: return "training";
    case ErrorKind::search: return "search";
    case ErrorKind::calibration: return "calibration";
    case ErrorKind::contract: return "contract";
    case ErrorKind::unsupported: return "unsupported";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

}  // namespace levyforge
