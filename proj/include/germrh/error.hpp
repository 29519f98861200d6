#pragma once

#include <stdexcept>
#include <string>

namespace germrh {

enum class ErrorKind {
  InvalidInput,
  PrecisionExhausted,
  WindowExhausted,
  Trivial,
  ResidueFieldTooSmall,
  NonReduced,
  LevelOverstated,
  OracleRequired,
  IncompatibleRing,
  Unstable,
  Internal
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidInput: return "invalid input";
    case ErrorKind::PrecisionExhausted: return "increase precision";
    case ErrorKind::WindowExhausted: return "widen window";
    case ErrorKind::Trivial: return "trivial torsor";
    case ErrorKind::ResidueFieldTooSmall: return "residue field too small; increase s";
    case ErrorKind::NonReduced: return "special fibre not reduced";
    case ErrorKind::LevelOverstated: return "level n overstated";
    case ErrorKind::OracleRequired: return "use oracle";
    case ErrorKind::IncompatibleRing: return "ring parameters incompatible with table";
    case ErrorKind::Unstable: return "not determined at precision";
    case ErrorKind::Internal: return "internal consistency failure";
  }
  return "error";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), detail_(what) {}
  ErrorKind kind() const noexcept { return kind_; }
  /// The message without the kind prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace germrh
