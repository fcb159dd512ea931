#ifndef CLAD_ERROR_HPP
#define CLAD_ERROR_HPP

#include <stdexcept>
#include <string>

namespace clad {

enum class Errc {
  // usage / configuration
  InvalidConfig,
  // data errors
  ParseError,
  DimensionMismatch,
  DuplicateId,
  LengthMismatch,
  TooSmallForSplit,
  VersionMismatch,
  InsufficientClassData,
  DegenerateDevSet,
  SingleClass,
  EmptyBatch,
  ShapeMismatch,
  Io,
  // numerical failures
  NotPositiveDefinite,
  TooFewSamples,
  InsufficientSamples,
  InvalidShape,
  OutOfDomain,
  ZeroVector,
  ZeroVariance,
  SingularCovariance,
  NonFiniteLoss,
};

/// Coarse grouping used by the command-line front end to pick an exit code.
enum class ErrorCategory { Config, Data, Numerical };

const char* errc_name(Errc code) noexcept;
ErrorCategory errc_category(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return errc_category(code_); }

 private:
  Errc code_;
};

inline const char* errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::ParseError: return "ParseError";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::DuplicateId: return "DuplicateId";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::TooSmallForSplit: return "TooSmallForSplit";
    case Errc::VersionMismatch: return "VersionMismatch";
    case Errc::InsufficientClassData: return "InsufficientClassData";
    case Errc::DegenerateDevSet: return "DegenerateDevSet";
    case Errc::SingleClass: return "SingleClass";
    case Errc::EmptyBatch: return "EmptyBatch";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::Io: return "Io";
    case Errc::NotPositiveDefinite: return "NotPositiveDefinite";
    case Errc::TooFewSamples: return "TooFewSamples";
    case Errc::InsufficientSamples: return "InsufficientSamples";
    case Errc::InvalidShape: return "InvalidShape";
    case Errc::OutOfDomain: return "OutOfDomain";
    case Errc::ZeroVector: return "ZeroVector";
    case Errc::ZeroVariance: return "ZeroVariance";
    case Errc::SingularCovariance: return "SingularCovariance";
    case Errc::NonFiniteLoss: return "NonFiniteLoss";
  }
  return "Unknown";
}

inline ErrorCategory errc_category(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidConfig:
      return ErrorCategory::Config;
    case Errc::NotPositiveDefinite:
    case Errc::TooFewSamples:
    case Errc::InsufficientSamples:
    case Errc::InvalidShape:
    case Errc::OutOfDomain:
    case Errc::ZeroVector:
    case Errc::ZeroVariance:
    case Errc::SingularCovariance:
    case Errc::NonFiniteLoss:
      return ErrorCategory::Numerical;
    default:
      return ErrorCategory::Data;
  }
}

}  // namespace clad

#endif  // CLAD_ERROR_HPP
