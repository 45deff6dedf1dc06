#include "openqs/errors.hpp"

namespace oqs {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::NotHermitian: return "NotHermitian";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::IllConditioned: return "IllConditioned";
    case ErrorKind::Overflow: return "Overflow";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::BadWeights: return "BadWeights";
    case ErrorKind::UnnormalizedState: return "UnnormalizedState";
    case ErrorKind::IncompleteBasis: return "IncompleteBasis";
    case ErrorKind::InvalidState: return "InvalidState";
    case ErrorKind::SingularState: return "SingularState";
    case ErrorKind::NotHermitianKernel: return "NotHermitianKernel";
    case ErrorKind::NotTracePreserving: return "NotTracePreserving";
    case ErrorKind::NotAGenerator: return "NotAGenerator";
    case ErrorKind::NotCompletelyPositive: return "NotCompletelyPositive";
    case ErrorKind::SingularSimilarity: return "SingularSimilarity";
    case ErrorKind::StepTooLarge: return "StepTooLarge";
    case ErrorKind::InconsistentSamples: return "InconsistentSamples";
    case ErrorKind::NotHermitianH: return "NotHermitianH";
    case ErrorKind::NotDiagonalFamily: return "NotDiagonalFamily";
    case ErrorKind::NotBalanced: return "NotBalanced";
    case ErrorKind::DegenerateFit: return "DegenerateFit";
    case ErrorKind::QuadratureFailure: return "QuadratureFailure";
    case ErrorKind::ConfigParse: return "ConfigParse";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

void raise(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace oqs
