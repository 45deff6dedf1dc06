#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace oqs {

/// Failure categories surfaced by the library. The CLI maps them onto exit codes.
enum class ErrorKind {
  NotHermitian,
  NoConvergence,
  IllConditioned,
  Overflow,
  DimensionMismatch,
  InvalidArgument,
  BadWeights,
  UnnormalizedState,
  IncompleteBasis,
  InvalidState,
  SingularState,
  NotHermitianKernel,
  NotTracePreserving,
  NotAGenerator,
  NotCompletelyPositive,
  SingularSimilarity,
  StepTooLarge,
  InconsistentSamples,
  NotHermitianH,
  NotDiagonalFamily,
  NotBalanced,
  DegenerateFit,
  QuadratureFailure,
  ConfigParse,
  IoError,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void raise(ErrorKind kind, const std::string& message);

}  // namespace oqs
