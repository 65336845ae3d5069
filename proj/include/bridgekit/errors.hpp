#pragma once

#include <stdexcept>
#include <string>

namespace bridgekit {

// Every failure mode the library reports deliberately.  Callers that care
// about the class of failure switch on `kind`; the message carries the
// human-readable detail (witness states, offending indices, ...).
enum class ErrorKind {
  InvalidArgument,   // malformed type invariant (labels, grid, kernels, ...)
  ShapeMismatch,     // two tensors that should share a shape do not
  BadCoords,         // coordinate list out of range or duplicated
  NotProbability,    // a measure that must be a probability is not
  SizeGuard,         // dense materialization would exceed the cell budget
  ParseError,        // malformed JSON input
  NotAbsolutelyContinuous,
  NotConditionallyIndependent,
  NotMarkov,
  NotIrreducible,
  IncompatibleValues,    // closed-interval values violate the splice rule
  PremiseViolated,       // a checked algebraic premise fails on the support
  ReconstructionFailed,  // extracted potentials do not rebuild the density
  InfeasibleProblem,
  BadFoldGrid,           // requested fold parameter does not align the grid
  InconsistentSupport,   // unfolding hit mass outside the folded image
  PreconditionFailed,    // a stated structural precondition does not hold
};

const char* error_kind_name(ErrorKind k);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + what),
        kind(kind) {}
  ErrorKind kind;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace bridgekit
