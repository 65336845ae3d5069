#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bridgekit/additive.hpp"
#include "bridgekit/measure.hpp"
#include "bridgekit/rational.hpp"

namespace bridgekit {

// ---------------------------------------------------------------------------
// Problem specification: a reference path measure (Markov form or dense),
// single-time marginal targets, and an optional joint target for the
// endpoint pair (X_0, X_{K-1}).
// ---------------------------------------------------------------------------

struct MarginalConstraint {
  int time_index = 0;
  std::vector<double> target;  // probability vector over states
};

struct ProblemSpec {
  std::optional<MarkovPathMeasure> markov_ref;
  std::optional<DensePathMeasure> dense_ref_measure;
  std::vector<MarginalConstraint> constraints;      // strictly ascending indices
  std::optional<std::vector<double>> endpoint;      // n*n row-major joint target

  const StateSpace& space() const;
  const TimeGrid& grid() const;
  // Exactly one reference present, targets are probability vectors, indices
  // ascending, and the endpoint joint's own marginals agree with any
  // constraints placed at the first or last time (within 1e-12).
  void validate() const;
  DensePathMeasure dense_reference(std::int64_t size_guard = kDefaultSizeGuard) const;
};

// ---------------------------------------------------------------------------
// Feasibility: supports only.  Every target state must be chargeable by the
// reference, and consecutive constrained marginals must be joinable through
// the support of the reference pair marginal (checked by max-flow).
// ---------------------------------------------------------------------------

struct FeasibilityReport {
  bool feasible = true;
  std::string detail;  // witness description when infeasible
};

FeasibilityReport check_feasibility(const ProblemSpec& spec,
                                    std::int64_t size_guard = kDefaultSizeGuard);

// ---------------------------------------------------------------------------
// Iterative proportional fitting in the log domain.  One cycle visits every
// constraint block once (single times in ascending order, the endpoint pair
// last); a block update rescales the current measure so that block's
// marginal matches its target exactly.  The recorded residual of a cycle is
// the largest pre-update total-variation gap seen in it.  The dual objective
// log Z(f) - sum_i <target_i, f_i> decreases with every block update; the
// primal relative entropy H(P_k | R) need not be monotone and is recorded
// for diagnostics only.
// ---------------------------------------------------------------------------

struct SolveOptions {
  double tol = 1e-10;   // residual threshold, total variation
  int max_iter = 10000;  // full cycles
  std::int64_t size_guard = kDefaultSizeGuard;
  bool trace = false;   // CLI verbosity only; diagnostics are always recorded
};

struct CycleRecord {
  int cycle = 0;
  double residual = 0;
  double objective = 0;       // H(P_cycle | R)
  double dual_objective = 0;  // log Z(f) - sum <target, f>
};

struct Solution {
  DensePathMeasure P;
  Potentials potentials;  // reproduce P as normalize(R * exp(...))
  int iterations = 0;     // full cycles run
  double residual = 0;
  bool converged = false;
  double objective = 0;   // H(P | R)
  std::vector<CycleRecord> diagnostics;
};

// Single-time constraints only (the problem must carry no endpoint target).
Solution solve_schrodinger(const ProblemSpec& spec, const SolveOptions& opts = {});

// Single-time constraints plus the endpoint pair target (required).
Solution solve_brodinger(const ProblemSpec& spec, const SolveOptions& opts = {});

// Solves the endpoint-pair problem by folding the reference at an admissible
// interior grid time lambda: folded paths track the pair
// (X_{lambda*tau}, X_{1-(1-lambda)*tau}), the endpoint target becomes a plain
// marginal constraint at folded time 0, and every single-time constraint
// becomes a one-leg constraint on the paired state.  The folded problem is
// solved as a standard multi-marginal problem and the result is unfolded;
// potentials translate back exactly to single-time terms and an endpoint
// pair term.
Solution solve_brodinger_via_folding(const ProblemSpec& spec, const Rat& lambda,
                                     const SolveOptions& opts = {});

// ---------------------------------------------------------------------------
// Reference oracle: an intentionally separate, direct implementation used to
// cross-check the solvers.  It fits raw tensors multiplicatively, visits the
// constraints in the opposite order (endpoint first, then single times
// descending), keeps no potentials, and runs at a tighter tolerance on
// small instances only.
// ---------------------------------------------------------------------------

struct OracleOptions {
  double tol = 1e-12;
  int max_iter = 20000;
  std::int64_t size_guard = 4096;
};

struct OracleResult {
  DensePathMeasure P;
  int iterations = 0;
  double residual = 0;
  bool converged = false;
  double objective = 0;
};

OracleResult oracle_minimize(const ProblemSpec& spec, const OracleOptions& opts = {});

// Relative entropy of a path measure against the reference, natural log.
double path_objective(const DensePathMeasure& P, const DensePathMeasure& R);

}  // namespace bridgekit
