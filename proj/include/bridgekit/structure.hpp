#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bridgekit/measure.hpp"

namespace bridgekit {

// Default tolerance on total-variation residuals in conditional-independence
// checks.  Exact tensorizations of positive-mass structures come out around
// 1e-16; anything below this is treated as holding.
inline constexpr double kStructureTol = 1e-9;

enum class StructureProperty {
  Markov,
  Reciprocal,
  IrreducibleMarkovPairs,
  IrreducibleReciprocalTriples,
};

const char* structure_property_name(StructureProperty p);

enum class IrreducibilityMode { MarkovPairs, ReciprocalTriples };

struct StructureWitness {
  std::vector<int> time_indices;  // grid indices pinning the worst slice
  std::vector<int> states;        // conditioning states at those indices
  std::string note;               // human-readable description
};

struct StructureReport {
  StructureProperty property;
  bool holds = false;
  // TV residual of the worst conditional against the product of its
  // marginals; for support (irreducibility) checks, 0 when the supports
  // match and 1 when a cell is missing.
  double worst_residual = 0;
  std::optional<StructureWitness> witness;  // worst violation; absent when the check holds
};

// Past independent of future given the present, checked at every interior
// grid index and every conditioning state the measure charges.  Unnormalized
// input is normalized internally (conditioning is scale-invariant).
StructureReport is_markov(const DensePathMeasure& q, double tol = kStructureTol);

// Window interior independent of window exterior given the window endpoints,
// checked at every grid index pair k < l and every charged endpoint pair.
StructureReport is_reciprocal(const DensePathMeasure& q, double tol = kStructureTol);

// Support tensorization: under MarkovPairs, supp(R_{s,t}) must equal
// supp(R_s) x supp(R_t) for every pair s < t; under ReciprocalTriples the
// same over triples s < u < t.  Exact, no tolerance.
StructureReport is_irreducible(const DensePathMeasure& q, IrreducibilityMode mode);

// dR_{s,t} / d(R_s (x) R_t) tabulated cellwise; zero off the product of the
// single-time supports.  Positive everywhere on supp(R_s) x supp(R_t) iff
// the pair (s,t) satisfies the pair irreducibility.
struct TransitionDensity {
  int s_index = 0;
  int t_index = 0;
  int n = 0;
  std::vector<double> values;  // n*n row-major
};

TransitionDensity transition_density(const DensePathMeasure& q, int s_idx, int t_idx);

// ---------------------------------------------------------------------------
// Factorization of a conditionally independent density change.
//
// Coordinates are partitioned into blocks A, B, C.  Given p << r with
// A independent of B given C under r, the density dp/dr is factored as
//   dp/dr = alpha(A, C) * beta(B, C) * gamma(C)
// where gamma is the C-marginal density ratio and alpha, beta are the
// conditional ratios  (d p_{AC} / d r_{AC}) / gamma  and symmetrically.
// The factorization is verified to reconstruct dp/dr on supp(r); failure
// means p itself is not conditionally independent and raises
// NotConditionallyIndependent with the offending cell.
// ---------------------------------------------------------------------------

struct CondFactorization {
  std::vector<int> a_coords, b_coords, c_coords;
  // Tabulations over the marginal tensors of (A,C), (B,C) and C, in the
  // coordinate order a_coords+c_coords etc., flat row-major.
  std::vector<double> alpha;
  std::vector<double> beta;
  std::vector<double> gamma;
};

CondFactorization conditional_factorize(const FiniteMeasure& p, const FiniteMeasure& r,
                                        const std::vector<int>& a_coords,
                                        const std::vector<int>& b_coords,
                                        const std::vector<int>& c_coords,
                                        double tol = kStructureTol);

// ---------------------------------------------------------------------------
// Path folding.
//
// For a grid point lambda strictly inside (0,1), the folded process runs the
// original path from both ends toward lambda:  Z_tau = (X_{lambda*tau},
// X_{1-(1-lambda)*tau}).  The fold is admissible when the two legs induce
// the same set of folded times while covering every original grid index; the
// folded grid is that common set.  Admissibility is decided with exact
// rational arithmetic.
// ---------------------------------------------------------------------------

struct FoldParameters {
  Rat lambda;
  StateSpace original_space;
  TimeGrid original_grid;
  TimeGrid folded_grid;
  std::vector<int> fwd;  // per folded index: original index on the forward leg
  std::vector<int> bwd;  // per folded index: original index on the backward leg
};

// BadFoldGrid when lambda is not an interior grid point or the legs do not
// align / do not cover every original index.
FoldParameters fold_parameters(const StateSpace& space, const TimeGrid& grid, const Rat& lambda);

// All admissible lambdas of a grid, ascending.
std::vector<Rat> admissible_lambdas(const TimeGrid& grid);

// Pushforward of q under the folding map: a path measure on the paired state
// space over the folded grid.
DensePathMeasure fold(const DensePathMeasure& q, const FoldParameters& fp,
                      std::int64_t size_guard = kDefaultSizeGuard);

// Inverse: reads each original coordinate off the leg that carries it.
// InconsistentSupport if positive mass sits on a folded path that assigns
// two different states to the same original index (i.e. outside the image
// of the folding map).
DensePathMeasure unfold(const DensePathMeasure& folded, const FoldParameters& fp,
                        std::int64_t size_guard = kDefaultSizeGuard);

// ---------------------------------------------------------------------------
// k-fold support tensorization: supp(R_{indices}) == product of the
// per-index supports, exactly.  Requires the reciprocal-triples
// irreducibility and reciprocity of R (PreconditionFailed otherwise).
// ---------------------------------------------------------------------------

bool tensorization_check(const DensePathMeasure& q, const std::vector<int>& indices,
                         double structure_tol = kStructureTol);

}  // namespace bridgekit
