#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "bridgekit/measure.hpp"
#include "bridgekit/structure.hpp"

namespace bridgekit {

// Values in [-inf, +finite).  -inf encodes a multiplicative zero and absorbs
// through every sum; arithmetic on these values never produces NaN.
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Sum with -inf absorption (never evaluates -inf minus -inf).
inline double absorbing_add(double x, double y) {
  if (x == kNegInf || y == kNegInf) return kNegInf;
  return x + y;
}

// ---------------------------------------------------------------------------
// Interval subsets of [0,1] generated by the grid: any finite union of grid
// intervals is a set of grid points plus a set of open inter-grid gaps.
// ---------------------------------------------------------------------------

struct GridIntervalSet {
  std::uint64_t point_mask = 0;  // bit k: grid point t_k
  std::uint64_t gap_mask = 0;    // bit k: open gap (t_k, t_{k+1})

  static GridIntervalSet closed(int k, int l);      // [t_k, t_l]
  static GridIntervalSet open(int k, int l);        // (t_k, t_l)
  static GridIntervalSet singleton(int k);          // {t_k}
  static GridIntervalSet half_open_left(int k, int l);   // (t_k, t_l]
  static GridIntervalSet half_open_right(int k, int l);  // [t_k, t_l)

  GridIntervalSet unite(const GridIntervalSet& o) const {
    return {point_mask | o.point_mask, gap_mask | o.gap_mask};
  }
  bool empty() const { return point_mask == 0 && gap_mask == 0; }
};

// ---------------------------------------------------------------------------
// Content: one value per path and per closed grid interval, extended to the
// full interval algebra.  The closed values of a single path must satisfy the
// splice rule for every s <= u <= v <= t:
//   value([u,v]) == -inf   forces  [s,v], [u,t], [s,t] all -inf,
//   value([u,v]) finite    forces  [s,t] == [s,v] + [u,t] - [u,v]
// (with -inf absorbing on the right).  Under that rule the closed values are
// exactly a sum of per-point and per-gap terms, which is how they are stored
// and how arbitrary interval sets are evaluated.  A gap whose closed pair
// interval is -inf only because an endpoint is -inf is indeterminate; it is
// stored as 0 (any finite value is consistent).
// ---------------------------------------------------------------------------

class Content {
 public:
  StateSpace space;
  TimeGrid grid;
  std::vector<double> points;  // [path * K + k]
  std::vector<double> gaps;    // [path * (K-1) + k]

  int K() const { return grid.size(); }
  int n() const { return space.size(); }
  std::int64_t paths() const;

  static int pair_count(int K) { return K * (K + 1) / 2; }
  static int pair_index(int k, int l, int K);  // 0 <= k <= l < K

  // Value on a closed interval [t_k, t_l] (sum of covered points and gaps).
  double closed_value(std::int64_t path, int k, int l) const;
  // Value on an arbitrary interval set, -inf absorbing.
  double eval(std::int64_t path, const GridIntervalSet& I) const;

  static Content from_points_gaps(const StateSpace& space, const TimeGrid& grid,
                                  std::vector<double> points, std::vector<double> gaps);
};

// Builds a Content from raw closed-interval values, one block of
// pair_count(K) values per path ordered by pair_index.  Checks the splice
// rule on every path and quadruple; IncompatibleValues with a witness quote.
Content content_from_closed(const StateSpace& space, const TimeGrid& grid,
                            const std::vector<double>& closed, double tol = 1e-10);

// ---------------------------------------------------------------------------
// Additive functional: a content whose interval values depend only on the
// path coordinates inside the interval's closure, measured against the
// support of a reference measure.
// ---------------------------------------------------------------------------

struct AdditiveFunctional {
  Content content;
  // Worst spread of a closed-interval value across reference-charged paths
  // agreeing on the interval (0 for exactly tabulated functionals).
  double measurability_residual = 0;
};

// Tabulates the measurability certificate of `c` against the support of R.
AdditiveFunctional make_additive_functional(Content c, const DensePathMeasure& R);

// For P, R both Markov with P a probability and P << R, builds the additive
// functional with closed values
//   A_path([t_k, t_l]) = log ( P_{k..l}(segment) / R_{k..l}(segment) ),
// which is -inf on P-null segments and on R-uncharged segments.  The
// resulting family satisfies the splice rule exactly and A([0,1]) is the
// pathwise log-density log dP/dR.
AdditiveFunctional extract_additive_functional(const DensePathMeasure& P,
                                               const DensePathMeasure& R,
                                               double markov_tol = kStructureTol);

// ---------------------------------------------------------------------------
// Splitting a two-endpoint function into endpoint terms.
//
// Given f over (X_s, X_t) pairs and path functions a (on coordinates s..u)
// and b (on u..t) with  f(w_s, w_t) = a + b  R-a.e. (checked; PremiseViolated
// otherwise), tries to produce f_s, f_t with  f(x,z) = f_s(x) + f_t(z)  on
// supp(R_{s,t}).  Pivot states y at u are tried by decreasing R_u mass (ties
// by label order), defining f_s(x) = E[a | X_s = x, X_u = y] and
// f_t(z) = E[b | X_u = y, X_t = z].  If no pivot validates, a spanning-forest
// assignment over the support graph is attempted; if that fails too, the
// result is infeasible and carries an alternating-cycle certificate, the
// rectangle (x,z),(x,z'),(x',z'),(x',z) whenever a four-cell violation
// exists.
// ---------------------------------------------------------------------------

struct CycleCertificate {
  // Support cells listed along a cycle that alternates between moving within
  // a row and within a column, so consecutive cells (cyclically) share a row
  // or a column.  lhs sums f over even positions, rhs over odd positions;
  // a valid certificate has every cell charged and lhs != rhs.  For the
  // rectangle (x,z),(x,z'),(x',z'),(x',z) these are f(x,z)+f(x',z') and
  // f(x,z')+f(x',z).
  std::vector<std::pair<int, int>> cells;
  double lhs = 0;
  double rhs = 0;
};

struct SumDecomposeResult {
  bool feasible = false;
  std::vector<double> f_s, f_t;  // over states, meaningful off the support only as 0
  int pivot = -1;                // pivot state at u; -1 when the forest fallback succeeded
  std::optional<CycleCertificate> certificate;
};

SumDecomposeResult sum_decompose(const std::vector<double>& f, const DensePathMeasure& R,
                                 int s_idx, int u_idx, int t_idx,
                                 const std::vector<double>& a, const std::vector<double>& b,
                                 double tol = 1e-10);

// ---------------------------------------------------------------------------
// Localization: rebuilds an additive functional so that it vanishes on every
// interval avoiding the constrained indices T while keeping the same total
// A([0,1]) on reference-charged paths.  The result's interval values depend
// only on the constrained coordinates covered by the interval: all gap terms
// vanish and only point terms at indices in T remain.  Requires R Markov
// with pairwise-tensorized support (NotIrreducible); ReconstructionFailed
// when the input functional does not localize (it was not extracted from a
// solution constrained exactly at T).
// ---------------------------------------------------------------------------

AdditiveFunctional localize_functional(const AdditiveFunctional& A, const DensePathMeasure& R,
                                       const std::vector<int>& t_indices, double tol = 1e-9);

// ---------------------------------------------------------------------------
// Potentials: one vector per constrained time (over states, -inf marking
// zero cells), plus an optional endpoint coupling term over (X_0, X_{K-1}).
// They determine a path measure as the normalization of
//   R * exp( eta(w_0, w_{K-1}) + sum_i f_i(w_{t_i}) ).
// ---------------------------------------------------------------------------

struct Potentials {
  std::vector<int> time_indices;        // ascending
  std::vector<std::vector<double>> f;   // per index, over states
  std::optional<std::vector<double>> eta;  // n*n row-major over endpoint pairs
};

DensePathMeasure apply_potentials(const DensePathMeasure& R, const Potentials& pot);

// Worst relative cell error of P against the measure defined by (R, pot);
// -inf/zero mismatches count as 1.
double potentials_density_residual(const DensePathMeasure& P, const DensePathMeasure& R,
                                   const Potentials& pot);

// Extracts potentials reproducing dP/dR (up to normalization) for a measure
// whose log-density is a sum of single-time terms at T (endpoint=false), or
// of single-time terms plus an endpoint pair term (endpoint=true).
// Gauge: every f_i except the last is centered to zero mean under the
// corresponding P marginal; the last f_i (or eta) absorbs the rest.
// endpoint=false runs the localization pipeline on the extracted functional;
// endpoint=true eliminates the pair dependence by pivoting on the
// tensorized support of (X_0, X_T, X_{K-1}).
Potentials decompose_to_potentials(const DensePathMeasure& P, const DensePathMeasure& R,
                                   const std::vector<int>& t_indices, bool endpoint,
                                   double tol = 1e-9);

// ---------------------------------------------------------------------------
// Measurability of the density change through a statistic: dP/dR is a
// function of the listed coordinates iff it is constant on coordinate
// classes iff P and R share their conditional laws given those coordinates,
// with common class value the marginal density ratio.  All three
// characterizations are computed and reported.
// ---------------------------------------------------------------------------

struct MeasurabilityReport {
  bool measurable = false;        // density constant per class (to tol, relative)
  double worst_spread = 0;        // worst relative in-class spread
  bool conditionals_match = false;  // P(.|class) == R(.|class) for P-charged classes
  double worst_conditional_tv = 0;
  double worst_ratio_error = 0;   // class value vs marginal-ratio value
};

MeasurabilityReport density_measurability_check(const DensePathMeasure& P,
                                                const DensePathMeasure& R,
                                                const std::vector<int>& coords,
                                                double tol = 1e-10);

}  // namespace bridgekit
