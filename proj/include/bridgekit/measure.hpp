#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bridgekit/errors.hpp"
#include "bridgekit/rational.hpp"

namespace bridgekit {

// Dense materializations refuse to allocate more than this many cells
// unless the caller raises the limit (CLI: --size-guard / BRIDGEKIT_SIZE_GUARD).
inline constexpr std::int64_t kDefaultSizeGuard = 1 << 20;

// Weights this small in *ingested* data are treated as exact zeros, so that
// support questions are decided structurally.  Internal arithmetic never
// snaps.
inline constexpr double kIngestZeroTol = 1e-15;

inline constexpr double kMassTol = 1e-12;

struct StateSpace {
  std::vector<std::string> labels;

  int size() const { return static_cast<int>(labels.size()); }
  void validate() const;  // nonempty, labels distinct and nonempty
  bool operator==(const StateSpace&) const = default;
};

// Product of two state spaces, used by the path-folding machinery.
// Labels are "a|b".
StateSpace paired_space(const StateSpace& first, const StateSpace& second);

struct TimeGrid {
  std::vector<Rat> times;  // strictly increasing, first == 0, last == 1

  int size() const { return static_cast<int>(times.size()); }
  void validate() const;
  bool operator==(const TimeGrid&) const = default;
};

TimeGrid uniform_grid(int K);

// ---------------------------------------------------------------------------
// Tensors of nonnegative weights.
//
// All measures are stored as flat row-major arrays: coordinate 0 is the
// slowest-varying index.  A FiniteMeasure lives on an explicit product of
// state spaces; a DensePathMeasure is the special case of K copies of one
// space, tagged with the time grid.
// ---------------------------------------------------------------------------

struct FiniteMeasure {
  std::vector<StateSpace> axes;
  std::vector<double> w;

  int dim() const { return static_cast<int>(axes.size()); }
  std::vector<int> shape() const;
  std::int64_t cells() const { return static_cast<std::int64_t>(w.size()); }
  double mass() const;
  void validate() const;  // shape product == w.size(), all weights >= 0, finite

  std::int64_t flat(const std::vector<int>& multi) const;
  std::vector<int> unflat(std::int64_t flat_index) const;
};

// Number of cells in a tensor with the given shape; fails with SizeGuard if
// it exceeds `guard` (or overflows).
std::int64_t checked_cells(const std::vector<int>& shape, std::int64_t guard);

struct DensePathMeasure {
  StateSpace space;
  TimeGrid grid;
  std::vector<double> w;  // n^K weights, coordinate 0 slowest
  bool normalized = false;

  int n() const { return space.size(); }
  int K() const { return grid.size(); }
  std::int64_t cells() const { return static_cast<std::int64_t>(w.size()); }
  double mass() const;
  void validate() const;  // shape consistency; normalized => |mass - 1| <= 1e-12

  FiniteMeasure as_finite() const;
  std::int64_t flat(const std::vector<int>& path) const;
  std::vector<int> unflat(std::int64_t flat_index) const;
};

// Makes a dense path measure over `space`/`grid` from raw weights and tags it
// normalized iff its mass is within 1e-12 of one.  Used by generators and
// internal ops (no zero-snapping here; ingestion from JSON snaps).
DensePathMeasure make_dense(const StateSpace& space, const TimeGrid& grid,
                            std::vector<double> w);

struct MarkovPathMeasure {
  StateSpace space;
  TimeGrid grid;
  std::vector<double> init;                  // n entries, may be unnormalized
  std::vector<std::vector<double>> kernels;  // K-1 row-major n*n matrices

  int n() const { return space.size(); }
  int K() const { return grid.size(); }
  // Rows are row-stochastic (sum 1 within 1e-12) or identically zero, and
  // every state reachable with positive mass has a stochastic row at every
  // following step.
  void validate() const;
};

DensePathMeasure markov_to_dense(const MarkovPathMeasure& m,
                                 std::int64_t size_guard = kDefaultSizeGuard);

// ---------------------------------------------------------------------------
// Core measure operations
// ---------------------------------------------------------------------------

// Marginal onto the listed coordinates (kept in the given order, which must
// be duplicate-free).  BadCoords on out-of-range or repeated indices.
FiniteMeasure marginal(const FiniteMeasure& q, const std::vector<int>& coords);
FiniteMeasure marginal(const DensePathMeasure& q, const std::vector<int>& coords);

struct Disintegration {
  std::vector<int> coords;     // the conditioning coordinates
  FiniteMeasure pushforward;   // law of the selected coordinates
  // One normalized conditional per charged value of the conditioning
  // coordinates, keyed by its flat index in `pushforward`.  Each conditional
  // lives on the full product space and is supported on its slice, so
  // q == sum_b pushforward(b) * slice(b) cell by cell.
  std::map<std::int64_t, FiniteMeasure> slices;
};

Disintegration disintegrate(const FiniteMeasure& q, const std::vector<int>& coords);

// H(p | r) = sum p log(p/r), natural log, 0 log 0 = 0; +infinity as soon as
// p charges a cell r does not.  p must be a probability (NotProbability);
// r may be unnormalized, so the value can be negative.
double relative_entropy(const FiniteMeasure& p, const FiniteMeasure& r);
double relative_entropy(const DensePathMeasure& p, const DensePathMeasure& r);

// Support inclusion: every cell p charges, q charges.
bool abs_continuous(const FiniteMeasure& p, const FiniteMeasure& q);
bool abs_continuous(const DensePathMeasure& p, const DensePathMeasure& q);

// ---------------------------------------------------------------------------
// Conditioning diagnostics.
//
// check_conditioning verifies, exhaustively on the finite support, the two
// facts the rest of the library leans on:
//
//  (a) p << q  holds iff the pushforward along the selected coordinates and
//      every conditional slice over a charged value are absolutely
//      continuous.  Both sides are computed independently and compared.
//
//  (b) writing Y for the selected coordinates and X for the rest: whenever
//      q is equivalent to q_X (x) q_Y (product of its own marginals), every
//      conditional q_X^{Y=y} over y in supp(q_Y) has exactly the support of
//      q_X.  Violations of that conclusion are listed per y; they can only
//      be nonempty when the equivalence premise fails.
// ---------------------------------------------------------------------------

struct ConditioningReport {
  bool p_abs_continuous = false;    // direct check of p << q
  bool factor_abs_continuous = false;  // pushforward + all slices check
  bool equivalence_holds = false;   // the two verdicts above agree (always expected)

  // Cells where p > 0 but q == 0 (multi-indices), empty iff p << q.
  std::vector<std::vector<int>> ac_witnesses;

  bool product_equivalent = false;  // q ~ q_X (x) q_Y
  struct SliceViolation {
    std::int64_t y_flat;            // flat index into the Y marginal
    std::vector<int> y_multi;
    std::int64_t x_flat;            // offending X cell
    std::vector<int> x_multi;
    bool missing_in_slice;          // q_X charges x but q_X^{Y=y} does not
  };
  std::vector<SliceViolation> slice_violations;

  bool clean() const { return equivalence_holds && slice_violations.empty(); }
};

ConditioningReport check_conditioning(const FiniteMeasure& p, const FiniteMeasure& q,
                                      const std::vector<int>& phi_coords);

// ---------------------------------------------------------------------------
// Entropy superadditivity gap for a joint probability pi on a two-axis
// product against reference measures r1, r2 on the factors:
//   lhs = H(pi | r1 (x) r2),  rhs = H(pi_1 | r1) + H(pi_2 | r2).
// The gap lhs - rhs is >= 0, and == 0 iff pi is the product of its marginals.
// pi must be dominated by r1 (x) r2 (NotAbsolutelyContinuous otherwise), so
// both sides are finite.
// ---------------------------------------------------------------------------

struct SuperadditivityReport {
  double lhs = 0;
  double rhs = 0;
  double gap = 0;
};

SuperadditivityReport superadditivity_check(const FiniteMeasure& pi,
                                            const FiniteMeasure& r1,
                                            const FiniteMeasure& r2);

// ---------------------------------------------------------------------------
// Shared helpers (used across modules; deterministic everywhere)
// ---------------------------------------------------------------------------

// Total-variation distance between two nonnegative vectors normalized to
// probabilities: 0.5 * sum |p/|p| - q/|q||.  Zero-mass inputs fail.
double tv_distance(const std::vector<double>& p, const std::vector<double>& q);

// sum_i w[i] * v[i] with the convention 0 * (-inf) = 0.
double weighted_sum(const std::vector<double>& w, const std::vector<double>& v);

}  // namespace bridgekit
