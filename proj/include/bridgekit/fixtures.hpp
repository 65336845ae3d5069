#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "bridgekit/measure.hpp"
#include "bridgekit/solvers.hpp"

namespace bridgekit {

// Deterministic RNG for seeded instances.  Doubles are built from the top 53
// bits of the engine output so streams are identical across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int index(int n) { return std::min(n - 1, static_cast<int>(uniform() * n)); }

 private:
  std::mt19937_64 eng_;
};

// ---------------------------------------------------------------------------
// Canonical counterexamples: ready-made inputs for the pair-splitting
// routine whose split provably fails, each with the reference measure, the
// pair function, and the two summands that satisfy the premise exactly.
// ---------------------------------------------------------------------------

struct CounterexampleFixture {
  std::string name;
  DensePathMeasure R;
  std::vector<double> f;  // n*n over (X_s, X_t)
  int s_idx = 0, u_idx = 0, t_idx = 0;
  std::vector<double> a;  // over coordinates s..u
  std::vector<double> b;  // over coordinates u..t
  std::string expected;
};

// Four equally likely paths over four times whose endpoints are entangled
// through a single shared corridor state: the pair function sums along the
// legs yet admits no endpoint split.  The measure is neither Markov nor
// reciprocal.
CounterexampleFixture entangled_endpoints_fixture();

// A genuinely Markov three-time chain whose transition support is reducible
// (one mid state reaches only part of the final states): both candidate
// pivots are starved of data and the pair function fails on a four-cell
// cycle.
CounterexampleFixture reducible_markov_fixture();

const std::vector<std::string>& fixture_names();
CounterexampleFixture fixture_by_name(const std::string& name);

// ---------------------------------------------------------------------------
// Seeded generators.
// ---------------------------------------------------------------------------

// Random Markov chain: strictly positive initial law; kernel rows carry
// structural zeros at the given rate but always keep at least one positive
// entry, so the chain never dead-ends.
MarkovPathMeasure random_chain(std::uint64_t seed, int n, int K,
                               double structural_zero_rate = 0.0);

// Random chain whose support is nested inside the reference chain's support
// (rows drop reference-positive entries at the given rate, keeping at least
// one), giving a pathwise absolutely continuous Markov pair.
MarkovPathMeasure random_dominated_chain(std::uint64_t seed, const MarkovPathMeasure& ref,
                                         double drop_rate = 0.3);

// Strictly positive reciprocal measure: a positive Markov chain reweighted
// by a positive function of the endpoint pair, normalized.
DensePathMeasure random_reciprocal(std::uint64_t seed, int n, int K);

// Strictly positive i.i.d.-weight measure; generically neither Markov nor
// reciprocal.
DensePathMeasure random_positive_dense(std::uint64_t seed, int n, int K);

// ---------------------------------------------------------------------------
// Planted pair-splitting instances.
// ---------------------------------------------------------------------------

struct SumInstance {
  DensePathMeasure R;
  std::vector<double> f, a, b;
  int s_idx = 0, u_idx = 0, t_idx = 0;
  bool splittable = true;
};

// The pair function is an exact sum of endpoint terms; the two summands
// shuffle a mid-state term between themselves, so recovery is nontrivial.
SumInstance planted_split_instance(std::uint64_t seed, int n, int K, int s_idx, int u_idx,
                                   int t_idx);

// Three-time instance with one corridor state per endpoint pair; the pair
// function breaks a four-cell cycle by at least 0.15 while the premise still
// holds exactly, so the split must be refused with a certificate.
SumInstance planted_violation_instance(std::uint64_t seed, int nx, int nz);

// ---------------------------------------------------------------------------
// Random feasible problems: targets are read off a measure of the exact
// product-potential form over the reference, so a minimizer exists.
// ---------------------------------------------------------------------------

ProblemSpec random_feasible_problem(std::uint64_t seed, int n, int K, int num_constraints,
                                    bool with_endpoint, double structural_zero_rate = 0.0);

}  // namespace bridgekit
