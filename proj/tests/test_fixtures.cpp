#include <doctest.h>

#include <cmath>
#include <set>

#include "bridgekit/additive.hpp"
#include "bridgekit/errors.hpp"
#include "bridgekit/fixtures.hpp"
#include "bridgekit/measure.hpp"
#include "bridgekit/solvers.hpp"
#include "bridgekit/structure.hpp"
#include "helpers.hpp"

using namespace bridgekit;
using namespace testutil;

namespace {

// Flattens the sub-path w[from..to] into an index for a segment table.
std::int64_t segment_index(const std::vector<int>& path, int from, int to, int n) {
  std::int64_t idx = 0;
  for (int k = from; k <= to; ++k) idx = idx * n + path[k];
  return idx;
}

// Largest violation of f(w_s, w_t) == a(w[s..u]) + b(w[u..t]) over charged paths.
double premise_residual(const DensePathMeasure& R, const std::vector<double>& f,
                        const std::vector<double>& a, const std::vector<double>& b, int s,
                        int u, int t) {
  const int n = R.n();
  double worst = 0;
  for (std::int64_t i = 0; i < R.cells(); ++i) {
    if (R.w[i] <= 0) continue;
    const std::vector<int> path = R.unflat(i);
    const double lhs = f[path[s] * n + path[t]];
    const double rhs = a[segment_index(path, s, u, n)] + b[segment_index(path, u, t, n)];
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

}  // namespace

TEST_CASE("the entangled-endpoints fixture has the documented shape") {
  const CounterexampleFixture fx = entangled_endpoints_fixture();
  CHECK(fx.name == "entangled-endpoints");
  CHECK_FALSE(fx.expected.empty());
  CHECK(fx.R.mass() == doctest::Approx(1.0));

  // Four charged paths, and the endpoint pair marginal puts 1/4 on each of
  // the four pairs the construction names.
  int charged = 0;
  for (double v : fx.R.w) charged += v > 0;
  CHECK(charged == 4);
  const FiniteMeasure pair = marginal(fx.R, {fx.s_idx, fx.t_idx});
  const int n = fx.R.n();
  const int x1 = 0, x2 = 1, z1 = 6, z2 = 7;
  for (std::int64_t p : {x1 * n + z1, x1 * n + z2, x2 * n + z1, x2 * n + z2})
    CHECK(pair.w[p] == doctest::Approx(0.25));

  // The endpoint-sum premise holds exactly along every charged path.
  CHECK(premise_residual(fx.R, fx.f, fx.a, fx.b, fx.s_idx, fx.u_idx, fx.t_idx) == 0.0);
}

TEST_CASE("the entangled-endpoints measure is neither markov nor reciprocal") {
  const CounterexampleFixture fx = entangled_endpoints_fixture();
  const StructureReport mk = is_markov(fx.R);
  CHECK_FALSE(mk.holds);
  REQUIRE(mk.witness.has_value());
  // The shared mid state is where past and future become dependent.
  CHECK(mk.witness->time_indices == std::vector<int>{2});
  CHECK(fx.R.space.labels[mk.witness->states[0]] == "m");
  CHECK_FALSE(is_reciprocal(fx.R).holds);
}

TEST_CASE("the entangled-endpoints fixture defeats every endpoint split") {
  const CounterexampleFixture fx = entangled_endpoints_fixture();
  const SumDecomposeResult res =
      sum_decompose(fx.f, fx.R, fx.s_idx, fx.u_idx, fx.t_idx, fx.a, fx.b);
  REQUIRE_FALSE(res.feasible);
  REQUIRE(res.certificate.has_value());
  const int n = fx.R.n();
  // The four endpoint pairs form the violated rectangle: the charged value
  // f(x1,z1) = 1 sits against three zeros.
  CHECK(res.certificate->cells.size() == 4);
  double alt = 0;
  std::set<std::pair<int, int>> seen;
  for (std::size_t i = 0; i < res.certificate->cells.size(); ++i) {
    const auto [x, z] = res.certificate->cells[i];
    seen.insert({x, z});
    alt += (i % 2 == 0 ? 1.0 : -1.0) * fx.f[x * n + z];
  }
  CHECK(seen == std::set<std::pair<int, int>>{{0, 6}, {0, 7}, {1, 6}, {1, 7}});
  CHECK(std::abs(alt) == doctest::Approx(1.0));
  CHECK(res.certificate->lhs - res.certificate->rhs == doctest::Approx(alt));
}

TEST_CASE("the reducible-markov fixture is markov yet not irreducible") {
  const CounterexampleFixture fx = reducible_markov_fixture();
  CHECK(fx.name == "reducible-markov");
  CHECK(fx.R.mass() == doctest::Approx(1.0));
  CHECK(is_markov(fx.R).holds);
  const StructureReport irr = is_irreducible(fx.R, IrreducibilityMode::MarkovPairs);
  CHECK_FALSE(irr.holds);
  REQUIRE(irr.witness.has_value());
  // The second transition's support splits into two components.
  CHECK(irr.witness->time_indices == std::vector<int>{1, 2});
  CHECK_THROWS_AS(tensorization_check(fx.R, {0, 1, 2}), Error);

  CHECK(premise_residual(fx.R, fx.f, fx.a, fx.b, fx.s_idx, fx.u_idx, fx.t_idx) == 0.0);
  const SumDecomposeResult res =
      sum_decompose(fx.f, fx.R, fx.s_idx, fx.u_idx, fx.t_idx, fx.a, fx.b);
  REQUIRE_FALSE(res.feasible);
  REQUIRE(res.certificate.has_value());
  CHECK(res.certificate->lhs == doctest::Approx(5.0));
  CHECK(res.certificate->rhs == doctest::Approx(4.0));
}

TEST_CASE("fixtures are reachable by name") {
  const std::vector<std::string>& names = fixture_names();
  REQUIRE(names.size() == 2);
  for (const std::string& name : names) CHECK(fixture_by_name(name).name == name);
  CHECK_THROWS_AS(fixture_by_name("no-such-fixture"), Error);
}

TEST_CASE("random_chain is deterministic and structurally sound") {
  const MarkovPathMeasure a = random_chain(601, 3, 4, 0.3);
  const MarkovPathMeasure b = random_chain(601, 3, 4, 0.3);
  CHECK(a.init == b.init);
  CHECK(a.kernels == b.kernels);
  a.validate();
  const DensePathMeasure d = markov_to_dense(a);
  CHECK(is_markov(d).holds);
  CHECK(d.mass() == doctest::Approx(1.0));

  // Zero drop rate gives an everywhere-positive, hence irreducible, chain.
  const DensePathMeasure full = markov_to_dense(random_chain(602, 3, 4, 0.0));
  for (double v : full.w) CHECK(v > 0);
  CHECK(is_irreducible(full, IrreducibilityMode::MarkovPairs).holds);
}

TEST_CASE("random_dominated_chain stays inside the reference support") {
  for (std::uint64_t seed : {611u, 612u, 613u}) {
    const MarkovPathMeasure R = random_chain(seed, 3, 4, 0.25);
    const MarkovPathMeasure P = random_dominated_chain(seed + 1, R, 0.3);
    P.validate();
    const DensePathMeasure Rd = markov_to_dense(R), Pd = markov_to_dense(P);
    CHECK(abs_continuous(Pd.as_finite(), Rd.as_finite()));
    CHECK(is_markov(Pd).holds);
    CHECK(Pd.mass() == doctest::Approx(1.0));
  }
}

TEST_CASE("random_reciprocal draws genuinely reciprocal non-markov measures") {
  int non_markov = 0;
  for (std::uint64_t seed : {621u, 622u, 623u, 624u}) {
    const DensePathMeasure q = random_reciprocal(seed, 2, 4);
    CHECK(q.mass() == doctest::Approx(1.0));
    CHECK(is_reciprocal(q).holds);
    non_markov += !is_markov(q).holds;
  }
  // A generic endpoint mixture of bridges is not Markov.
  CHECK(non_markov >= 3);
}

TEST_CASE("random_positive_dense is a strictly positive probability") {
  const DensePathMeasure q = random_positive_dense(631, 2, 4);
  CHECK(q.mass() == doctest::Approx(1.0));
  for (double v : q.w) CHECK(v > 0);
  // Free of structure by construction: generically not reciprocal.
  CHECK_FALSE(is_reciprocal(q).holds);
}

TEST_CASE("planted split instances decompose and planted violations do not") {
  for (std::uint64_t seed : {641u, 642u}) {
    const SumInstance good = planted_split_instance(seed, 3, 4, 0, 2, 3);
    CHECK(good.splittable);
    CHECK(premise_residual(good.R, good.f, good.a, good.b, good.s_idx, good.u_idx,
                           good.t_idx) <= 1e-12);
    CHECK(sum_decompose(good.f, good.R, good.s_idx, good.u_idx, good.t_idx, good.a, good.b)
              .feasible);

    const SumInstance bad = planted_violation_instance(seed, 2, 2);
    CHECK_FALSE(bad.splittable);
    CHECK(premise_residual(bad.R, bad.f, bad.a, bad.b, bad.s_idx, bad.u_idx, bad.t_idx) <=
          1e-12);
    const SumDecomposeResult res =
        sum_decompose(bad.f, bad.R, bad.s_idx, bad.u_idx, bad.t_idx, bad.a, bad.b);
    REQUIRE_FALSE(res.feasible);
    REQUIRE(res.certificate.has_value());
    CHECK(std::abs(res.certificate->lhs - res.certificate->rhs) >= 0.1);
  }
}

TEST_CASE("random_feasible_problem builds solvable problems") {
  const ProblemSpec plain = random_feasible_problem(651, 3, 4, 2, false);
  plain.validate();
  CHECK(plain.constraints.size() == 2);
  CHECK_FALSE(plain.endpoint.has_value());
  CHECK(check_feasibility(plain).feasible);
  CHECK(solve_schrodinger(plain).converged);

  const ProblemSpec with_pair = random_feasible_problem(652, 2, 5, 1, true);
  with_pair.validate();
  REQUIRE(with_pair.endpoint.has_value());
  CHECK(check_feasibility(with_pair).feasible);
  CHECK(solve_brodinger(with_pair).converged);
}
