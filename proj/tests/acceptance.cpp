// Acceptance suite: one line per criterion on stdout (PASS/FAIL), details on
// stderr, exit code = number of failed criteria.  argv[1] must be the path to
// the command-line binary, which is driven through real subprocesses.
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bridgekit/additive.hpp"
#include "bridgekit/errors.hpp"
#include "bridgekit/fixtures.hpp"
#include "bridgekit/io.hpp"
#include "bridgekit/measure.hpp"
#include "bridgekit/solvers.hpp"
#include "bridgekit/structure.hpp"

namespace fs = std::filesystem;
using namespace bridgekit;

namespace {

struct Ctx {
  std::string cli;
  fs::path dir;
};

int run_cli(const Ctx& ctx, const std::string& args) {
  const std::string cmd = ctx.cli + " " + args + " >/dev/null 2>/dev/null";
  const int rc = std::system(cmd.c_str());
  if (rc == -1) return -1;
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -2;
}

// ---------------------------------------------------------------------------
// Shared validators
// ---------------------------------------------------------------------------

// A cycle certificate is valid when every cell is charged by the endpoint
// pair marginal, consecutive cells (cyclically) share a row or a column, the
// reported sums match a recomputation from f, and the sums differ.
bool valid_certificate(const nlohmann::json& cert, const CounterexampleFixture& fx,
                       std::ostream& err) {
  const int n = fx.R.n();
  std::map<std::string, int> index;
  for (int i = 0; i < n; ++i) index[fx.R.space.labels[i]] = i;
  const FiniteMeasure pair = marginal(fx.R, {fx.s_idx, fx.t_idx});
  const auto& cells = cert.at("cells");
  if (cells.size() < 4 || cells.size() % 2 != 0) {
    err << "certificate has " << cells.size() << " cells\n";
    return false;
  }
  double lhs = 0, rhs = 0;
  std::vector<std::pair<int, int>> cs;
  for (const auto& c : cells)
    cs.emplace_back(index.at(c[0].get<std::string>()), index.at(c[1].get<std::string>()));
  for (std::size_t i = 0; i < cs.size(); ++i) {
    const auto [x, z] = cs[i];
    if (!(pair.w[x * n + z] > 0)) {
      err << "certificate cell (" << x << "," << z << ") is not charged\n";
      return false;
    }
    const auto [x2, z2] = cs[(i + 1) % cs.size()];
    if (x != x2 && z != z2) {
      err << "certificate cells " << i << " and " << i + 1 << " share no row/column\n";
      return false;
    }
    (i % 2 == 0 ? lhs : rhs) += fx.f[x * n + z];
  }
  if (std::abs(lhs - cert.at("lhs").get<double>()) > 1e-12 ||
      std::abs(rhs - cert.at("rhs").get<double>()) > 1e-12) {
    err << "certificate sums do not match a recomputation from f\n";
    return false;
  }
  if (!(std::abs(lhs - rhs) > 1e-10)) {
    err << "certificate sums do not actually differ\n";
    return false;
  }
  return true;
}

bool quadruple_identity_holds(const Content& c, std::int64_t path, double tol) {
  const int K = c.K();
  for (int s = 0; s < K; ++s)
    for (int u = s; u < K; ++u)
      for (int v = u; v < K; ++v)
        for (int t = v; t < K; ++t) {
          const double uv = c.closed_value(path, u, v);
          const double st = c.closed_value(path, s, t);
          const double sv = c.closed_value(path, s, v);
          const double ut = c.closed_value(path, u, t);
          if (uv == kNegInf) {
            if (st != kNegInf || sv != kNegInf || ut != kNegInf) return false;
          } else if (sv == kNegInf || ut == kNegInf) {
            if (st != kNegInf) return false;
          } else if (st == kNegInf) {
            return false;
          } else if (std::abs(st + uv - sv - ut) > tol) {
            return false;
          }
        }
  return true;
}

StateSpace numbered_space(int n) {
  std::vector<std::string> labels;
  for (int i = 0; i < n; ++i) labels.push_back("s" + std::to_string(i));
  return StateSpace{std::move(labels)};
}

std::vector<double> random_probability(Rng& rng, int n, double zero_rate = 0) {
  std::vector<double> v(n);
  double total = 0;
  for (double& x : v) {
    x = (rng.uniform() < zero_rate) ? 0.0 : 0.05 + rng.uniform();
    total += x;
  }
  if (total <= 0) {
    v[rng.index(n)] = 1.0;
    total = 1.0;
  }
  for (double& x : v) x /= total;
  return v;
}

// ---------------------------------------------------------------------------
// Instance families shared between criteria (6 reuses 4's and 5's)
// ---------------------------------------------------------------------------

ProblemSpec single_time_instance(int i) {
  const int n = 2 + (i % 2), K = 3 + (i % 3), c = 1 + (i % 3);
  return random_feasible_problem(40000 + static_cast<std::uint64_t>(i), n, K, c, false);
}

ProblemSpec endpoint_instance(int i) {
  const int n = 2 + (i % 2), c = i % 3;  // grid of five times admits folding at 1/2
  return random_feasible_problem(50000 + static_cast<std::uint64_t>(i), n, 5, c, true);
}

// Reciprocal measure with genuine structural zeros: a positive chain whose
// kernels lose whole columns (so some states are never charged at some
// times), reweighted by a positive endpoint factor.  Single-time support
// holes keep triple-irreducibility intact.
DensePathMeasure holey_reciprocal(std::uint64_t seed, int n, int K) {
  Rng rng(seed * 31 + 7);
  MarkovPathMeasure chain = random_chain(seed, n, K, 0.0);
  const int holes = 1 + static_cast<int>(seed % 2);
  for (int h = 0; h < holes; ++h) {
    const int step = static_cast<int>(rng.index(K - 1));
    const int dead = static_cast<int>(rng.index(n));
    for (int row = 0; row < n; ++row) {
      chain.kernels[step][row * n + dead] = 0.0;
      double total = 0;
      for (int col = 0; col < n; ++col) total += chain.kernels[step][row * n + col];
      for (int col = 0; col < n; ++col) chain.kernels[step][row * n + col] /= total;
    }
  }
  chain.validate();
  DensePathMeasure d = markov_to_dense(chain);
  std::vector<double> g(static_cast<std::size_t>(n) * n);
  for (double& v : g) v = 0.2 + rng.uniform();
  double total = 0;
  for (std::int64_t p = 0; p < d.cells(); ++p) {
    const std::vector<int> path = d.unflat(p);
    d.w[p] *= g[path.front() * n + path.back()];
    total += d.w[p];
  }
  for (double& v : d.w) v /= total;
  d.normalized = true;
  return d;
}

// ---------------------------------------------------------------------------
// Criteria
// ---------------------------------------------------------------------------

bool criterion_counterexamples(Ctx& ctx, std::ostream& err) {
  bool ok = true;
  for (const std::string& name : fixture_names()) {
    const auto start = std::chrono::steady_clock::now();
    const CounterexampleFixture fx = fixture_by_name(name);
    const fs::path report = ctx.dir / (name + "-decompose.json");
    const int rc =
        run_cli(ctx, "decompose --fixture-name " + name + " --output " + report.string());
    if (rc != 1) {
      err << name << ": decompose exit code " << rc << ", want 1\n";
      ok = false;
      continue;
    }
    const nlohmann::json j = read_json_file(report.string());
    if (j.at("feasible").get<bool>()) {
      err << name << ": decompose reported feasible\n";
      ok = false;
      continue;
    }
    if (!valid_certificate(j.at("certificate"), fx, err)) {
      err << name << ": invalid certificate\n";
      ok = false;
    }

    // Structure facts, via the command line as well.
    const fs::path mfile = ctx.dir / (name + "-measure.json");
    write_json_file(mfile.string(), dense_to_json(fx.R));
    if (name == "reducible-markov") {
      if (run_cli(ctx, "check --input " + mfile.string() + " --property markov") != 0) {
        err << name << ": expected the measure to pass the markov check\n";
        ok = false;
      }
      if (run_cli(ctx,
                  "check --input " + mfile.string() + " --property irreducible-markov") != 1) {
        err << name << ": expected the irreducibility check to fail\n";
        ok = false;
      }
    } else {
      if (run_cli(ctx, "check --input " + mfile.string() + " --property reciprocal") != 1) {
        err << name << ": expected the reciprocal check to fail\n";
        ok = false;
      }
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs >= 1.0) {
      err << name << ": took " << secs << "s, limit 1s\n";
      ok = false;
    }
  }
  return ok;
}

bool criterion_extraction(Ctx&, std::ostream& err) {
  for (int i = 0; i < 50; ++i) {
    const std::uint64_t seed = 20000 + static_cast<std::uint64_t>(i);
    const int n = 2 + (i % 2), K = 3 + (i % 3);
    const MarkovPathMeasure Rm = random_chain(seed, n, K, 0.2);
    const MarkovPathMeasure Pm = random_dominated_chain(seed + 999, Rm, 0.3);
    const DensePathMeasure R = markov_to_dense(Rm), P = markov_to_dense(Pm);
    const AdditiveFunctional A = extract_additive_functional(P, R);
    DensePathMeasure Q = R;
    for (std::int64_t p = 0; p < R.cells(); ++p) {
      if (R.w[p] > 0 && !quadruple_identity_holds(A.content, p, 1e-10)) {
        err << "instance " << i << ": quadruple identity fails on path " << p << "\n";
        return false;
      }
      const double a = A.content.closed_value(p, 0, K - 1);
      Q.w[p] = (R.w[p] <= 0 || a == kNegInf) ? 0.0 : R.w[p] * std::exp(a);
    }
    Q = make_dense(Q.space, Q.grid, Q.w);
    const StructureReport mk = is_markov(Q, 1e-9);
    if (!mk.holds) {
      err << "instance " << i << ": reweighted reference is not markov (residual "
          << mk.worst_residual << ")\n";
      return false;
    }
  }
  return true;
}

bool criterion_sum_decomposition(Ctx&, std::ostream& err) {
  const int shapes[3][3] = {{0, 1, 3}, {0, 2, 3}, {1, 2, 3}};
  for (int i = 0; i < 50; ++i) {
    const std::uint64_t seed = 30000 + static_cast<std::uint64_t>(i);
    const int n = 2 + (i % 2);
    const auto& sh = shapes[i % 3];
    const SumInstance inst = planted_split_instance(seed, n, 4, sh[0], sh[1], sh[2]);
    const SumDecomposeResult res =
        sum_decompose(inst.f, inst.R, inst.s_idx, inst.u_idx, inst.t_idx, inst.a, inst.b);
    if (!res.feasible) {
      err << "planted split " << i << ": reported infeasible\n";
      return false;
    }
    const FiniteMeasure pair = marginal(inst.R, {inst.s_idx, inst.t_idx});
    for (int x = 0; x < n; ++x)
      for (int z = 0; z < n; ++z)
        if (pair.w[x * n + z] > 0 &&
            std::abs(res.f_s[x] + res.f_t[z] - inst.f[x * n + z]) > 1e-10) {
          err << "planted split " << i << ": reconstruction error at (" << x << "," << z
              << ")\n";
          return false;
        }
  }
  for (int i = 0; i < 50; ++i) {
    const std::uint64_t seed = 31000 + static_cast<std::uint64_t>(i);
    const SumInstance inst = planted_violation_instance(seed, 2 + (i % 2), 2 + ((i / 2) % 2));
    const SumDecomposeResult res =
        sum_decompose(inst.f, inst.R, inst.s_idx, inst.u_idx, inst.t_idx, inst.a, inst.b);
    if (res.feasible) {
      err << "planted violation " << i << ": reported feasible\n";
      return false;
    }
    if (!res.certificate || res.certificate->cells.size() < 4 ||
        !(std::abs(res.certificate->lhs - res.certificate->rhs) > 1e-10)) {
      err << "planted violation " << i << ": missing or degenerate certificate\n";
      return false;
    }
  }
  return true;
}

bool criterion_single_time_solver(Ctx&, std::ostream& err) {
  for (int i = 0; i < 30; ++i) {
    const ProblemSpec s = single_time_instance(i);
    const Solution sol = solve_schrodinger(s);
    if (!sol.converged) {
      err << "instance " << i << ": did not converge\n";
      return false;
    }
    const StructureReport mk = is_markov(sol.P, 1e-9);
    if (!mk.holds) {
      err << "instance " << i << ": solution is not markov (residual " << mk.worst_residual
          << ")\n";
      return false;
    }
    std::vector<int> T;
    for (const MarginalConstraint& c : s.constraints) T.push_back(c.time_index);
    const DensePathMeasure Rd = s.dense_reference();
    const MeasurabilityReport meas = density_measurability_check(sol.P, Rd, T);
    if (!meas.measurable) {
      err << "instance " << i << ": density is not measurable over the constraint times\n";
      return false;
    }
    const Potentials rec = decompose_to_potentials(sol.P, Rd, T, false);
    const double resid = potentials_density_residual(sol.P, Rd, rec);
    if (!(resid <= 1e-9)) {
      err << "instance " << i << ": potential reconstruction residual " << resid << "\n";
      return false;
    }
  }
  return true;
}

bool criterion_endpoint_solver(Ctx&, std::ostream& err) {
  for (int i = 0; i < 20; ++i) {
    const ProblemSpec s = endpoint_instance(i);
    const Solution direct = solve_brodinger(s);
    if (!direct.converged) {
      err << "instance " << i << ": direct solve did not converge\n";
      return false;
    }
    const StructureReport rec = is_reciprocal(direct.P, 1e-9);
    if (!rec.holds) {
      err << "instance " << i << ": solution is not reciprocal (residual "
          << rec.worst_residual << ")\n";
      return false;
    }
    const Solution folded = solve_brodinger_via_folding(s, Rat{1, 2});
    if (!folded.converged) {
      err << "instance " << i << ": folding route did not converge\n";
      return false;
    }
    const double tv = tv_distance(direct.P.w, folded.P.w);
    if (!(tv <= 1e-8)) {
      err << "instance " << i << ": folding route differs by TV " << tv << "\n";
      return false;
    }
    if (!direct.potentials.eta.has_value()) {
      err << "instance " << i << ": solution carries no endpoint pair term\n";
      return false;
    }
    const double resid =
        potentials_density_residual(direct.P, s.dense_reference(), direct.potentials);
    if (!(resid <= 1e-9)) {
      err << "instance " << i << ": potential reconstruction residual " << resid << "\n";
      return false;
    }
  }
  return true;
}

bool criterion_oracle_agreement(Ctx&, std::ostream& err) {
  for (int i = 0; i < 30; ++i) {
    const ProblemSpec s = single_time_instance(i);
    const Solution sol = solve_schrodinger(s);
    const OracleResult ora = oracle_minimize(s);
    if (!sol.converged || !ora.converged) {
      err << "single-time instance " << i << ": a route failed to converge\n";
      return false;
    }
    if (!(std::abs(sol.objective - ora.objective) <= 1e-8) ||
        !(tv_distance(sol.P.w, ora.P.w) <= 1e-6)) {
      err << "single-time instance " << i << ": oracle disagrees (gap "
          << std::abs(sol.objective - ora.objective) << ", tv "
          << tv_distance(sol.P.w, ora.P.w) << ")\n";
      return false;
    }
  }
  for (int i = 0; i < 20; ++i) {
    const ProblemSpec s = endpoint_instance(i);
    const Solution sol = solve_brodinger(s);
    const OracleResult ora = oracle_minimize(s);
    if (!sol.converged || !ora.converged) {
      err << "endpoint instance " << i << ": a route failed to converge\n";
      return false;
    }
    if (!(std::abs(sol.objective - ora.objective) <= 1e-8) ||
        !(tv_distance(sol.P.w, ora.P.w) <= 1e-6)) {
      err << "endpoint instance " << i << ": oracle disagrees (gap "
          << std::abs(sol.objective - ora.objective) << ", tv "
          << tv_distance(sol.P.w, ora.P.w) << ")\n";
      return false;
    }
  }
  return true;
}

bool criterion_reciprocity_folding(Ctx&, std::ostream& err) {
  int reciprocal_seen = 0, non_reciprocal_seen = 0;
  for (int i = 0; i < 30; ++i) {
    const bool bridge_mix = i < 15;
    const std::uint64_t seed = 70000 + static_cast<std::uint64_t>(i);
    const int n = 2 + (i % 2);
    DensePathMeasure q;
    if (bridge_mix) {
      const int K = (i % 3 == 0) ? 3 : 5;
      q = random_reciprocal(seed, n, K);
    } else {
      // A positive structureless draw; over five times it is generically
      // far from reciprocal.
      q = random_positive_dense(seed, n, 5);
    }
    const bool direct = is_reciprocal(q, 1e-10).holds;
    bool all_folds_markov = true;
    const std::vector<Rat> lambdas = admissible_lambdas(q.grid);
    if (lambdas.empty()) {
      err << "instance " << i << ": grid admits no fold point, family misconfigured\n";
      return false;
    }
    for (const Rat& lam : lambdas) {
      const FoldParameters fp = fold_parameters(q.space, q.grid, lam);
      all_folds_markov = all_folds_markov && is_markov(fold(q, fp), 1e-10).holds;
    }
    if (direct != all_folds_markov) {
      err << "instance " << i << ": is_reciprocal=" << direct
          << " but folded markov=" << all_folds_markov << "\n";
      return false;
    }
    (direct ? reciprocal_seen : non_reciprocal_seen)++;
  }
  if (reciprocal_seen < 15 || non_reciprocal_seen < 10) {
    err << "family imbalance: " << reciprocal_seen << " reciprocal, " << non_reciprocal_seen
        << " non-reciprocal\n";
    return false;
  }
  return true;
}

bool criterion_conditioning(Ctx&, std::ostream& err) {
  // 100 instances satisfying the hypotheses: product-structured references
  // with an absolutely continuous numerator.
  for (int i = 0; i < 100; ++i) {
    Rng rng(80000 + static_cast<std::uint64_t>(i));
    const int a = 2 + static_cast<int>(rng.index(2));
    const int b = 2 + static_cast<int>(rng.index(2));
    const std::vector<double> u = random_probability(rng, a, i % 4 ? 0.0 : 0.3);
    const std::vector<double> v = random_probability(rng, b, i % 3 ? 0.0 : 0.3);
    FiniteMeasure q;
    q.axes = {numbered_space(a), numbered_space(b)};
    q.w.resize(static_cast<std::size_t>(a) * b);
    for (int x = 0; x < a; ++x)
      for (int y = 0; y < b; ++y) q.w[x * b + y] = u[x] * v[y];
    FiniteMeasure p = q;
    double total = 0;
    for (double& wv : p.w) {
      wv *= 0.2 + rng.uniform();
      total += wv;
    }
    for (double& wv : p.w) wv /= total;
    const ConditioningReport rep = check_conditioning(p, q, {0});
    if (!rep.clean() || !rep.p_abs_continuous || !rep.product_equivalent) {
      err << "clean instance " << i << ": reported violations\n";
      return false;
    }
  }
  // 20 constructed violations: support holes (conditioning breaks) and
  // escaping numerators (absolute continuity breaks), with checkable
  // witnesses.
  for (int i = 0; i < 20; ++i) {
    Rng rng(81000 + static_cast<std::uint64_t>(i));
    const int a = 2 + static_cast<int>(rng.index(2));
    const int b = 2 + static_cast<int>(rng.index(2));
    FiniteMeasure q;
    q.axes = {numbered_space(a), numbered_space(b)};
    q.w.assign(static_cast<std::size_t>(a) * b, 0.0);
    for (int x = 0; x < a; ++x)
      for (int y = 0; y < b; ++y) q.w[x * b + y] = (0.2 + rng.uniform()) / (a * b);
    if (i % 2 == 0) {
      // Punch one support hole: the conditional slice at y0 loses a state
      // the pushforward still charges.
      const int x0 = static_cast<int>(rng.index(a)), y0 = static_cast<int>(rng.index(b));
      q.w[x0 * b + y0] = 0.0;
      FiniteMeasure p = q;
      double total = 0;
      for (double wv : p.w) total += wv;
      for (double& wv : p.w) wv /= total;
      const ConditioningReport rep = check_conditioning(p, q, {0});
      if (rep.clean() || rep.slice_violations.empty()) {
        err << "hole instance " << i << ": violation not reported\n";
        return false;
      }
      // The witness names the conditioning value (the statistic side) and
      // the complement cell missing from that slice.
      bool found = false;
      for (const auto& sv : rep.slice_violations)
        found = found || (sv.y_multi == std::vector<int>{x0} &&
                          sv.x_multi == std::vector<int>{y0} && sv.missing_in_slice);
      if (!found) {
        err << "hole instance " << i << ": witness does not name the hole\n";
        return false;
      }
      if (!rep.equivalence_holds) {
        err << "hole instance " << i << ": the two routes disagree\n";
        return false;
      }
    } else {
      // The numerator escapes the reference support.
      const int x0 = static_cast<int>(rng.index(a)), y0 = static_cast<int>(rng.index(b));
      q.w[x0 * b + y0] = 0.0;
      FiniteMeasure p = q;
      p.w[x0 * b + y0] = 0.5;
      double total = 0;
      for (double wv : p.w) total += wv;
      for (double& wv : p.w) wv /= total;
      const ConditioningReport rep = check_conditioning(p, q, {0});
      if (rep.p_abs_continuous || rep.ac_witnesses.empty()) {
        err << "escape instance " << i << ": missing absolute-continuity witness\n";
        return false;
      }
      bool found = false;
      for (const auto& wit : rep.ac_witnesses)
        found = found || wit == std::vector<int>{x0, y0};
      if (!found) {
        err << "escape instance " << i << ": witness does not name the escaping cell\n";
        return false;
      }
      if (!rep.equivalence_holds) {
        err << "escape instance " << i << ": the two routes disagree\n";
        return false;
      }
    }
  }
  return true;
}

bool criterion_superadditivity(Ctx&, std::ostream& err) {
  for (int i = 0; i < 100; ++i) {
    Rng rng(90000 + static_cast<std::uint64_t>(i));
    const int a = 2 + static_cast<int>(rng.index(2));
    const int b = 2 + static_cast<int>(rng.index(2));
    FiniteMeasure r1, r2;
    r1.axes = {numbered_space(a)};
    r2.axes = {numbered_space(b)};
    r1.w.resize(a);
    r2.w.resize(b);
    for (double& v : r1.w) v = 0.3 + 1.5 * rng.uniform();
    for (double& v : r2.w) v = 0.3 + 1.5 * rng.uniform();
    FiniteMeasure pi;
    pi.axes = {r1.axes[0], r2.axes[0]};
    pi.w.resize(static_cast<std::size_t>(a) * b);
    const bool product = i < 30;
    if (product) {
      const std::vector<double> p1 = random_probability(rng, a);
      const std::vector<double> p2 = random_probability(rng, b);
      for (int x = 0; x < a; ++x)
        for (int y = 0; y < b; ++y) pi.w[x * b + y] = p1[x] * p2[y];
    } else {
      double total = 0;
      for (double& v : pi.w) {
        v = 0.05 + rng.uniform();
        total += v;
      }
      for (double& v : pi.w) v /= total;
    }
    const SuperadditivityReport rep = superadditivity_check(pi, r1, r2);
    if (!(rep.gap >= -1e-10)) {
      err << "instance " << i << ": negative gap " << rep.gap << "\n";
      return false;
    }
    if (product && !(rep.gap <= 1e-10)) {
      err << "product instance " << i << ": gap " << rep.gap << " should vanish\n";
      return false;
    }
  }
  return true;
}

bool criterion_tensorization(Ctx&, std::ostream& err) {
  for (int i = 0; i < 20; ++i) {
    const std::uint64_t seed = 95000 + static_cast<std::uint64_t>(i);
    const int n = 2 + (i % 2), K = 4 + (i % 2);
    const DensePathMeasure q = holey_reciprocal(seed, n, K);
    if (!is_reciprocal(q).holds ||
        !is_irreducible(q, IrreducibilityMode::ReciprocalTriples).holds) {
      err << "instance " << i << ": construction is not reciprocal-irreducible\n";
      return false;
    }
    // All ascending index subsets of size 2..4.
    for (int mask = 0; mask < (1 << K); ++mask) {
      std::vector<int> S;
      for (int t = 0; t < K; ++t)
        if (mask >> t & 1) S.push_back(t);
      if (S.size() < 2 || S.size() > 4) continue;
      if (!tensorization_check(q, S)) {
        err << "instance " << i << ": tensorization fails on a subset of size " << S.size()
            << "\n";
        return false;
      }
      // Independent support comparison through marginals: the tuple support
      // must be exactly the product of the single-time supports.
      const FiniteMeasure joint = marginal(q, S);
      std::vector<FiniteMeasure> singles;
      for (int t : S) singles.push_back(marginal(q, {t}));
      for (std::int64_t cell = 0; cell < joint.cells(); ++cell) {
        const std::vector<int> multi = joint.unflat(cell);
        bool product = true;
        for (std::size_t k = 0; k < S.size(); ++k)
          product = product && singles[k].w[multi[k]] > 0;
        if (product != (joint.w[cell] > 0)) {
          err << "instance " << i << ": support mismatch in the marginal route\n";
          return false;
        }
      }
    }
  }
  return true;
}

struct Criterion {
  int id;
  std::string name;
  double limit_seconds;  // <= 0: no limit
  std::function<bool(Ctx&, std::ostream&)> body;
};

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: bridgekit_acceptance <path-to-cli>\n";
    return 64;
  }
  Ctx ctx;
  ctx.cli = argv[1];
  ctx.dir = fs::temp_directory_path() /
            ("bridgekit_acceptance_" + std::to_string(static_cast<long>(::getpid())));
  fs::create_directories(ctx.dir);

  const std::vector<Criterion> criteria = {
      {1, "counterexample-reproduction", 2.0, criterion_counterexamples},
      {2, "additive-extraction-equivalence", 30.0, criterion_extraction},
      {3, "endpoint-sum-decomposition", 30.0, criterion_sum_decomposition},
      {4, "single-time-solver-structure", 60.0, criterion_single_time_solver},
      {5, "endpoint-solver-structure", 120.0, criterion_endpoint_solver},
      {6, "oracle-agreement", 0.0, criterion_oracle_agreement},
      {7, "reciprocity-folding-equivalence", 0.0, criterion_reciprocity_folding},
      {8, "conditioning-audit", 10.0, criterion_conditioning},
      {9, "superadditivity-gap", 0.0, criterion_superadditivity},
      {10, "support-tensorization", 0.0, criterion_tensorization},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    std::ostringstream detail;
    bool ok = false;
    const auto start = std::chrono::steady_clock::now();
    try {
      ok = c.body(ctx, detail);
    } catch (const Error& e) {
      detail << "error (" << error_kind_name(e.kind) << "): " << e.what() << "\n";
    } catch (const std::exception& e) {
      detail << "unexpected exception: " << e.what() << "\n";
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (ok && c.limit_seconds > 0 && secs > c.limit_seconds) {
      detail << "runtime " << secs << "s exceeds the " << c.limit_seconds << "s limit\n";
      ok = false;
    }
    std::printf("%s %2d %s (%.2fs)\n", ok ? "PASS" : "FAIL", c.id, c.name.c_str(), secs);
    std::fflush(stdout);
    if (!ok) {
      ++failures;
      std::cerr << "criterion " << c.id << " (" << c.name << "):\n" << detail.str();
    }
  }

  std::error_code ec;
  fs::remove_all(ctx.dir, ec);
  return failures;
}
