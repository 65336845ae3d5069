// bridgekit command-line front end.
//
// Subcommands:
//   solve      entropy minimization under marginal (and endpoint) constraints
//   check      structural property checks on a path measure
//   decompose  pair-function splitting / potential extraction
//   fixture    write a named or seeded example instance
//   oracle     independent minimizer + cross-check against solve
//
// Exit codes: 0 success / property holds, 1 infeasible / property fails,
// 2 input error.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "bridgekit/additive.hpp"
#include "bridgekit/errors.hpp"
#include "bridgekit/fixtures.hpp"
#include "bridgekit/io.hpp"
#include "bridgekit/measure.hpp"
#include "bridgekit/solvers.hpp"
#include "bridgekit/structure.hpp"

namespace bk = bridgekit;
using nlohmann::json;

namespace {

int exit_code_for(bk::ErrorKind kind) {
  switch (kind) {
    case bk::ErrorKind::InvalidArgument:
    case bk::ErrorKind::ShapeMismatch:
    case bk::ErrorKind::BadCoords:
    case bk::ErrorKind::NotProbability:
    case bk::ErrorKind::SizeGuard:
    case bk::ErrorKind::ParseError:
    case bk::ErrorKind::BadFoldGrid:
      return 2;
    default:
      return 1;  // mathematical failure: infeasible / premise or check fails
  }
}

const json& member(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key))
    bk::fail(bk::ErrorKind::ParseError, std::string("missing key '") + key + "'");
  return j.at(key);
}

void emit(const json& report, const std::string& output) {
  if (output.empty())
    std::cout << bk::dump_json(report) << "\n";
  else
    bk::write_json_file(output, report);
}

// Flag > environment variable > library default.
std::int64_t resolve_size_guard(const std::optional<std::int64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("BRIDGEKIT_SIZE_GUARD")) {
    try {
      const long long v = std::stoll(env);
      if (v > 0) return static_cast<std::int64_t>(v);
    } catch (const std::exception&) {
      // fall through to the default; a malformed env var is not fatal
    }
    std::cerr << "warning: ignoring malformed BRIDGEKIT_SIZE_GUARD='" << env << "'\n";
  }
  return bk::kDefaultSizeGuard;
}

// Accepts "p/q" or a decimal such as "0.5".
bk::Rat parse_rational(const std::string& s) {
  const auto slash = s.find('/');
  try {
    if (slash != std::string::npos) {
      const long long num = std::stoll(s.substr(0, slash));
      const long long den = std::stoll(s.substr(slash + 1));
      return bk::Rat(num, den);
    }
    return bk::Rat::from_double(std::stod(s));
  } catch (const bk::Error&) {
    throw;
  } catch (const std::exception&) {
    bk::fail(bk::ErrorKind::ParseError, "cannot parse rational '" + s + "'");
  }
}

json solve_summary(bool converged, int iterations, double residual, double objective) {
  json j;
  j["converged"] = converged;
  j["iterations"] = iterations;
  j["residual"] = residual;
  j["objective"] = objective;
  return j;
}

struct CommonOpts {
  std::string input;
  std::string output;
  double tol = 1e-10;
  int max_iter = 10000;
  std::uint64_t seed = 1;
  std::optional<std::int64_t> size_guard;
  std::string property;
  std::string fixture_name;
  std::string lambda;
  bool trace = false;
};

int cmd_solve(const CommonOpts& o) {
  const std::int64_t guard = resolve_size_guard(o.size_guard);
  const bk::ProblemSpec spec = bk::problem_from_json(bk::read_json_file(o.input));
  bk::SolveOptions opts;
  opts.tol = o.tol;
  opts.max_iter = o.max_iter;
  opts.size_guard = guard;
  opts.trace = o.trace;
  bk::Solution sol;
  if (!o.lambda.empty())
    sol = bk::solve_brodinger_via_folding(spec, parse_rational(o.lambda), opts);
  else if (spec.endpoint)
    sol = bk::solve_brodinger(spec, opts);
  else
    sol = bk::solve_schrodinger(spec, opts);
  if (o.trace)
    for (const auto& d : sol.diagnostics)
      std::cerr << "cycle " << d.cycle << "  residual " << d.residual << "  objective "
                << d.objective << "  dual " << d.dual_objective << "\n";
  emit(bk::solution_to_json(sol), o.output);
  return sol.converged ? 0 : 1;
}

int cmd_check(const CommonOpts& o) {
  const std::int64_t guard = resolve_size_guard(o.size_guard);
  const bk::DensePathMeasure q = bk::measure_from_json(bk::read_json_file(o.input), guard);
  bk::StructureReport rep;
  if (o.property == "markov")
    rep = bk::is_markov(q, o.tol);
  else if (o.property == "reciprocal")
    rep = bk::is_reciprocal(q, o.tol);
  else if (o.property == "irreducible" || o.property == "irreducible-markov")
    rep = bk::is_irreducible(q, bk::IrreducibilityMode::MarkovPairs);
  else
    rep = bk::is_irreducible(q, bk::IrreducibilityMode::ReciprocalTriples);
  emit(bk::structure_report_to_json(rep, q.space), o.output);
  return rep.holds ? 0 : 1;
}

int run_sum_decompose(const bk::SumInstance& inst, const std::string& name,
                      const CommonOpts& o) {
  const bk::SumDecomposeResult res = bk::sum_decompose(inst.f, inst.R, inst.s_idx, inst.u_idx,
                                                       inst.t_idx, inst.a, inst.b, o.tol);
  json rep = bk::sum_result_to_json(res, inst.R.space);
  if (!name.empty()) rep["instance"] = name;
  emit(rep, o.output);
  return res.feasible ? 0 : 1;
}

int cmd_decompose(const CommonOpts& o) {
  if (!o.fixture_name.empty()) {
    const bk::CounterexampleFixture fx = bk::fixture_by_name(o.fixture_name);
    bk::SumInstance inst;
    inst.R = fx.R;
    inst.f = fx.f;
    inst.a = fx.a;
    inst.b = fx.b;
    inst.s_idx = fx.s_idx;
    inst.u_idx = fx.u_idx;
    inst.t_idx = fx.t_idx;
    return run_sum_decompose(inst, fx.name, o);
  }
  const std::int64_t guard = resolve_size_guard(o.size_guard);
  const json j = bk::read_json_file(o.input);
  if (j.contains("a") && j.contains("b"))
    return run_sum_decompose(bk::sum_instance_from_json(j), j.value("name", std::string()), o);

  // Potential extraction: {"left": P, "reference": R, "time_indices": [...],
  // "endpoint": bool}.
  const bk::DensePathMeasure P = bk::measure_from_json(member(j, "left"), guard);
  const bk::DensePathMeasure R = bk::measure_from_json(member(j, "reference"), guard);
  std::vector<int> t_indices;
  for (const auto& e : member(j, "time_indices")) t_indices.push_back(e.get<int>());
  const bool endpoint = j.value("endpoint", false);
  const bk::Potentials pot = bk::decompose_to_potentials(P, R, t_indices, endpoint, o.tol);
  json rep;
  rep["potentials"] = bk::potentials_to_json(pot, P.space);
  rep["residual"] = bk::potentials_density_residual(P, R, pot);
  emit(rep, o.output);
  return 0;
}

int cmd_fixture(const CommonOpts& o) {
  if (o.fixture_name.empty()) {
    json rep;
    json names = json::array();
    for (const auto& n : bk::fixture_names()) names.push_back(n);
    for (const char* n : {"planted-split", "planted-violation", "random-chain",
                          "random-problem", "random-problem-endpoint"})
      names.push_back(n);
    rep["fixtures"] = names;
    emit(rep, o.output);
    return 0;
  }
  const std::string& name = o.fixture_name;
  json rep;
  if (name == "planted-split")
    rep = bk::sum_instance_to_json(bk::planted_split_instance(o.seed, 3, 4, 0, 2, 3));
  else if (name == "planted-violation")
    rep = bk::sum_instance_to_json(bk::planted_violation_instance(o.seed, 2, 2));
  else if (name == "random-chain")
    rep = bk::markov_to_json(bk::random_chain(o.seed, 3, 4, 0.2));
  else if (name == "random-problem")
    rep = bk::problem_to_json(bk::random_feasible_problem(o.seed, 3, 4, 2, false));
  else if (name == "random-problem-endpoint")
    // K = 5 keeps 1/2 an admissible fold point for the --lambda route
    rep = bk::problem_to_json(bk::random_feasible_problem(o.seed, 3, 5, 1, true));
  else
    rep = bk::fixture_to_json(bk::fixture_by_name(name));
  emit(rep, o.output);
  return 0;
}

int cmd_oracle(const CommonOpts& o) {
  const bk::ProblemSpec spec = bk::problem_from_json(bk::read_json_file(o.input));
  bk::OracleOptions oopts;
  if (o.size_guard) oopts.size_guard = *o.size_guard;
  const bk::OracleResult orc = bk::oracle_minimize(spec, oopts);
  bk::SolveOptions sopts;
  sopts.tol = o.tol;
  sopts.max_iter = o.max_iter;
  sopts.size_guard = resolve_size_guard(o.size_guard);
  const bk::Solution sol =
      spec.endpoint ? bk::solve_brodinger(spec, sopts) : bk::solve_schrodinger(spec, sopts);
  json rep;
  rep["oracle"] = solve_summary(orc.converged, orc.iterations, orc.residual, orc.objective);
  rep["solve"] = solve_summary(sol.converged, sol.iterations, sol.residual, sol.objective);
  rep["objective_gap"] = std::abs(sol.objective - orc.objective);
  rep["tv_distance"] = bk::tv_distance(sol.P.w, orc.P.w);
  rep["measure"] = bk::dense_to_json(orc.P);
  emit(rep, o.output);
  return (orc.converged && sol.converged) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bridgekit: finite-state entropy minimization over path measures"};
  app.require_subcommand(1);

  CommonOpts o;

  auto add_common = [&](CLI::App* sub, bool needs_input) {
    auto* in = sub->add_option("--input", o.input, "input JSON file");
    if (needs_input) in->required();
    sub->add_option("--output", o.output, "output JSON file (stdout when omitted)");
    sub->add_option("--tol", o.tol, "tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--max-iter", o.max_iter, "maximum IPFP cycles")
        ->check(CLI::PositiveNumber);
    sub->add_option("--seed", o.seed, "seed for generated instances");
    sub->add_option("--size-guard", o.size_guard,
                    "dense cell budget (overrides BRIDGEKIT_SIZE_GUARD)")
        ->check(CLI::PositiveNumber);
  };

  CLI::App* solve = app.add_subcommand("solve", "solve a constrained problem");
  add_common(solve, true);
  solve->add_option("--lambda", o.lambda, "fold at this grid time (e.g. 1/2) instead of direct");
  solve->add_flag("--trace", o.trace, "print per-cycle diagnostics to stderr");

  CLI::App* check = app.add_subcommand("check", "check a structural property");
  add_common(check, true);
  check->add_option("--property", o.property, "property to check")
      ->required()
      ->check(CLI::IsMember(
          {"markov", "reciprocal", "irreducible", "irreducible-markov",
           "irreducible-reciprocal"}));

  CLI::App* decompose = app.add_subcommand(
      "decompose", "split a pair function or extract potentials");
  add_common(decompose, false);
  decompose->add_option("--fixture-name", o.fixture_name,
                        "run on a built-in counterexample instead of --input");

  CLI::App* fixture = app.add_subcommand("fixture", "write a named example instance");
  add_common(fixture, false);
  fixture->add_option("--fixture-name", o.fixture_name,
                      "instance to write (omit to list available names)");

  CLI::App* oracle = app.add_subcommand("oracle", "cross-check solve with the oracle");
  add_common(oracle, true);

  // check defaults to the structural tolerance rather than the solver's
  check->callback([&] {
    if (check->count("--tol") == 0) o.tol = bk::kStructureTol;
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (solve->parsed()) return cmd_solve(o);
    if (check->parsed()) return cmd_check(o);
    if (decompose->parsed()) {
      if (o.fixture_name.empty() && o.input.empty())
        bk::fail(bk::ErrorKind::InvalidArgument, "decompose needs --input or --fixture-name");
      return cmd_decompose(o);
    }
    if (fixture->parsed()) return cmd_fixture(o);
    if (oracle->parsed()) return cmd_oracle(o);
  } catch (const bk::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (!o.output.empty()) {
      try {
        json rep;
        rep["error"] = e.what();
        rep["kind"] = bk::error_kind_name(e.kind);
        bk::write_json_file(o.output, rep);
      } catch (const std::exception&) {
        // the diagnostic on stderr is the best we can do
      }
    }
    return exit_code_for(e.kind);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
