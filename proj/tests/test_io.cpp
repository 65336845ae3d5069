#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "bridgekit/additive.hpp"
#include "bridgekit/errors.hpp"
#include "bridgekit/fixtures.hpp"
#include "bridgekit/io.hpp"
#include "bridgekit/measure.hpp"
#include "bridgekit/solvers.hpp"
#include "helpers.hpp"

using namespace bridgekit;
using namespace testutil;
namespace fs = std::filesystem;

TEST_CASE("dense measures round-trip byte-identically") {
  const DensePathMeasure m = markov_to_dense(random_chain(701, 3, 4, 0.3));
  const std::string once = dump_json(dense_to_json(m));
  const DensePathMeasure back = measure_from_json(nlohmann::json::parse(once));
  CHECK(dump_json(dense_to_json(back)) == once);
  CHECK(back.w == m.w);
  CHECK(back.space.labels == m.space.labels);
  CHECK(back.grid.times == m.grid.times);
}

TEST_CASE("markov measures round-trip and densify on ingestion") {
  const MarkovPathMeasure m = random_chain(702, 2, 5, 0.2);
  const std::string once = dump_json(markov_to_json(m));
  // Parsing a markov object materializes the dense path measure.
  const DensePathMeasure dense = measure_from_json(nlohmann::json::parse(once));
  CHECK(max_abs_diff(dense.w, markov_to_dense(m).w) == 0.0);
  // The markov JSON itself is stable.
  CHECK(dump_json(markov_to_json(m)) == once);
}

TEST_CASE("grid times survive the decimal codec exactly") {
  TimeGrid g;
  g.times = {Rat{0, 1}, Rat{1, 3}, Rat{1, 2}, Rat{2, 3}, Rat{1, 1}};
  const TimeGrid back = grid_from_json(grid_to_json(g));
  REQUIRE(back.times.size() == g.times.size());
  for (std::size_t i = 0; i < g.times.size(); ++i) {
    CHECK(back.times[i].num == g.times[i].num);
    CHECK(back.times[i].den == g.times[i].den);
  }
}

TEST_CASE("seventeen significant digits preserve doubles bit-exactly") {
  const double ugly = 1.0 / 3.0;
  DensePathMeasure m = make_path_measure(2, 2, {ugly, ugly, ugly * 0.5, 1 - 2.5 * ugly});
  const DensePathMeasure back =
      measure_from_json(nlohmann::json::parse(dump_json(dense_to_json(m))));
  CHECK(back.w == m.w);
}

TEST_CASE("tiny ingested weights snap to exact zero") {
  nlohmann::json j = dense_to_json(make_path_measure(2, 2, {0.5, 0.5, 0.0, 0.0}));
  j["weights"][2] = 1e-16;  // below the ingestion threshold
  j["normalized"] = false;
  const DensePathMeasure m = measure_from_json(j);
  CHECK(m.w[2] == 0.0);
  // At the threshold's other side the value is kept as-is.
  j["weights"][2] = 1e-14;
  CHECK(measure_from_json(j).w[2] == 1e-14);
}

TEST_CASE("problems round-trip including endpoint targets") {
  const ProblemSpec s = random_feasible_problem(703, 2, 5, 1, true);
  const std::string once = dump_json(problem_to_json(s));
  const ProblemSpec back = problem_from_json(nlohmann::json::parse(once));
  CHECK(dump_json(problem_to_json(back)) == once);
  REQUIRE(back.endpoint.has_value());
  CHECK(*back.endpoint == *s.endpoint);
  REQUIRE(back.constraints.size() == s.constraints.size());
  CHECK(back.constraints[0].time_index == s.constraints[0].time_index);
  CHECK(back.constraints[0].target == s.constraints[0].target);
}

TEST_CASE("potentials round-trip, including absorbed -inf entries and pair terms") {
  const StateSpace space = make_space(2);
  Potentials pot;
  pot.time_indices = {0, 2};
  pot.f = {{kNegInf, 0.75}, {1.0 / 3.0, -2.5}};
  pot.eta = std::vector<double>{0.1, kNegInf, -0.25, 0.0};
  const std::string once = dump_json(potentials_to_json(pot, space));
  CHECK(once.find("\"-inf\"") != std::string::npos);
  const Potentials back = potentials_from_json(nlohmann::json::parse(once));
  CHECK(back.time_indices == pot.time_indices);
  CHECK(back.f == pot.f);
  REQUIRE(back.eta.has_value());
  CHECK(*back.eta == *pot.eta);
  CHECK(dump_json(potentials_to_json(back, space)) == once);
}

TEST_CASE("measure weights refuse -inf") {
  nlohmann::json j = dense_to_json(make_path_measure(2, 2, {0.25, 0.25, 0.25, 0.25}));
  j["weights"][0] = "-inf";
  CHECK_THROWS_AS(measure_from_json(j), Error);
}

TEST_CASE("sum instances and fixtures serialize stably") {
  const SumInstance inst = planted_split_instance(704, 3, 4, 0, 2, 3);
  const std::string once = dump_json(sum_instance_to_json(inst));
  const SumInstance back = sum_instance_from_json(nlohmann::json::parse(once));
  CHECK(dump_json(sum_instance_to_json(back)) == once);
  CHECK(back.f == inst.f);
  CHECK(back.a == inst.a);
  CHECK(back.b == inst.b);
  CHECK(back.s_idx == inst.s_idx);

  const nlohmann::json fx = fixture_to_json(entangled_endpoints_fixture());
  CHECK(fx.contains("name"));
  CHECK(fx.contains("expected"));
  const SumInstance fxi = sum_instance_from_json(fx);
  CHECK(fxi.R.mass() == doctest::Approx(1.0));
}

TEST_CASE("parse failures carry the parse-error kind") {
  try {
    read_json_file("/nonexistent/zzz.json");
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.kind == ErrorKind::ParseError);
  }
  try {
    measure_from_json(nlohmann::json::parse("{\"type\":\"dense\"}"));
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.kind == ErrorKind::ParseError);
    CHECK(std::string(e.what()).find("space") != std::string::npos);
  }
  CHECK_THROWS_AS(measure_from_json(nlohmann::json::parse("{\"type\":\"sparse\"}")), Error);
}

TEST_CASE("files are written atomically with a trailing newline") {
  const fs::path dir = fs::temp_directory_path() / "bridgekit_io_test";
  fs::create_directories(dir);
  const fs::path file = dir / "m.json";
  const DensePathMeasure m = markov_to_dense(random_chain(705, 2, 3, 0.0));
  write_json_file(file.string(), dense_to_json(m));

  std::ifstream in(file);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  REQUIRE_FALSE(text.empty());
  CHECK(text.back() == '\n');
  CHECK(text.substr(0, text.size() - 1) == dump_json(dense_to_json(m)));

  // Re-reading gives the same measure, and no temporary files linger.
  const DensePathMeasure back = measure_from_json(read_json_file(file.string()));
  CHECK(back.w == m.w);
  int entries = 0;
  for (const auto& p : fs::directory_iterator(dir)) {
    (void)p;
    ++entries;
  }
  CHECK(entries == 1);
  fs::remove_all(dir);
}

TEST_CASE("solutions serialize with their diagnostics") {
  const ProblemSpec s = random_feasible_problem(706, 2, 4, 2, false);
  const Solution sol = solve_schrodinger(s);
  const nlohmann::json j = solution_to_json(sol);
  CHECK(j.at("converged").get<bool>());
  CHECK(j.at("iterations").get<int>() == sol.iterations);
  CHECK(j.at("diagnostics").is_array());
  REQUIRE_FALSE(j.at("diagnostics").empty());
  const nlohmann::json& last = j.at("diagnostics").back();
  CHECK(last.contains("objective"));
  CHECK(last.contains("dual_objective"));
  // The embedded measure reparses to the solution weights.
  const DensePathMeasure back = measure_from_json(j.at("measure"));
  CHECK(back.w == sol.P.w);
  // And the dump is deterministic.
  CHECK(dump_json(j) == dump_json(solution_to_json(sol)));
}

TEST_CASE("structure reports name witness states by label") {
  const CounterexampleFixture fx = entangled_endpoints_fixture();
  const nlohmann::json j = structure_report_to_json(is_markov(fx.R), fx.R.space);
  CHECK_FALSE(j.at("holds").get<bool>());
  REQUIRE(j.contains("witness"));
  REQUIRE_FALSE(j.at("witness").is_null());
  CHECK(j.at("witness").at("states")[0].get<std::string>() == "m");
  // A passing check reports a null witness.
  const DensePathMeasure chain = markov_to_dense(random_chain(707, 2, 3, 0.0));
  CHECK(structure_report_to_json(is_markov(chain), chain.space).at("witness").is_null());
}
