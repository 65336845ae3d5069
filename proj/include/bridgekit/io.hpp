#pragma once

#include <string>

#include <json.hpp>

#include "bridgekit/additive.hpp"
#include "bridgekit/fixtures.hpp"
#include "bridgekit/measure.hpp"
#include "bridgekit/solvers.hpp"
#include "bridgekit/structure.hpp"

namespace bridgekit {

// All serialization uses JSON.  Doubles are printed with 17 significant
// digits so every value round-trips bit-exactly; object keys are emitted in
// sorted order so output files are deterministic.  -inf (an absorbed
// potential value) is encoded as the string "-inf".  Grid times travel as
// decimals and are snapped back to exact rationals on ingestion; measure
// weights below 1e-15 in magnitude are snapped to exact zero on ingestion
// (never during internal arithmetic).

nlohmann::json space_to_json(const StateSpace& s);
StateSpace space_from_json(const nlohmann::json& j);

nlohmann::json grid_to_json(const TimeGrid& g);
TimeGrid grid_from_json(const nlohmann::json& j);

nlohmann::json dense_to_json(const DensePathMeasure& m);
nlohmann::json markov_to_json(const MarkovPathMeasure& m);
// Accepts {"type":"dense"} or {"type":"markov"} objects; a Markov object is
// materialized through the given cell guard.
DensePathMeasure measure_from_json(const nlohmann::json& j,
                                   std::int64_t size_guard = kDefaultSizeGuard);

nlohmann::json problem_to_json(const ProblemSpec& spec);
ProblemSpec problem_from_json(const nlohmann::json& j);

nlohmann::json structure_report_to_json(const StructureReport& rep, const StateSpace& space);

nlohmann::json potentials_to_json(const Potentials& pot, const StateSpace& space);
Potentials potentials_from_json(const nlohmann::json& j);

nlohmann::json solution_to_json(const Solution& sol);

nlohmann::json sum_instance_to_json(const SumInstance& inst);
SumInstance sum_instance_from_json(const nlohmann::json& j);
nlohmann::json fixture_to_json(const CounterexampleFixture& fx);

nlohmann::json sum_result_to_json(const SumDecomposeResult& res, const StateSpace& space);

nlohmann::json feasibility_to_json(const FeasibilityReport& rep);

// Deterministic serialization: sorted keys, %.17g doubles.
std::string dump_json(const nlohmann::json& j);

nlohmann::json read_json_file(const std::string& path);
// Writes atomically (temp file + rename) with a trailing newline.
void write_json_file(const std::string& path, const nlohmann::json& j);

}  // namespace bridgekit
