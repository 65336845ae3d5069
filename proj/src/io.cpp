#include "bridgekit/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "bridgekit/errors.hpp"

namespace bridgekit {

using nlohmann::json;

namespace {

const json& need(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key))
    fail(ErrorKind::ParseError, std::string("missing key '") + key + "'");
  return j.at(key);
}

double json_to_value(const json& j) {  // allows the "-inf" encoding
  if (j.is_string()) {
    if (j.get<std::string>() == "-inf") return kNegInf;
    fail(ErrorKind::ParseError, "expected a number or \"-inf\"");
  }
  if (!j.is_number()) fail(ErrorKind::ParseError, "expected a number");
  return j.get<double>();
}

json value_to_json(double v) {
  if (v == kNegInf) return json("-inf");
  if (!std::isfinite(v)) fail(ErrorKind::InvalidArgument, "non-finite value in output");
  return json(v);
}

std::vector<double> values_from_json(const json& j) {
  if (!j.is_array()) fail(ErrorKind::ParseError, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& e : j) out.push_back(json_to_value(e));
  return out;
}

json values_to_json(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(value_to_json(x));
  return out;
}

// Measure weights: nonnegative, with sub-1e-15 noise snapped to exact zero.
std::vector<double> weights_from_json(const json& j) {
  std::vector<double> out = values_from_json(j);
  for (double& v : out) {
    if (v == kNegInf) fail(ErrorKind::ParseError, "weights cannot be -inf");
    if (std::abs(v) < kIngestZeroTol) v = 0.0;
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Core types
// ---------------------------------------------------------------------------

json space_to_json(const StateSpace& s) {
  json j;
  j["labels"] = s.labels;
  return j;
}

StateSpace space_from_json(const json& j) {
  StateSpace s;
  const json& labels = need(j, "labels");
  if (!labels.is_array()) fail(ErrorKind::ParseError, "labels must be an array");
  for (const auto& e : labels) {
    if (!e.is_string()) fail(ErrorKind::ParseError, "labels must be strings");
    s.labels.push_back(e.get<std::string>());
  }
  s.validate();
  return s;
}

json grid_to_json(const TimeGrid& g) {
  json times = json::array();
  for (const Rat& t : g.times) times.push_back(t.to_double());
  json j;
  j["times"] = times;
  return j;
}

TimeGrid grid_from_json(const json& j) {
  TimeGrid g;
  const json& times = need(j, "times");
  if (!times.is_array()) fail(ErrorKind::ParseError, "times must be an array");
  for (const auto& e : times) {
    if (!e.is_number()) fail(ErrorKind::ParseError, "times must be numbers");
    g.times.push_back(Rat::from_double(e.get<double>()));
  }
  g.validate();
  return g;
}

json dense_to_json(const DensePathMeasure& m) {
  json j;
  j["type"] = "dense";
  j["space"] = space_to_json(m.space);
  j["grid"] = grid_to_json(m.grid);
  j["weights"] = values_to_json(m.w);
  j["normalized"] = m.normalized;
  return j;
}

json markov_to_json(const MarkovPathMeasure& m) {
  json j;
  j["type"] = "markov";
  j["space"] = space_to_json(m.space);
  j["grid"] = grid_to_json(m.grid);
  j["init"] = values_to_json(m.init);
  json kernels = json::array();
  for (const auto& k : m.kernels) kernels.push_back(values_to_json(k));
  j["kernels"] = kernels;
  return j;
}

namespace {

MarkovPathMeasure markov_from_json(const json& j) {
  MarkovPathMeasure m;
  m.space = space_from_json(need(j, "space"));
  m.grid = grid_from_json(need(j, "grid"));
  m.init = weights_from_json(need(j, "init"));
  const json& kernels = need(j, "kernels");
  if (!kernels.is_array()) fail(ErrorKind::ParseError, "kernels must be an array");
  for (const auto& k : kernels) m.kernels.push_back(weights_from_json(k));
  m.validate();
  return m;
}

DensePathMeasure dense_from_json(const json& j) {
  const StateSpace space = space_from_json(need(j, "space"));
  const TimeGrid grid = grid_from_json(need(j, "grid"));
  return make_dense(space, grid, weights_from_json(need(j, "weights")));
}

}  // namespace

DensePathMeasure measure_from_json(const json& j, std::int64_t size_guard) {
  const std::string type = need(j, "type").get<std::string>();
  if (type == "dense") {
    DensePathMeasure m = dense_from_json(j);
    checked_cells(std::vector<int>(m.K(), m.n()), size_guard);
    return m;
  }
  if (type == "markov") return markov_to_dense(markov_from_json(j), size_guard);
  fail(ErrorKind::ParseError, "measure type must be 'dense' or 'markov'");
}

// ---------------------------------------------------------------------------
// Problems
// ---------------------------------------------------------------------------

json problem_to_json(const ProblemSpec& spec) {
  json j;
  if (spec.markov_ref)
    j["reference"] = markov_to_json(*spec.markov_ref);
  else if (spec.dense_ref_measure)
    j["reference"] = dense_to_json(*spec.dense_ref_measure);
  json cons = json::array();
  for (const auto& c : spec.constraints) {
    json e;
    e["time_index"] = c.time_index;
    e["target"] = values_to_json(c.target);
    cons.push_back(e);
  }
  j["constraints"] = cons;
  if (spec.endpoint) j["endpoint"] = values_to_json(*spec.endpoint);
  return j;
}

ProblemSpec problem_from_json(const json& j) {
  ProblemSpec spec;
  const json& ref = need(j, "reference");
  const std::string type = need(ref, "type").get<std::string>();
  if (type == "markov")
    spec.markov_ref = markov_from_json(ref);
  else if (type == "dense")
    spec.dense_ref_measure = dense_from_json(ref);
  else
    fail(ErrorKind::ParseError, "reference type must be 'dense' or 'markov'");
  const json& cons = need(j, "constraints");
  if (!cons.is_array()) fail(ErrorKind::ParseError, "constraints must be an array");
  for (const auto& e : cons) {
    MarginalConstraint c;
    c.time_index = need(e, "time_index").get<int>();
    c.target = weights_from_json(need(e, "target"));
    spec.constraints.push_back(std::move(c));
  }
  if (j.contains("endpoint") && !j.at("endpoint").is_null())
    spec.endpoint = weights_from_json(j.at("endpoint"));
  spec.validate();
  return spec;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

json structure_report_to_json(const StructureReport& rep, const StateSpace& space) {
  json j;
  j["property"] = structure_property_name(rep.property);
  j["holds"] = rep.holds;
  j["worst_residual"] = rep.worst_residual;
  if (rep.witness) {
    json w;
    w["time_indices"] = rep.witness->time_indices;
    json states = json::array();
    for (int s : rep.witness->states)
      states.push_back((s >= 0 && s < space.size()) ? json(space.labels[s]) : json(s));
    w["states"] = states;
    w["note"] = rep.witness->note;
    j["witness"] = w;
  } else {
    j["witness"] = json();
  }
  return j;
}

json potentials_to_json(const Potentials& pot, const StateSpace& space) {
  (void)space;
  json j;
  j["time_indices"] = pot.time_indices;
  json f = json::array();
  for (const auto& fv : pot.f) f.push_back(values_to_json(fv));
  j["f"] = f;
  if (pot.eta) j["eta"] = values_to_json(*pot.eta);
  return j;
}

Potentials potentials_from_json(const json& j) {
  Potentials pot;
  const json& ti = need(j, "time_indices");
  if (!ti.is_array()) fail(ErrorKind::ParseError, "time_indices must be an array");
  for (const auto& e : ti) pot.time_indices.push_back(e.get<int>());
  const json& f = need(j, "f");
  if (!f.is_array()) fail(ErrorKind::ParseError, "f must be an array of arrays");
  for (const auto& e : f) pot.f.push_back(values_from_json(e));
  if (j.contains("eta") && !j.at("eta").is_null()) pot.eta = values_from_json(j.at("eta"));
  return pot;
}

json solution_to_json(const Solution& sol) {
  json j;
  j["converged"] = sol.converged;
  j["iterations"] = sol.iterations;
  j["residual"] = sol.residual;
  j["objective"] = sol.objective;
  j["measure"] = dense_to_json(sol.P);
  j["potentials"] = potentials_to_json(sol.potentials, sol.P.space);
  json diag = json::array();
  for (const auto& d : sol.diagnostics) {
    json e;
    e["cycle"] = d.cycle;
    e["residual"] = d.residual;
    e["objective"] = d.objective;
    e["dual_objective"] = d.dual_objective;
    diag.push_back(e);
  }
  j["diagnostics"] = diag;
  return j;
}

json sum_instance_to_json(const SumInstance& inst) {
  json j;
  j["reference"] = dense_to_json(inst.R);
  j["s_index"] = inst.s_idx;
  j["u_index"] = inst.u_idx;
  j["t_index"] = inst.t_idx;
  j["f"] = values_to_json(inst.f);
  j["a"] = values_to_json(inst.a);
  j["b"] = values_to_json(inst.b);
  j["splittable"] = inst.splittable;
  return j;
}

SumInstance sum_instance_from_json(const json& j) {
  SumInstance inst;
  const json& ref = need(j, "reference");
  inst.R = measure_from_json(ref);
  inst.s_idx = need(j, "s_index").get<int>();
  inst.u_idx = need(j, "u_index").get<int>();
  inst.t_idx = need(j, "t_index").get<int>();
  inst.f = values_from_json(need(j, "f"));
  inst.a = values_from_json(need(j, "a"));
  inst.b = values_from_json(need(j, "b"));
  if (j.contains("splittable")) inst.splittable = j.at("splittable").get<bool>();
  return inst;
}

json fixture_to_json(const CounterexampleFixture& fx) {
  SumInstance inst;
  inst.R = fx.R;
  inst.f = fx.f;
  inst.a = fx.a;
  inst.b = fx.b;
  inst.s_idx = fx.s_idx;
  inst.u_idx = fx.u_idx;
  inst.t_idx = fx.t_idx;
  inst.splittable = false;
  json j = sum_instance_to_json(inst);
  j["name"] = fx.name;
  j["expected"] = fx.expected;
  return j;
}

json sum_result_to_json(const SumDecomposeResult& res, const StateSpace& space) {
  json j;
  j["feasible"] = res.feasible;
  if (res.feasible) {
    j["f_s"] = values_to_json(res.f_s);
    j["f_t"] = values_to_json(res.f_t);
    j["pivot"] = res.pivot >= 0 ? json(space.labels[res.pivot]) : json();
  }
  if (res.certificate) {
    json cert;
    json cells = json::array();
    for (const auto& c : res.certificate->cells) {
      json cell = json::array();
      cell.push_back(space.labels[c.first]);
      cell.push_back(space.labels[c.second]);
      cells.push_back(cell);
    }
    cert["cells"] = cells;
    cert["lhs"] = res.certificate->lhs;
    cert["rhs"] = res.certificate->rhs;
    j["certificate"] = cert;
  }
  return j;
}

json feasibility_to_json(const FeasibilityReport& rep) {
  json j;
  j["feasible"] = rep.feasible;
  j["detail"] = rep.detail;
  return j;
}

// ---------------------------------------------------------------------------
// Deterministic dump and file handling
// ---------------------------------------------------------------------------

namespace {

void dump_rec(const json& j, std::string& out) {
  switch (j.type()) {
    case json::value_t::null:
      out += "null";
      break;
    case json::value_t::boolean:
      out += j.get<bool>() ? "true" : "false";
      break;
    case json::value_t::number_integer:
      out += std::to_string(j.get<std::int64_t>());
      break;
    case json::value_t::number_unsigned:
      out += std::to_string(j.get<std::uint64_t>());
      break;
    case json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v))
        fail(ErrorKind::InvalidArgument, "non-finite number reached the serializer");
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out += buf;
      break;
    }
    case json::value_t::string:
      out += json(j.get<std::string>()).dump();
      break;
    case json::value_t::array: {
      out += '[';
      bool first = true;
      for (const auto& e : j) {
        if (!first) out += ',';
        first = false;
        dump_rec(e, out);
      }
      out += ']';
      break;
    }
    case json::value_t::object: {
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        out += json(it.key()).dump();
        out += ':';
        dump_rec(it.value(), out);
      }
      out += '}';
      break;
    }
    default:
      fail(ErrorKind::InvalidArgument, "unsupported JSON value type");
  }
}

}  // namespace

std::string dump_json(const json& j) {
  std::string out;
  dump_rec(j, out);
  return out;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::ParseError, "cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::ParseError, std::string("invalid JSON in '") + path + "': " + e.what());
  }
}

void write_json_file(const std::string& path, const json& j) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) fail(ErrorKind::InvalidArgument, "cannot write '" + tmp + "'");
    out << dump_json(j) << "\n";
    if (!out) fail(ErrorKind::InvalidArgument, "failed writing '" + tmp + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    fail(ErrorKind::InvalidArgument, "cannot move temporary file onto '" + path + "'");
  }
}

}  // namespace bridgekit
