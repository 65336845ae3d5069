#include "bridgekit/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <numeric>
#include <sstream>

#include "bridgekit/errors.hpp"
#include "bridgekit/structure.hpp"

namespace bridgekit {
namespace {

bool advance(std::vector<int>& coords, int n) {
  for (int j = static_cast<int>(coords.size()) - 1; j >= 0; --j) {
    if (++coords[j] < n) return true;
    coords[j] = 0;
  }
  return false;
}

void check_probability_vector(const std::vector<double>& v, std::size_t want,
                              const std::string& what) {
  if (v.size() != want) fail(ErrorKind::ShapeMismatch, what + " has wrong length");
  double total = 0;
  for (double x : v) {
    if (!(x >= 0) || !std::isfinite(x))
      fail(ErrorKind::NotProbability, what + " has a negative or non-finite entry");
    total += x;
  }
  if (std::abs(total - 1.0) > kMassTol)
    fail(ErrorKind::NotProbability, what + " does not sum to one");
}

std::string num_str(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// ProblemSpec
// ---------------------------------------------------------------------------

const StateSpace& ProblemSpec::space() const {
  if (markov_ref) return markov_ref->space;
  if (dense_ref_measure) return dense_ref_measure->space;
  fail(ErrorKind::InvalidArgument, "problem has no reference measure");
}

const TimeGrid& ProblemSpec::grid() const {
  if (markov_ref) return markov_ref->grid;
  if (dense_ref_measure) return dense_ref_measure->grid;
  fail(ErrorKind::InvalidArgument, "problem has no reference measure");
}

void ProblemSpec::validate() const {
  if (markov_ref.has_value() == dense_ref_measure.has_value())
    fail(ErrorKind::InvalidArgument, "exactly one reference measure required");
  if (markov_ref) markov_ref->validate();
  if (dense_ref_measure) dense_ref_measure->validate();
  const int n = space().size();
  const int K = grid().size();
  int prev = -1;
  for (const auto& c : constraints) {
    if (c.time_index < 0 || c.time_index >= K)
      fail(ErrorKind::BadCoords, "constraint time index out of range");
    if (c.time_index <= prev)
      fail(ErrorKind::BadCoords, "constraint time indices must be strictly ascending");
    prev = c.time_index;
    check_probability_vector(c.target, static_cast<std::size_t>(n),
                             "target at index " + std::to_string(c.time_index));
  }
  if (endpoint) {
    check_probability_vector(*endpoint, static_cast<std::size_t>(n) * n, "endpoint target");
    for (const auto& c : constraints) {
      if (c.time_index != 0 && c.time_index != K - 1) continue;
      for (int x = 0; x < n; ++x) {
        double m = 0;
        for (int y = 0; y < n; ++y)
          m += (c.time_index == 0) ? (*endpoint)[x * n + y] : (*endpoint)[y * n + x];
        if (std::abs(m - c.target[x]) > 1e-12)
          fail(ErrorKind::InvalidArgument,
               "endpoint joint marginal disagrees with the single-time target at index " +
                   std::to_string(c.time_index));
      }
    }
  }
}

DensePathMeasure ProblemSpec::dense_reference(std::int64_t size_guard) const {
  if (markov_ref) return markov_to_dense(*markov_ref, size_guard);
  const auto& d = *dense_ref_measure;
  checked_cells(std::vector<int>(d.K(), d.n()), size_guard);
  return d;
}

// ---------------------------------------------------------------------------
// Feasibility
// ---------------------------------------------------------------------------

namespace {

// Max flow on a small dense capacity matrix (shortest augmenting paths).
double max_flow(std::vector<std::vector<double>>& cap, int s, int t) {
  const int V = static_cast<int>(cap.size());
  double flow = 0;
  for (;;) {
    std::vector<int> parent(V, -1);
    parent[s] = s;
    std::deque<int> q{s};
    while (!q.empty() && parent[t] < 0) {
      const int u = q.front();
      q.pop_front();
      for (int v = 0; v < V; ++v)
        if (parent[v] < 0 && cap[u][v] > 1e-15) {
          parent[v] = u;
          q.push_back(v);
        }
    }
    if (parent[t] < 0) return flow;
    double aug = std::numeric_limits<double>::infinity();
    for (int v = t; v != s; v = parent[v]) aug = std::min(aug, cap[parent[v]][v]);
    for (int v = t; v != s; v = parent[v]) {
      cap[parent[v]][v] -= aug;
      cap[v][parent[v]] += aug;
    }
    flow += aug;
  }
}

// Targets per time index, with the endpoint joint folded into its own
// marginals at the first and last time.
std::vector<std::optional<std::vector<double>>> effective_targets(const ProblemSpec& spec) {
  const int n = spec.space().size();
  const int K = spec.grid().size();
  std::vector<std::optional<std::vector<double>>> at(K);
  for (const auto& c : spec.constraints) at[c.time_index] = c.target;
  if (spec.endpoint) {
    std::vector<double> m0(n, 0), m1(n, 0);
    for (int x = 0; x < n; ++x)
      for (int y = 0; y < n; ++y) {
        m0[x] += (*spec.endpoint)[x * n + y];
        m1[y] += (*spec.endpoint)[x * n + y];
      }
    if (!at[0]) at[0] = std::move(m0);
    if (!at[K - 1]) at[K - 1] = std::move(m1);
  }
  return at;
}

}  // namespace

FeasibilityReport check_feasibility(const ProblemSpec& spec, std::int64_t size_guard) {
  spec.validate();
  const DensePathMeasure Rd = spec.dense_reference(size_guard);
  const int n = Rd.n(), K = Rd.K();
  const auto at = effective_targets(spec);

  FeasibilityReport rep;
  std::vector<int> times;
  for (int t = 0; t < K; ++t)
    if (at[t]) times.push_back(t);

  for (int t : times) {
    const FiniteMeasure m = marginal(Rd, {t});
    for (int x = 0; x < n; ++x)
      if ((*at[t])[x] > 0 && m.w[x] <= 0) {
        rep.feasible = false;
        rep.detail = "target at time " + Rd.grid.times[t].str() + " charges state " +
                     Rd.space.labels[x] + " which the reference never visits";
        return rep;
      }
  }
  if (spec.endpoint) {
    const FiniteMeasure m = marginal(Rd, {0, K - 1});
    for (int x = 0; x < n; ++x)
      for (int y = 0; y < n; ++y)
        if ((*spec.endpoint)[x * n + y] > 0 && m.w[x * n + y] <= 0) {
          rep.feasible = false;
          rep.detail = "endpoint target charges the pair (" + Rd.space.labels[x] + "," +
                       Rd.space.labels[y] + ") which the reference never realizes";
          return rep;
        }
  }

  for (std::size_t i = 0; i + 1 < times.size(); ++i) {
    const int s = times[i], t = times[i + 1];
    const FiniteMeasure pair = marginal(Rd, {s, t});
    const int V = 2 * n + 2, src = 0, snk = 2 * n + 1;
    std::vector<std::vector<double>> cap(V, std::vector<double>(V, 0.0));
    for (int x = 0; x < n; ++x) cap[src][1 + x] = (*at[s])[x];
    for (int z = 0; z < n; ++z) cap[1 + n + z][snk] = (*at[t])[z];
    for (int x = 0; x < n; ++x)
      for (int z = 0; z < n; ++z)
        if (pair.w[x * n + z] > 0) cap[1 + x][1 + n + z] = 2.0;
    const double flow = max_flow(cap, src, snk);
    if (flow < 1.0 - 1e-12) {
      // Residual-reachable source-side states witness the blocked mass.
      std::vector<bool> reach(V, false);
      reach[src] = true;
      std::deque<int> q{src};
      while (!q.empty()) {
        const int u = q.front();
        q.pop_front();
        for (int v = 0; v < V; ++v)
          if (!reach[v] && cap[u][v] > 1e-15) {
            reach[v] = true;
            q.push_back(v);
          }
      }
      std::ostringstream msg;
      msg << "targets at times " << Rd.grid.times[s].str() << " and " << Rd.grid.times[t].str()
          << " cannot be coupled through the reference; blocked source states:";
      double lhs = 0, rhs = 0;
      for (int x = 0; x < n; ++x)
        if (reach[1 + x]) {
          msg << " " << Rd.space.labels[x];
          lhs += (*at[s])[x];
        }
      for (int z = 0; z < n; ++z)
        if (reach[1 + n + z]) rhs += (*at[t])[z];
      msg << " (they carry mass " << num_str(lhs) << " but can reach only mass " << num_str(rhs)
          << ")";
      rep.feasible = false;
      rep.detail = msg.str();
      return rep;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// IPFP core
// ---------------------------------------------------------------------------

namespace {

struct Block {
  std::vector<int> coords;        // 1 or 2 path coordinates
  int groups = 0;
  std::vector<int> key_to_group;  // size n^|coords|
  std::vector<double> target;     // per group
  std::vector<double> f;          // accumulated log factors per group
  bool is_endpoint = false;
  int orig_time = -1;             // original time index for single-time blocks
};

Block single_block(int time_index, std::vector<double> target, int n) {
  Block b;
  b.coords = {time_index};
  b.groups = n;
  b.key_to_group.resize(n);
  std::iota(b.key_to_group.begin(), b.key_to_group.end(), 0);
  b.target = std::move(target);
  b.f.assign(n, 0.0);
  b.orig_time = time_index;
  return b;
}

struct IpfpRun {
  std::vector<double> w;  // final weights, mass one
  int cycles = 0;
  double residual = 0;
  bool converged = false;
  std::vector<CycleRecord> diag;
};

IpfpRun run_ipfp(const DensePathMeasure& Rd, std::vector<Block>& blocks,
                 const SolveOptions& opts) {
  const int n = Rd.n(), K = Rd.K();
  const std::int64_t cells = Rd.cells();
  const double total = Rd.mass();
  if (!(total > 0)) fail(ErrorKind::InvalidArgument, "reference measure has zero mass");

  IpfpRun run;
  run.w.resize(cells);
  for (std::int64_t i = 0; i < cells; ++i) run.w[i] = Rd.w[i] / total;

  // Group id of every path cell, per block.
  std::vector<std::vector<std::int32_t>> pg(blocks.size(),
                                            std::vector<std::int32_t>(cells));
  {
    std::vector<int> coords(K, 0);
    for (std::int64_t i = 0; i < cells; ++i) {
      for (std::size_t b = 0; b < blocks.size(); ++b) {
        std::int64_t key = 0;
        for (int c : blocks[b].coords) key = key * n + coords[c];
        pg[b][i] = static_cast<std::int32_t>(blocks[b].key_to_group[key]);
      }
      advance(coords, n);
    }
  }

  std::vector<double> m, fac;
  for (int cycle = 1; cycle <= opts.max_iter; ++cycle) {
    double worst = 0;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      Block& blk = blocks[b];
      m.assign(blk.groups, 0.0);
      for (std::int64_t i = 0; i < cells; ++i) m[pg[b][i]] += run.w[i];
      double tv = 0;
      for (int g = 0; g < blk.groups; ++g) tv += std::abs(m[g] - blk.target[g]);
      worst = std::max(worst, tv / 2);

      fac.assign(blk.groups, 0.0);
      for (int g = 0; g < blk.groups; ++g) {
        if (blk.target[g] <= 0) {
          fac[g] = 0.0;
          blk.f[g] = kNegInf;
        } else {
          if (m[g] <= 0)
            fail(ErrorKind::InfeasibleProblem,
                 "a target class kept positive mass while the fitted measure lost it "
                 "(time block " +
                     std::to_string(blk.orig_time) + ")");
          fac[g] = blk.target[g] / m[g];
          blk.f[g] += std::log(fac[g]);
        }
      }
      for (std::int64_t i = 0; i < cells; ++i) run.w[i] *= fac[pg[b][i]];
    }

    double mass = 0, obj = 0;
    for (std::int64_t i = 0; i < cells; ++i) {
      mass += run.w[i];
      if (run.w[i] > 0) obj += run.w[i] * std::log(run.w[i] / Rd.w[i]);
    }
    double lin = 0;
    for (const Block& blk : blocks)
      for (int g = 0; g < blk.groups; ++g)
        if (blk.target[g] > 0) lin += blk.target[g] * blk.f[g];
    run.diag.push_back({cycle, worst, obj, std::log(mass) - lin});

    run.cycles = cycle;
    run.residual = worst;
    if (worst <= opts.tol) {
      run.converged = true;
      break;
    }
  }
  return run;
}

// Centers every single-time potential against its target; the endpoint term
// (or the last single-time term) absorbs the total shift.
void center_gauge(Potentials& pot, const std::vector<std::vector<double>>& weights) {
  if (pot.f.empty()) return;
  const std::size_t stop = pot.eta ? pot.f.size() : pot.f.size() - 1;
  double carried = 0;
  for (std::size_t m = 0; m < stop; ++m) {
    double mean = 0;
    bool finite = true;
    for (std::size_t x = 0; x < pot.f[m].size(); ++x) {
      if (weights[m][x] <= 0) continue;
      if (pot.f[m][x] == kNegInf) {
        finite = false;
        break;
      }
      mean += weights[m][x] * pot.f[m][x];
    }
    if (!finite) continue;
    for (double& v : pot.f[m])
      if (v != kNegInf) v -= mean;
    carried += mean;
  }
  if (carried == 0) return;
  if (pot.eta) {
    for (double& v : *pot.eta)
      if (v != kNegInf) v += carried;
  } else {
    for (double& v : pot.f.back())
      if (v != kNegInf) v += carried;
  }
}

Solution finish_solution(const DensePathMeasure& Rd, std::vector<double> w, IpfpRun run,
                         Potentials pot, const std::vector<std::vector<double>>& gauge_weights) {
  Solution sol;
  sol.P = Rd;
  sol.P.w = std::move(w);
  sol.P.normalized = true;
  center_gauge(pot, gauge_weights);
  sol.potentials = std::move(pot);
  sol.iterations = run.cycles;
  sol.residual = run.residual;
  sol.converged = run.converged;
  sol.objective = path_objective(sol.P, Rd);
  sol.diagnostics = std::move(run.diag);
  return sol;
}

}  // namespace

double path_objective(const DensePathMeasure& P, const DensePathMeasure& R) {
  if (P.cells() != R.cells())
    fail(ErrorKind::ShapeMismatch, "measures live on different path spaces");
  double h = 0;
  for (std::int64_t i = 0; i < P.cells(); ++i) {
    if (P.w[i] <= 0) continue;
    if (R.w[i] <= 0) return std::numeric_limits<double>::infinity();
    h += P.w[i] * std::log(P.w[i] / R.w[i]);
  }
  return h;
}

Solution solve_schrodinger(const ProblemSpec& spec, const SolveOptions& opts) {
  spec.validate();
  if (spec.endpoint)
    fail(ErrorKind::InvalidArgument,
         "problem carries an endpoint target; use the endpoint solver");
  const FeasibilityReport feas = check_feasibility(spec, opts.size_guard);
  if (!feas.feasible) fail(ErrorKind::InfeasibleProblem, feas.detail);

  const DensePathMeasure Rd = spec.dense_reference(opts.size_guard);
  const int n = Rd.n();
  std::vector<Block> blocks;
  for (const auto& c : spec.constraints) blocks.push_back(single_block(c.time_index, c.target, n));

  IpfpRun run = run_ipfp(Rd, blocks, opts);

  Potentials pot;
  std::vector<std::vector<double>> gw;
  for (auto& b : blocks) {
    pot.time_indices.push_back(b.orig_time);
    pot.f.push_back(std::move(b.f));
    gw.push_back(b.target);
  }
  std::vector<double> w = std::move(run.w);
  return finish_solution(Rd, std::move(w), std::move(run), std::move(pot), gw);
}

Solution solve_brodinger(const ProblemSpec& spec, const SolveOptions& opts) {
  spec.validate();
  if (!spec.endpoint)
    fail(ErrorKind::InvalidArgument, "endpoint solver needs an endpoint target");
  const FeasibilityReport feas = check_feasibility(spec, opts.size_guard);
  if (!feas.feasible) fail(ErrorKind::InfeasibleProblem, feas.detail);

  const DensePathMeasure Rd = spec.dense_reference(opts.size_guard);
  const int n = Rd.n(), K = Rd.K();
  std::vector<Block> blocks;
  for (const auto& c : spec.constraints) blocks.push_back(single_block(c.time_index, c.target, n));
  {
    Block pair;
    pair.coords = {0, K - 1};
    pair.groups = n * n;
    pair.key_to_group.resize(static_cast<std::size_t>(n) * n);
    std::iota(pair.key_to_group.begin(), pair.key_to_group.end(), 0);
    pair.target = *spec.endpoint;
    pair.f.assign(static_cast<std::size_t>(n) * n, 0.0);
    pair.is_endpoint = true;
    blocks.push_back(std::move(pair));
  }

  IpfpRun run = run_ipfp(Rd, blocks, opts);

  Potentials pot;
  std::vector<std::vector<double>> gw;
  for (auto& b : blocks) {
    if (b.is_endpoint) {
      pot.eta = std::move(b.f);
    } else {
      pot.time_indices.push_back(b.orig_time);
      pot.f.push_back(std::move(b.f));
      gw.push_back(b.target);
    }
  }
  std::vector<double> w = std::move(run.w);
  return finish_solution(Rd, std::move(w), std::move(run), std::move(pot), gw);
}

Solution solve_brodinger_via_folding(const ProblemSpec& spec, const Rat& lambda,
                                     const SolveOptions& opts) {
  spec.validate();
  if (!spec.endpoint)
    fail(ErrorKind::InvalidArgument, "the folding route needs an endpoint target");
  const FeasibilityReport feas = check_feasibility(spec, opts.size_guard);
  if (!feas.feasible) fail(ErrorKind::InfeasibleProblem, feas.detail);

  const DensePathMeasure Rd = spec.dense_reference(opts.size_guard);
  const int n = Rd.n(), K = Rd.K();
  const FoldParameters fp = fold_parameters(Rd.space, Rd.grid, lambda);
  const DensePathMeasure Rf = fold(Rd, fp, opts.size_guard);
  const int np = n * n;
  const int Kf = fp.folded_grid.size();

  // Folded blocks: the endpoint joint is the full marginal at folded time 0;
  // an interior single-time constraint pins one leg of the paired state.
  struct Planned {
    int folded_time;
    int rank;  // endpoint first, then leg one, then leg two
    Block block;
  };
  std::vector<Planned> planned;
  {
    Block pair;
    pair.coords = {0};
    pair.groups = np;
    pair.key_to_group.resize(np);
    std::iota(pair.key_to_group.begin(), pair.key_to_group.end(), 0);
    pair.target = *spec.endpoint;
    pair.f.assign(np, 0.0);
    pair.is_endpoint = true;
    planned.push_back({0, 0, std::move(pair)});
  }
  for (const auto& c : spec.constraints) {
    if (c.time_index == 0 || c.time_index == K - 1) continue;  // implied by the joint
    int folded = -1, leg = 0;
    for (int j = 0; j < Kf; ++j) {
      if (fp.fwd[j] == c.time_index) {
        folded = j;
        leg = 1;
        break;
      }
      if (fp.bwd[j] == c.time_index) {
        folded = j;
        leg = 2;
        break;
      }
    }
    if (folded < 0)
      fail(ErrorKind::BadFoldGrid, "constraint time is not covered by the folded grid");
    Block b;
    b.coords = {folded};
    b.groups = n;
    b.key_to_group.resize(np);
    for (int a = 0; a < n; ++a)
      for (int d = 0; d < n; ++d) b.key_to_group[a * n + d] = (leg == 1) ? a : d;
    b.target = c.target;
    b.f.assign(n, 0.0);
    b.orig_time = c.time_index;
    planned.push_back({folded, leg, std::move(b)});
  }
  std::stable_sort(planned.begin(), planned.end(), [](const Planned& a, const Planned& b) {
    return a.folded_time != b.folded_time ? a.folded_time < b.folded_time : a.rank < b.rank;
  });
  std::vector<Block> blocks;
  for (auto& p : planned) blocks.push_back(std::move(p.block));

  IpfpRun run = run_ipfp(Rf, blocks, opts);

  DensePathMeasure Pf = Rf;
  Pf.w = run.w;
  Pf.normalized = true;
  DensePathMeasure P = unfold(Pf, fp, opts.size_guard);
  P.normalized = true;

  Potentials pot;
  std::vector<std::vector<double>> gw;
  // Collect single-time terms by original time, ascending.
  std::vector<std::pair<int, std::vector<double>>> singles;
  for (auto& b : blocks) {
    if (b.is_endpoint)
      pot.eta = std::move(b.f);
    else
      singles.emplace_back(b.orig_time, std::move(b.f));
  }
  std::sort(singles.begin(), singles.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (auto& s : singles) {
    pot.time_indices.push_back(s.first);
    pot.f.push_back(std::move(s.second));
    for (const auto& c : spec.constraints)
      if (c.time_index == pot.time_indices.back()) gw.push_back(c.target);
  }

  Solution sol;
  sol.P = std::move(P);
  center_gauge(pot, gw);
  sol.potentials = std::move(pot);
  sol.iterations = run.cycles;
  sol.residual = run.residual;
  sol.converged = run.converged;
  sol.objective = path_objective(sol.P, Rd);
  sol.diagnostics = std::move(run.diag);
  return sol;
}

// ---------------------------------------------------------------------------
// Oracle: independent multiplicative fitting on the raw tensor, visiting the
// endpoint pair first and then single times in descending order.
// ---------------------------------------------------------------------------

OracleResult oracle_minimize(const ProblemSpec& spec, const OracleOptions& opts) {
  spec.validate();
  const DensePathMeasure Rd = spec.dense_reference(opts.size_guard);
  const int n = Rd.n(), K = Rd.K();
  const std::int64_t cells = Rd.cells();

  std::vector<std::int64_t> stride(K);
  stride[K - 1] = 1;
  for (int j = K - 2; j >= 0; --j) stride[j] = stride[j + 1] * n;

  struct Fit {
    bool pair = false;
    int time = 0;
    const std::vector<double>* target;
  };
  std::vector<Fit> fits;
  if (spec.endpoint) fits.push_back({true, 0, &*spec.endpoint});
  for (auto it = spec.constraints.rbegin(); it != spec.constraints.rend(); ++it)
    fits.push_back({false, it->time_index, &it->target});

  OracleResult out;
  out.P = Rd;
  out.P.normalized = true;
  std::vector<double>& w = out.P.w;
  const double total = Rd.mass();
  for (auto& v : w) v /= total;

  std::vector<double> m;
  for (int it = 1; it <= opts.max_iter; ++it) {
    double worst = 0;
    for (const Fit& fit : fits) {
      const int groups = fit.pair ? n * n : n;
      m.assign(groups, 0.0);
      for (std::int64_t i = 0; i < cells; ++i) {
        const int g = fit.pair
                          ? static_cast<int>((i / stride[0]) % n) * n +
                                static_cast<int>(i % n)
                          : static_cast<int>((i / stride[fit.time]) % n);
        m[g] += w[i];
      }
      double tv = 0;
      for (int g = 0; g < groups; ++g) tv += std::abs(m[g] - (*fit.target)[g]);
      worst = std::max(worst, tv / 2);
      for (std::int64_t i = 0; i < cells; ++i) {
        const int g = fit.pair
                          ? static_cast<int>((i / stride[0]) % n) * n +
                                static_cast<int>(i % n)
                          : static_cast<int>((i / stride[fit.time]) % n);
        const double t = (*fit.target)[g];
        if (t <= 0) {
          w[i] = 0;
        } else {
          if (m[g] <= 0)
            fail(ErrorKind::InfeasibleProblem,
                 "oracle lost all mass on a class that keeps a positive target");
          w[i] *= t / m[g];
        }
      }
    }
    out.iterations = it;
    out.residual = worst;
    if (worst <= opts.tol) {
      out.converged = true;
      break;
    }
  }
  if (fits.empty()) {
    out.iterations = 0;
    out.residual = 0;
    out.converged = true;
  }
  out.objective = path_objective(out.P, Rd);
  return out;
}

}  // namespace bridgekit
