#include "bridgekit/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bridgekit/additive.hpp"
#include "bridgekit/errors.hpp"

namespace bridgekit {

namespace {

std::int64_t path_flat(const std::vector<int>& coords, int n) {
  std::int64_t idx = 0;
  for (int c : coords) idx = idx * n + c;
  return idx;
}

}  // namespace

// ---------------------------------------------------------------------------
// Counterexample fixtures
// ---------------------------------------------------------------------------

CounterexampleFixture entangled_endpoints_fixture() {
  CounterexampleFixture fx;
  fx.name = "entangled-endpoints";
  StateSpace space{{"x1", "x2", "a1", "ah", "a2", "m", "z1", "z2"}};
  TimeGrid grid{{Rat{0, 1}, Rat{1, 4}, Rat{1, 2}, Rat{1, 1}}};
  const int n = space.size();
  const std::int64_t cells = 8LL * 8 * 8 * 8;
  std::vector<double> w(cells, 0.0);
  const int x1 = 0, x2 = 1, a1 = 2, ah = 3, a2 = 4, m = 5, z1 = 6, z2 = 7;
  w[path_flat({x1, a1, m, z2}, n)] = 0.25;
  w[path_flat({x1, ah, m, z1}, n)] = 0.25;
  w[path_flat({x2, a2, m, z1}, n)] = 0.25;
  w[path_flat({x2, a2, m, z2}, n)] = 0.25;
  fx.R = make_dense(space, grid, std::move(w));

  fx.s_idx = 0;
  fx.u_idx = 2;
  fx.t_idx = 3;
  fx.f.assign(static_cast<std::size_t>(n) * n, 0.0);
  fx.f[x1 * n + z1] = 1.0;
  fx.a.assign(static_cast<std::size_t>(n) * n * n, 0.0);
  fx.a[(static_cast<std::size_t>(x1) * n + ah) * n + m] = 1.0;
  fx.b.assign(static_cast<std::size_t>(n) * n, 0.0);
  fx.expected =
      "no endpoint split exists; the four endpoint pairs form a cycle whose alternating "
      "sum is 1, and the measure is neither Markov nor reciprocal";
  return fx;
}

CounterexampleFixture reducible_markov_fixture() {
  CounterexampleFixture fx;
  fx.name = "reducible-markov";
  StateSpace space{{"x1", "x2", "m1", "m2", "z1", "z2", "z3"}};
  TimeGrid grid{{Rat{0, 1}, Rat{1, 2}, Rat{1, 1}}};
  const int n = space.size();
  const int x1 = 0, x2 = 1, m1 = 2, m2 = 3, z1 = 4, z2 = 5, z3 = 6;

  MarkovPathMeasure chain;
  chain.space = space;
  chain.grid = grid;
  chain.init.assign(n, 0.0);
  chain.init[x1] = 0.5;
  chain.init[x2] = 0.5;
  chain.kernels.assign(2, std::vector<double>(static_cast<std::size_t>(n) * n, 0.0));
  chain.kernels[0][x1 * n + m1] = 0.5;
  chain.kernels[0][x1 * n + m2] = 0.5;
  chain.kernels[0][x2 * n + m1] = 0.5;
  chain.kernels[0][x2 * n + m2] = 0.5;
  chain.kernels[1][m1 * n + z1] = 1.0;
  chain.kernels[1][m2 * n + z2] = 0.5;
  chain.kernels[1][m2 * n + z3] = 0.5;
  fx.R = markov_to_dense(chain, kDefaultSizeGuard);

  fx.s_idx = 0;
  fx.u_idx = 1;
  fx.t_idx = 2;
  fx.f.assign(static_cast<std::size_t>(n) * n, 0.0);
  fx.f[x1 * n + z1] = 2.0;
  fx.f[x1 * n + z2] = 2.0;
  fx.f[x1 * n + z3] = 3.0;
  fx.f[x2 * n + z1] = 2.0;
  fx.f[x2 * n + z2] = 3.0;
  fx.f[x2 * n + z3] = 4.0;
  fx.a.assign(static_cast<std::size_t>(n) * n, 0.0);
  fx.a[x1 * n + m1] = 1.0;
  fx.a[x1 * n + m2] = 0.0;
  fx.a[x2 * n + m1] = 1.0;
  fx.a[x2 * n + m2] = 1.0;
  fx.b.assign(static_cast<std::size_t>(n) * n, 0.0);
  fx.b[m1 * n + z1] = 1.0;
  fx.b[m2 * n + z2] = 2.0;
  fx.b[m2 * n + z3] = 3.0;
  fx.expected =
      "the chain is Markov but its second transition support is reducible, so every pivot "
      "is starved and a four-cell cycle is violated";
  return fx;
}

const std::vector<std::string>& fixture_names() {
  static const std::vector<std::string> names{"entangled-endpoints", "reducible-markov"};
  return names;
}

CounterexampleFixture fixture_by_name(const std::string& name) {
  if (name == "entangled-endpoints") return entangled_endpoints_fixture();
  if (name == "reducible-markov") return reducible_markov_fixture();
  fail(ErrorKind::InvalidArgument,
       "unknown fixture '" + name + "'; available: entangled-endpoints, reducible-markov");
}

// ---------------------------------------------------------------------------
// Seeded generators
// ---------------------------------------------------------------------------

MarkovPathMeasure random_chain(std::uint64_t seed, int n, int K, double structural_zero_rate) {
  if (n < 1 || K < 2) fail(ErrorKind::InvalidArgument, "need n >= 1 and K >= 2");
  Rng rng(seed);
  MarkovPathMeasure m;
  m.space.labels.resize(n);
  for (int i = 0; i < n; ++i) m.space.labels[i] = "s" + std::to_string(i);
  m.grid = uniform_grid(K);
  m.init.resize(n);
  double tot = 0;
  for (int i = 0; i < n; ++i) {
    m.init[i] = rng.uniform(0.2, 1.0);
    tot += m.init[i];
  }
  for (double& v : m.init) v /= tot;
  m.kernels.assign(K - 1, std::vector<double>(static_cast<std::size_t>(n) * n, 0.0));
  for (int k = 0; k < K - 1; ++k)
    for (int x = 0; x < n; ++x) {
      double row = 0;
      for (int y = 0; y < n; ++y) {
        const double keep = rng.uniform();
        const double v = rng.uniform(0.2, 1.0);
        if (keep >= structural_zero_rate) {
          m.kernels[k][x * n + y] = v;
          row += v;
        }
      }
      if (row == 0) {
        const int y = rng.index(n);
        m.kernels[k][x * n + y] = 1.0;
        row = 1.0;
      }
      for (int y = 0; y < n; ++y) m.kernels[k][x * n + y] /= row;
    }
  m.validate();
  return m;
}

MarkovPathMeasure random_dominated_chain(std::uint64_t seed, const MarkovPathMeasure& ref,
                                         double drop_rate) {
  ref.validate();
  Rng rng(seed);
  const int n = ref.space.size();
  const int K = ref.grid.size();
  MarkovPathMeasure m;
  m.space = ref.space;
  m.grid = ref.grid;
  m.init.assign(n, 0.0);
  {
    double tot = 0;
    for (int i = 0; i < n; ++i) {
      const bool keep = ref.init[i] > 0 && rng.uniform() >= drop_rate;
      const double v = rng.uniform(0.2, 1.0);
      if (keep) {
        m.init[i] = v;
        tot += v;
      }
    }
    if (tot == 0) {
      // revive one reference-positive entry
      std::vector<int> pos;
      for (int i = 0; i < n; ++i)
        if (ref.init[i] > 0) pos.push_back(i);
      m.init[pos[rng.index(static_cast<int>(pos.size()))]] = 1.0;
      tot = 1.0;
    }
    for (double& v : m.init) v /= tot;
  }
  m.kernels.assign(K - 1, std::vector<double>(static_cast<std::size_t>(n) * n, 0.0));
  for (int k = 0; k < K - 1; ++k)
    for (int x = 0; x < n; ++x) {
      std::vector<int> pos;
      for (int y = 0; y < n; ++y)
        if (ref.kernels[k][x * n + y] > 0) pos.push_back(y);
      if (pos.empty()) continue;  // unreachable row in the reference
      double row = 0;
      for (int y : pos) {
        const bool keep = rng.uniform() >= drop_rate;
        const double v = rng.uniform(0.2, 1.0);
        if (keep) {
          m.kernels[k][x * n + y] = v;
          row += v;
        }
      }
      if (row == 0) {
        m.kernels[k][x * n + pos[rng.index(static_cast<int>(pos.size()))]] = 1.0;
        row = 1.0;
      }
      for (int y = 0; y < n; ++y) m.kernels[k][x * n + y] /= row;
    }
  m.validate();
  return m;
}

DensePathMeasure random_reciprocal(std::uint64_t seed, int n, int K) {
  Rng rng(seed ^ 0x9e3779b97f4a7c15ull);
  MarkovPathMeasure chain = random_chain(seed, n, K, 0.0);
  DensePathMeasure d = markov_to_dense(chain, kDefaultSizeGuard);
  std::vector<double> g(static_cast<std::size_t>(n) * n);
  for (double& v : g) v = rng.uniform(0.2, 1.0);
  std::vector<int> coords(K, 0);
  double tot = 0;
  for (std::int64_t p = 0; p < d.cells(); ++p) {
    d.w[p] *= g[coords[0] * n + coords[K - 1]];
    tot += d.w[p];
    for (int j = K - 1; j >= 0; --j) {
      if (++coords[j] < n) break;
      coords[j] = 0;
    }
  }
  for (double& v : d.w) v /= tot;
  d.normalized = true;
  return d;
}

DensePathMeasure random_positive_dense(std::uint64_t seed, int n, int K) {
  Rng rng(seed);
  StateSpace space;
  space.labels.resize(n);
  for (int i = 0; i < n; ++i) space.labels[i] = "s" + std::to_string(i);
  const TimeGrid grid = uniform_grid(K);
  std::vector<int> shape(K, n);
  const std::int64_t cells = checked_cells(shape, kDefaultSizeGuard);
  std::vector<double> w(cells);
  double tot = 0;
  for (auto& v : w) {
    v = rng.uniform(0.2, 1.0);
    tot += v;
  }
  for (auto& v : w) v /= tot;
  return make_dense(space, grid, std::move(w));
}

// ---------------------------------------------------------------------------
// Planted pair-splitting instances
// ---------------------------------------------------------------------------

SumInstance planted_split_instance(std::uint64_t seed, int n, int K, int s_idx, int u_idx,
                                   int t_idx) {
  if (!(0 <= s_idx && s_idx < u_idx && u_idx < t_idx && t_idx < K))
    fail(ErrorKind::BadCoords, "need s < u < t inside the grid");
  Rng rng(seed ^ 0xabcdef12345ull);
  SumInstance inst;
  inst.s_idx = s_idx;
  inst.u_idx = u_idx;
  inst.t_idx = t_idx;
  inst.splittable = true;
  MarkovPathMeasure chain = random_chain(seed, n, K, 0.25);
  inst.R = markov_to_dense(chain, kDefaultSizeGuard);

  std::vector<double> fs(n), ft(n), c(n);
  for (auto& v : fs) v = rng.uniform(-1.0, 1.0);
  for (auto& v : ft) v = rng.uniform(-1.0, 1.0);
  for (auto& v : c) v = rng.uniform(-1.0, 1.0);

  inst.f.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int x = 0; x < n; ++x)
    for (int z = 0; z < n; ++z) inst.f[x * n + z] = fs[x] + ft[z];

  auto fill = [&](std::vector<double>& out, int lo, int hi, bool first_leg) {
    std::int64_t cnt = 1;
    for (int j = lo; j <= hi; ++j) cnt *= n;
    out.assign(cnt, 0.0);
    std::vector<int> seg(hi - lo + 1, 0);
    for (std::int64_t i = 0; i < cnt; ++i) {
      if (first_leg)
        out[i] = fs[seg.front()] + c[seg.back()];
      else
        out[i] = ft[seg.back()] - c[seg.front()];
      for (int j = static_cast<int>(seg.size()) - 1; j >= 0; --j) {
        if (++seg[j] < n) break;
        seg[j] = 0;
      }
    }
  };
  fill(inst.a, s_idx, u_idx, true);
  fill(inst.b, u_idx, t_idx, false);
  return inst;
}

SumInstance planted_violation_instance(std::uint64_t seed, int nx, int nz) {
  if (nx < 2 || nz < 2) fail(ErrorKind::InvalidArgument, "need at least two states per side");
  Rng rng(seed ^ 0x5ca1ab1eull);
  SumInstance inst;
  inst.s_idx = 0;
  inst.u_idx = 1;
  inst.t_idx = 2;
  inst.splittable = false;

  // States: nx starts, one corridor per (start, end) pair, nz ends.
  const int nm = nx * nz;
  const int n = nx + nm + nz;
  StateSpace space;
  space.labels.reserve(n);
  for (int i = 0; i < nx; ++i) space.labels.push_back("x" + std::to_string(i));
  for (int i = 0; i < nm; ++i) space.labels.push_back("m" + std::to_string(i));
  for (int i = 0; i < nz; ++i) space.labels.push_back("z" + std::to_string(i));
  const TimeGrid grid = uniform_grid(3);

  std::vector<double> alpha(nx), betav(nz);
  for (auto& v : alpha) v = rng.uniform(-1.0, 1.0);
  for (auto& v : betav) v = rng.uniform(-1.0, 1.0);
  const double defect = 0.15 + 0.5 * rng.uniform();

  inst.f.assign(static_cast<std::size_t>(n) * n, 0.0);
  auto zstate = [&](int j) { return nx + nm + j; };
  auto mstate = [&](int i, int j) { return nx + i * nz + j; };
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < nz; ++j) {
      double v = alpha[i] + betav[j];
      if (i == 0 && j == 0) v += defect;
      inst.f[i * n + zstate(j)] = v;
    }

  const std::int64_t cells = static_cast<std::int64_t>(n) * n * n;
  std::vector<double> w(cells, 0.0);
  double tot = 0;
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < nz; ++j) {
      const double mass = rng.uniform(0.2, 1.0);
      w[(static_cast<std::int64_t>(i) * n + mstate(i, j)) * n + zstate(j)] = mass;
      tot += mass;
    }
  for (auto& v : w) v /= tot;
  inst.R = make_dense(space, grid, std::move(w));

  inst.a.assign(static_cast<std::size_t>(n) * n, 0.0);
  inst.b.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < nz; ++j)
      inst.a[i * n + mstate(i, j)] = inst.f[i * n + zstate(j)];
  return inst;
}

// ---------------------------------------------------------------------------
// Random feasible problems
// ---------------------------------------------------------------------------

ProblemSpec random_feasible_problem(std::uint64_t seed, int n, int K, int num_constraints,
                                    bool with_endpoint, double structural_zero_rate) {
  if (num_constraints > K)
    fail(ErrorKind::InvalidArgument, "cannot constrain more times than the grid has");
  Rng rng(seed ^ 0xfeedface1234ull);
  ProblemSpec spec;
  spec.markov_ref = random_chain(seed, n, K, structural_zero_rate);
  const DensePathMeasure Rd = markov_to_dense(*spec.markov_ref, kDefaultSizeGuard);

  // Targets come from an exact product-potential reweighting of the
  // reference, so they are always jointly attainable.
  Potentials pot;
  std::vector<int> all(K);
  std::iota(all.begin(), all.end(), 0);
  // choose constrained times: always include interior spread; shuffle by rng
  for (int i = K - 1; i > 0; --i) std::swap(all[i], all[rng.index(i + 1)]);
  std::vector<int> chosen(all.begin(), all.begin() + num_constraints);
  std::sort(chosen.begin(), chosen.end());
  pot.time_indices = chosen;
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    std::vector<double> fv(n);
    for (auto& v : fv) v = rng.uniform(-0.8, 0.8);
    pot.f.push_back(std::move(fv));
  }
  if (with_endpoint) {
    std::vector<double> eta(static_cast<std::size_t>(n) * n);
    for (auto& v : eta) v = rng.uniform(-0.8, 0.8);
    pot.eta = std::move(eta);
  }
  const DensePathMeasure Q = apply_potentials(Rd, pot);

  for (int t : chosen) {
    MarginalConstraint c;
    c.time_index = t;
    const FiniteMeasure m = marginal(Q, {t});
    c.target = m.w;
    spec.constraints.push_back(std::move(c));
  }
  if (with_endpoint) {
    const FiniteMeasure m = marginal(Q, {0, K - 1});
    spec.endpoint = m.w;
  }
  spec.validate();
  return spec;
}

}  // namespace bridgekit
