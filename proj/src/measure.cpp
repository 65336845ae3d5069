#include "bridgekit/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace bridgekit {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::BadCoords: return "BadCoords";
    case ErrorKind::NotProbability: return "NotProbability";
    case ErrorKind::SizeGuard: return "SizeGuard";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::NotAbsolutelyContinuous: return "NotAbsolutelyContinuous";
    case ErrorKind::NotConditionallyIndependent: return "NotConditionallyIndependent";
    case ErrorKind::NotMarkov: return "NotMarkov";
    case ErrorKind::NotIrreducible: return "NotIrreducible";
    case ErrorKind::IncompatibleValues: return "IncompatibleValues";
    case ErrorKind::PremiseViolated: return "PremiseViolated";
    case ErrorKind::ReconstructionFailed: return "ReconstructionFailed";
    case ErrorKind::InfeasibleProblem: return "InfeasibleProblem";
    case ErrorKind::BadFoldGrid: return "BadFoldGrid";
    case ErrorKind::InconsistentSupport: return "InconsistentSupport";
    case ErrorKind::PreconditionFailed: return "PreconditionFailed";
  }
  return "Error";
}

Rat Rat::from_double(double x) {
  if (!std::isfinite(x)) fail(ErrorKind::ParseError, "non-finite time value");
  // Continued-fraction convergents p/q of x until one reproduces it.
  bool neg = x < 0;
  double y = neg ? -x : x;
  std::int64_t p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  double frac = y;
  for (int it = 0; it < 64; ++it) {
    double a_fl = std::floor(frac);
    if (a_fl > 9e17) break;
    std::int64_t a = static_cast<std::int64_t>(a_fl);
    std::int64_t p2 = a * p1 + p0, q2 = a * q1 + q0;
    if (q2 > 1000000000) break;
    p0 = p1; q0 = q1; p1 = p2; q1 = q2;
    double approx = static_cast<double>(p1) / static_cast<double>(q1);
    if (std::abs(approx - y) <= 1e-12 * std::max(1.0, y)) {
      return Rat(neg ? -p1 : p1, q1);
    }
    double rem = frac - a_fl;
    if (rem < 1e-15) break;
    frac = 1.0 / rem;
  }
  fail(ErrorKind::ParseError,
       "no small rational reproduces time value " + std::to_string(x));
}

void StateSpace::validate() const {
  if (labels.empty()) fail(ErrorKind::InvalidArgument, "state space with no states");
  std::set<std::string> seen;
  for (const auto& l : labels) {
    if (l.empty()) fail(ErrorKind::InvalidArgument, "empty state label");
    if (!seen.insert(l).second)
      fail(ErrorKind::InvalidArgument, "duplicate state label '" + l + "'");
  }
}

StateSpace paired_space(const StateSpace& first, const StateSpace& second) {
  StateSpace out;
  out.labels.reserve(static_cast<size_t>(first.size()) * second.size());
  for (const auto& a : first.labels)
    for (const auto& b : second.labels) out.labels.push_back(a + "|" + b);
  return out;
}

void TimeGrid::validate() const {
  if (times.size() < 2) fail(ErrorKind::InvalidArgument, "time grid needs at least two points");
  if (times.front() != Rat(0)) fail(ErrorKind::InvalidArgument, "time grid must start at 0");
  if (times.back() != Rat(1)) fail(ErrorKind::InvalidArgument, "time grid must end at 1");
  for (size_t i = 1; i < times.size(); ++i)
    if (!(times[i - 1] < times[i]))
      fail(ErrorKind::InvalidArgument, "time grid not strictly increasing");
}

TimeGrid uniform_grid(int K) {
  if (K < 2) fail(ErrorKind::InvalidArgument, "uniform grid needs K >= 2");
  TimeGrid g;
  for (int k = 0; k < K; ++k) g.times.push_back(Rat(k, K - 1));
  return g;
}

// --- tensor plumbing --------------------------------------------------------

std::int64_t checked_cells(const std::vector<int>& shape, std::int64_t guard) {
  std::int64_t cells = 1;
  for (int s : shape) {
    if (s <= 0) fail(ErrorKind::InvalidArgument, "tensor axis of size zero");
    if (cells > guard / s)
      fail(ErrorKind::SizeGuard, "tensor of " + std::to_string(cells) + "*" +
                                     std::to_string(s) + "+ cells exceeds guard " +
                                     std::to_string(guard));
    cells *= s;
  }
  return cells;
}

namespace {

std::vector<std::int64_t> strides_for(const std::vector<int>& shape) {
  std::vector<std::int64_t> st(shape.size(), 1);
  for (int i = static_cast<int>(shape.size()) - 2; i >= 0; --i)
    st[i] = st[i + 1] * shape[i + 1];
  return st;
}

std::int64_t flat_index(const std::vector<int>& shape, const std::vector<int>& multi) {
  if (multi.size() != shape.size())
    fail(ErrorKind::BadCoords, "multi-index rank does not match tensor rank");
  std::int64_t f = 0;
  for (size_t i = 0; i < shape.size(); ++i) {
    if (multi[i] < 0 || multi[i] >= shape[i])
      fail(ErrorKind::BadCoords, "multi-index out of range at axis " + std::to_string(i));
    f = f * shape[i] + multi[i];
  }
  return f;
}

std::vector<int> unflat_index(const std::vector<int>& shape, std::int64_t flat) {
  std::vector<int> multi(shape.size());
  for (int i = static_cast<int>(shape.size()) - 1; i >= 0; --i) {
    multi[i] = static_cast<int>(flat % shape[i]);
    flat /= shape[i];
  }
  return multi;
}

void check_coords(const std::vector<int>& coords, int rank) {
  if (coords.empty()) fail(ErrorKind::BadCoords, "empty coordinate selection");
  std::set<int> seen;
  for (int c : coords) {
    if (c < 0 || c >= rank)
      fail(ErrorKind::BadCoords, "coordinate " + std::to_string(c) + " out of range");
    if (!seen.insert(c).second)
      fail(ErrorKind::BadCoords, "coordinate " + std::to_string(c) + " repeated");
  }
}

double mass_of(const std::vector<double>& w) {
  double m = 0;
  for (double x : w) m += x;
  return m;
}

void check_weights(const std::vector<double>& w, const char* what) {
  for (double x : w) {
    if (!(x >= 0) || !std::isfinite(x))
      fail(ErrorKind::InvalidArgument, std::string(what) + " has a negative or non-finite weight");
  }
}

}  // namespace

std::vector<int> FiniteMeasure::shape() const {
  std::vector<int> s;
  s.reserve(axes.size());
  for (const auto& a : axes) s.push_back(a.size());
  return s;
}

double FiniteMeasure::mass() const { return mass_of(w); }

void FiniteMeasure::validate() const {
  if (axes.empty()) fail(ErrorKind::InvalidArgument, "measure with no axes");
  std::int64_t cells = 1;
  for (const auto& a : axes) {
    a.validate();
    cells *= a.size();
  }
  if (cells != static_cast<std::int64_t>(w.size()))
    fail(ErrorKind::ShapeMismatch, "weight count " + std::to_string(w.size()) +
                                       " does not match shape product " + std::to_string(cells));
  check_weights(w, "measure");
}

std::int64_t FiniteMeasure::flat(const std::vector<int>& multi) const {
  return flat_index(shape(), multi);
}

std::vector<int> FiniteMeasure::unflat(std::int64_t f) const { return unflat_index(shape(), f); }

double DensePathMeasure::mass() const { return mass_of(w); }

void DensePathMeasure::validate() const {
  space.validate();
  grid.validate();
  std::int64_t cells = 1;
  for (int k = 0; k < K(); ++k) cells *= n();
  if (cells != static_cast<std::int64_t>(w.size()))
    fail(ErrorKind::ShapeMismatch, "path weight count does not match n^K");
  check_weights(w, "path measure");
  if (normalized && std::abs(mass() - 1.0) > kMassTol)
    fail(ErrorKind::NotProbability, "measure tagged normalized has mass " + std::to_string(mass()));
}

FiniteMeasure DensePathMeasure::as_finite() const {
  FiniteMeasure f;
  f.axes.assign(K(), space);
  f.w = w;
  return f;
}

std::int64_t DensePathMeasure::flat(const std::vector<int>& path) const {
  return flat_index(std::vector<int>(K(), n()), path);
}

std::vector<int> DensePathMeasure::unflat(std::int64_t f) const {
  return unflat_index(std::vector<int>(K(), n()), f);
}

DensePathMeasure make_dense(const StateSpace& space, const TimeGrid& grid,
                            std::vector<double> w) {
  DensePathMeasure d;
  d.space = space;
  d.grid = grid;
  d.w = std::move(w);
  d.normalized = std::abs(d.mass() - 1.0) <= kMassTol;
  d.validate();
  return d;
}

void MarkovPathMeasure::validate() const {
  space.validate();
  grid.validate();
  if (static_cast<int>(init.size()) != n())
    fail(ErrorKind::ShapeMismatch, "initial weights do not match state count");
  check_weights(init, "initial law");
  if (static_cast<int>(kernels.size()) != K() - 1)
    fail(ErrorKind::ShapeMismatch, "need exactly K-1 kernels");
  for (const auto& ker : kernels) {
    if (static_cast<int>(ker.size()) != n() * n())
      fail(ErrorKind::ShapeMismatch, "kernel is not n x n");
    check_weights(ker, "kernel");
  }
  // Each row is stochastic or identically zero, and mass never leaks: states
  // reachable with positive weight must have a stochastic row at every step.
  std::vector<char> reach(n(), 0);
  for (int x = 0; x < n(); ++x) reach[x] = init[x] > 0;
  for (int k = 0; k + 1 < K(); ++k) {
    std::vector<char> next(n(), 0);
    for (int x = 0; x < n(); ++x) {
      double row = 0;
      bool any = false;
      for (int y = 0; y < n(); ++y) {
        double v = kernels[k][x * n() + y];
        row += v;
        any = any || v > 0;
      }
      if (any && std::abs(row - 1.0) > kMassTol)
        fail(ErrorKind::InvalidArgument, "kernel " + std::to_string(k) + " row '" +
                                             space.labels[x] + "' sums to " + std::to_string(row));
      if (reach[x]) {
        if (!any)
          fail(ErrorKind::InvalidArgument, "state '" + space.labels[x] +
                                               "' reachable at step " + std::to_string(k) +
                                               " has an all-zero row");
        for (int y = 0; y < n(); ++y)
          if (kernels[k][x * n() + y] > 0) next[y] = 1;
      }
    }
    reach = next;
  }
}

DensePathMeasure markov_to_dense(const MarkovPathMeasure& m, std::int64_t size_guard) {
  m.validate();
  const int n = m.n(), K = m.K();
  std::int64_t cells = checked_cells(std::vector<int>(K, n), size_guard);
  std::vector<double> w(cells, 0.0);
  // Walk paths in row-major order with an odometer; product of init and
  // kernel entries along the way.
  std::vector<int> path(K, 0);
  for (std::int64_t f = 0; f < cells; ++f) {
    double v = m.init[path[0]];
    for (int k = 0; k + 1 < K && v > 0; ++k) v *= m.kernels[k][path[k] * n + path[k + 1]];
    w[f] = v;
    for (int k = K - 1; k >= 0; --k) {
      if (++path[k] < n) break;
      path[k] = 0;
    }
  }
  return make_dense(m.space, m.grid, std::move(w));
}

FiniteMeasure marginal(const FiniteMeasure& q, const std::vector<int>& coords) {
  check_coords(coords, q.dim());
  FiniteMeasure out;
  for (int c : coords) out.axes.push_back(q.axes[c]);
  std::vector<int> oshape = out.shape();
  std::int64_t ocells = 1;
  for (int s : oshape) ocells *= s;
  out.w.assign(ocells, 0.0);

  std::vector<int> qshape = q.shape();
  std::vector<std::int64_t> ostrides = strides_for(oshape);
  // Precompute, per source axis, its contribution to the output flat index.
  std::vector<std::int64_t> contrib(q.dim(), 0);
  for (size_t j = 0; j < coords.size(); ++j) contrib[coords[j]] = ostrides[j];

  std::vector<int> multi(q.dim(), 0);
  for (std::int64_t f = 0; f < q.cells(); ++f) {
    if (q.w[f] != 0) {
      std::int64_t of = 0;
      for (int i = 0; i < q.dim(); ++i) of += contrib[i] * multi[i];
      out.w[of] += q.w[f];
    }
    for (int i = q.dim() - 1; i >= 0; --i) {
      if (++multi[i] < qshape[i]) break;
      multi[i] = 0;
    }
  }
  return out;
}

FiniteMeasure marginal(const DensePathMeasure& q, const std::vector<int>& coords) {
  return marginal(q.as_finite(), coords);
}

Disintegration disintegrate(const FiniteMeasure& q, const std::vector<int>& coords) {
  q.validate();
  check_coords(coords, q.dim());
  if (coords.empty()) fail(ErrorKind::BadCoords, "disintegration needs at least one coordinate");
  Disintegration out;
  out.coords = coords;
  out.pushforward = marginal(q, coords);

  std::vector<int> qshape = q.shape();
  std::vector<std::int64_t> pstrides = strides_for(out.pushforward.shape());
  std::vector<std::int64_t> contrib(q.dim(), 0);
  for (size_t j = 0; j < coords.size(); ++j) contrib[coords[j]] = pstrides[j];

  std::vector<int> multi(q.dim(), 0);
  for (std::int64_t f = 0; f < q.cells(); ++f) {
    if (q.w[f] != 0) {
      std::int64_t b = 0;
      for (int i = 0; i < q.dim(); ++i) b += contrib[i] * multi[i];
      auto it = out.slices.find(b);
      if (it == out.slices.end()) {
        FiniteMeasure slice;
        slice.axes = q.axes;
        slice.w.assign(q.w.size(), 0.0);
        it = out.slices.emplace(b, std::move(slice)).first;
      }
      it->second.w[f] = q.w[f];
    }
    for (int i = q.dim() - 1; i >= 0; --i) {
      if (++multi[i] < qshape[i]) break;
      multi[i] = 0;
    }
  }
  for (auto& [b, slice] : out.slices) {
    double m = out.pushforward.w[b];
    for (double& x : slice.w) x /= m;
  }
  return out;
}

namespace {

double relative_entropy_flat(const std::vector<double>& p, const std::vector<double>& r) {
  double pm = mass_of(p);
  if (std::abs(pm - 1.0) > kMassTol)
    fail(ErrorKind::NotProbability,
         "relative entropy needs a probability on the left, mass is " + std::to_string(pm));
  double h = 0;
  for (size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0) {
      if (r[i] <= 0) return kInf;
      h += p[i] * std::log(p[i] / r[i]);
    }
  }
  return h;
}

}  // namespace

double relative_entropy(const FiniteMeasure& p, const FiniteMeasure& r) {
  if (p.shape() != r.shape()) fail(ErrorKind::ShapeMismatch, "relative entropy shape mismatch");
  return relative_entropy_flat(p.w, r.w);
}

double relative_entropy(const DensePathMeasure& p, const DensePathMeasure& r) {
  if (p.n() != r.n() || p.K() != r.K())
    fail(ErrorKind::ShapeMismatch, "relative entropy shape mismatch");
  return relative_entropy_flat(p.w, r.w);
}

bool abs_continuous(const FiniteMeasure& p, const FiniteMeasure& q) {
  if (p.shape() != q.shape()) fail(ErrorKind::ShapeMismatch, "absolute continuity shape mismatch");
  for (size_t i = 0; i < p.w.size(); ++i)
    if (p.w[i] > 0 && q.w[i] == 0) return false;
  return true;
}

bool abs_continuous(const DensePathMeasure& p, const DensePathMeasure& q) {
  if (p.n() != q.n() || p.K() != q.K())
    fail(ErrorKind::ShapeMismatch, "absolute continuity shape mismatch");
  for (size_t i = 0; i < p.w.size(); ++i)
    if (p.w[i] > 0 && q.w[i] == 0) return false;
  return true;
}

ConditioningReport check_conditioning(const FiniteMeasure& p, const FiniteMeasure& q,
                                      const std::vector<int>& phi_coords) {
  p.validate();
  q.validate();
  if (p.shape() != q.shape()) fail(ErrorKind::ShapeMismatch, "conditioning check shape mismatch");
  check_coords(phi_coords, q.dim());
  if (phi_coords.empty() || static_cast<int>(phi_coords.size()) == q.dim())
    fail(ErrorKind::BadCoords, "conditioning coordinates must be a proper nonempty subset");

  ConditioningReport rep;

  // (a) direct absolute continuity, and cell witnesses of its failure.
  rep.p_abs_continuous = true;
  for (std::int64_t f = 0; f < q.cells(); ++f) {
    if (p.w[f] > 0 && q.w[f] == 0) {
      rep.p_abs_continuous = false;
      rep.ac_witnesses.push_back(q.unflat(f));
    }
  }

  // (a) factored check: pushforward along phi, then every charged slice.
  Disintegration dp = disintegrate(p, phi_coords);
  Disintegration dq = disintegrate(q, phi_coords);
  bool factored = abs_continuous(dp.pushforward, dq.pushforward);
  if (factored) {
    for (const auto& [b, pslice] : dp.slices) {
      auto it = dq.slices.find(b);
      if (it == dq.slices.end() || !abs_continuous(pslice, it->second)) {
        factored = false;
        break;
      }
    }
  }
  rep.factor_abs_continuous = factored;
  rep.equivalence_holds = (rep.p_abs_continuous == rep.factor_abs_continuous);

  // (b) conditional supports against the X marginal, where Y = phi_coords
  // and X = the remaining coordinates.
  std::vector<int> x_coords;
  {
    std::set<int> phi(phi_coords.begin(), phi_coords.end());
    for (int i = 0; i < q.dim(); ++i)
      if (!phi.count(i)) x_coords.push_back(i);
  }
  FiniteMeasure qx = marginal(q, x_coords);
  FiniteMeasure qy = marginal(q, phi_coords);

  // Premise: q equivalent to the product of its marginals (support equality).
  {
    rep.product_equivalent = true;
    std::vector<int> qshape = q.shape();
    std::vector<int> multi(q.dim(), 0);
    for (std::int64_t f = 0; f < q.cells(); ++f) {
      std::vector<int> xm, ym;
      for (int c : x_coords) xm.push_back(multi[c]);
      for (int c : phi_coords) ym.push_back(multi[c]);
      bool prod_pos = qx.w[qx.flat(xm)] > 0 && qy.w[qy.flat(ym)] > 0;
      if ((q.w[f] > 0) != prod_pos) {
        rep.product_equivalent = false;
        break;
      }
      for (int i = q.dim() - 1; i >= 0; --i) {
        if (++multi[i] < qshape[i]) break;
        multi[i] = 0;
      }
    }
  }

  // Conclusion: for every charged y, the conditional X law has exactly the
  // support of q_X.  Violations listed either way (missing or extra).
  for (std::int64_t yf = 0; yf < qy.cells(); ++yf) {
    if (qy.w[yf] <= 0) continue;
    // X marginal of the conditional given Y = y.
    std::vector<double> slice_x(qx.cells(), 0.0);
    std::vector<int> qshape = q.shape();
    std::vector<int> multi(q.dim(), 0);
    for (std::int64_t f = 0; f < q.cells(); ++f) {
      if (q.w[f] != 0) {
        std::vector<int> xm, ym;
        for (int c : x_coords) xm.push_back(multi[c]);
        for (int c : phi_coords) ym.push_back(multi[c]);
        if (qy.flat(ym) == yf) slice_x[qx.flat(xm)] += q.w[f];
      }
      for (int i = q.dim() - 1; i >= 0; --i) {
        if (++multi[i] < qshape[i]) break;
        multi[i] = 0;
      }
    }
    for (std::int64_t xf = 0; xf < qx.cells(); ++xf) {
      bool in_qx = qx.w[xf] > 0, in_slice = slice_x[xf] > 0;
      if (in_qx != in_slice) {
        rep.slice_violations.push_back({yf, qy.unflat(yf), xf, qx.unflat(xf), in_qx});
      }
    }
  }
  return rep;
}

SuperadditivityReport superadditivity_check(const FiniteMeasure& pi, const FiniteMeasure& r1,
                                            const FiniteMeasure& r2) {
  pi.validate();
  r1.validate();
  r2.validate();
  if (pi.dim() != 2) fail(ErrorKind::ShapeMismatch, "superadditivity needs a two-axis joint");
  if (r1.dim() != 1 || r2.dim() != 1 || pi.axes[0].size() != r1.axes[0].size() ||
      pi.axes[1].size() != r2.axes[0].size())
    fail(ErrorKind::ShapeMismatch, "factor references do not match the joint axes");

  FiniteMeasure prod;
  prod.axes = pi.axes;
  prod.w.assign(pi.w.size(), 0.0);
  int n2 = r2.axes[0].size();
  for (int i = 0; i < r1.axes[0].size(); ++i)
    for (int j = 0; j < n2; ++j) prod.w[static_cast<std::int64_t>(i) * n2 + j] = r1.w[i] * r2.w[j];

  if (!abs_continuous(pi, prod))
    fail(ErrorKind::NotAbsolutelyContinuous,
         "joint charges a cell outside the product of the references");

  SuperadditivityReport rep;
  rep.lhs = relative_entropy(pi, prod);
  rep.rhs = relative_entropy(marginal(pi, {0}), r1) + relative_entropy(marginal(pi, {1}), r2);
  rep.gap = rep.lhs - rep.rhs;
  return rep;
}

double tv_distance(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) fail(ErrorKind::ShapeMismatch, "total variation shape mismatch");
  double pm = mass_of(p), qm = mass_of(q);
  if (pm <= 0 || qm <= 0) fail(ErrorKind::InvalidArgument, "total variation of a zero-mass vector");
  double s = 0;
  for (size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] / pm - q[i] / qm);
  return 0.5 * s;
}

double weighted_sum(const std::vector<double>& w, const std::vector<double>& v) {
  if (w.size() != v.size()) fail(ErrorKind::ShapeMismatch, "weighted sum shape mismatch");
  double s = 0;
  for (size_t i = 0; i < w.size(); ++i)
    if (w[i] != 0) s += w[i] * v[i];
  return s;
}

}  // namespace bridgekit
