#include "bridgekit/additive.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

#include "bridgekit/errors.hpp"

namespace bridgekit {
namespace {

constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

bool is_unset(double v) { return std::isnan(v); }

// Advances a row-major multi-index with `k` digits in base `n`.
bool advance(std::vector<int>& coords, int n) {
  for (int j = static_cast<int>(coords.size()) - 1; j >= 0; --j) {
    if (++coords[j] < n) return true;
    coords[j] = 0;
  }
  return false;
}

std::int64_t seg_flat(const std::vector<int>& coords, int k, int l, int n) {
  std::int64_t idx = 0;
  for (int j = k; j <= l; ++j) idx = idx * n + coords[j];
  return idx;
}

std::string path_str(const StateSpace& space, const std::vector<int>& coords) {
  std::string out = "(";
  for (std::size_t j = 0; j < coords.size(); ++j) {
    if (j) out += ",";
    out += space.labels[coords[j]];
  }
  out += ")";
  return out;
}

std::string num_str(double v) {
  if (v == kNegInf) return "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

void check_same_frame(const StateSpace& a, const TimeGrid& ga, const StateSpace& b,
                      const TimeGrid& gb) {
  if (!(a == b)) fail(ErrorKind::ShapeMismatch, "state spaces differ");
  if (ga.times.size() != gb.times.size())
    fail(ErrorKind::ShapeMismatch, "time grids differ in length");
  for (std::size_t i = 0; i < ga.times.size(); ++i)
    if (!(ga.times[i] == gb.times[i])) fail(ErrorKind::ShapeMismatch, "time grids differ");
}

// Merges a value into a per-class table; returns false on a conflict.
bool merge_value(double& slot, double v, double tol) {
  if (is_unset(slot)) {
    slot = v;
    return true;
  }
  if (slot == kNegInf || v == kNegInf) return slot == v;
  return std::abs(slot - v) <= tol * std::max(1.0, std::abs(slot));
}

}  // namespace

// ---------------------------------------------------------------------------
// GridIntervalSet
// ---------------------------------------------------------------------------

static std::uint64_t bit_range(int lo, int hi) {  // inclusive; empty when lo > hi
  std::uint64_t m = 0;
  for (int j = lo; j <= hi; ++j) m |= (std::uint64_t{1} << j);
  return m;
}

GridIntervalSet GridIntervalSet::closed(int k, int l) {
  return {bit_range(k, l), bit_range(k, l - 1)};
}
GridIntervalSet GridIntervalSet::open(int k, int l) {
  if (l <= k) return {};
  return {bit_range(k + 1, l - 1), bit_range(k, l - 1)};
}
GridIntervalSet GridIntervalSet::singleton(int k) { return {bit_range(k, k), 0}; }
GridIntervalSet GridIntervalSet::half_open_left(int k, int l) {  // (t_k, t_l]
  if (l <= k) return {};
  return {bit_range(k + 1, l), bit_range(k, l - 1)};
}
GridIntervalSet GridIntervalSet::half_open_right(int k, int l) {  // [t_k, t_l)
  if (l <= k) return {};
  return {bit_range(k, l - 1), bit_range(k, l - 1)};
}

// ---------------------------------------------------------------------------
// Content
// ---------------------------------------------------------------------------

std::int64_t Content::paths() const {
  std::int64_t c = 1;
  for (int j = 0; j < K(); ++j) c *= n();
  return c;
}

int Content::pair_index(int k, int l, int K) {
  if (k < 0 || l < k || l >= K) fail(ErrorKind::BadCoords, "interval endpoints out of range");
  return k * K - k * (k - 1) / 2 + (l - k);
}

double Content::closed_value(std::int64_t path, int k, int l) const {
  const int kk = K();
  double v = 0;
  for (int j = k; j <= l; ++j) v = absorbing_add(v, points[path * kk + j]);
  for (int j = k; j < l; ++j) v = absorbing_add(v, gaps[path * (kk - 1) + j]);
  return v;
}

double Content::eval(std::int64_t path, const GridIntervalSet& I) const {
  const int kk = K();
  double v = 0;
  for (int j = 0; j < kk; ++j)
    if (I.point_mask & (std::uint64_t{1} << j)) v = absorbing_add(v, points[path * kk + j]);
  for (int j = 0; j + 1 < kk; ++j)
    if (I.gap_mask & (std::uint64_t{1} << j)) v = absorbing_add(v, gaps[path * (kk - 1) + j]);
  return v;
}

Content Content::from_points_gaps(const StateSpace& space, const TimeGrid& grid,
                                  std::vector<double> points, std::vector<double> gaps) {
  space.validate();
  grid.validate();
  Content c;
  c.space = space;
  c.grid = grid;
  const std::int64_t paths = c.paths();
  const int K = grid.size();
  if (static_cast<std::int64_t>(points.size()) != paths * K ||
      static_cast<std::int64_t>(gaps.size()) != paths * (K - 1))
    fail(ErrorKind::ShapeMismatch, "point/gap arrays do not match the path count");
  c.points = std::move(points);
  c.gaps = std::move(gaps);
  return c;
}

Content content_from_closed(const StateSpace& space, const TimeGrid& grid,
                            const std::vector<double>& closed, double tol) {
  space.validate();
  grid.validate();
  const int n = space.size();
  const int K = grid.size();
  if (K > 60) fail(ErrorKind::SizeGuard, "grid too long for interval-set bitmasks");
  const int pc = Content::pair_count(K);
  std::vector<int> shape(K, n);
  const std::int64_t cells = checked_cells(shape, kDefaultSizeGuard);
  if (static_cast<std::int64_t>(closed.size()) != cells * pc)
    fail(ErrorKind::ShapeMismatch, "closed-value array does not match path count");

  Content c;
  c.space = space;
  c.grid = grid;
  c.points.assign(cells * K, 0.0);
  c.gaps.assign(cells * (K - 1), 0.0);

  std::vector<int> coords(K, 0);
  for (std::int64_t p = 0; p < cells; ++p) {
    const double* v = &closed[p * pc];
    auto val = [&](int k, int l) { return v[Content::pair_index(k, l, K)]; };

    // Splice rule on every nested quadruple s <= u <= w <= t.
    for (int s = 0; s < K; ++s)
      for (int u = s; u < K; ++u)
        for (int w = u; w < K; ++w)
          for (int t = w; t < K; ++t) {
            const double inner = val(u, w), left = val(s, w), right = val(u, t),
                         outer = val(s, t);
            bool ok;
            if (inner == kNegInf) {
              ok = left == kNegInf && right == kNegInf && outer == kNegInf;
            } else {
              const double rhs = (left == kNegInf || right == kNegInf)
                                     ? kNegInf
                                     : left + right - inner;
              ok = (rhs == kNegInf) ? outer == kNegInf
                                    : (outer != kNegInf && std::abs(outer - rhs) <= tol);
            }
            if (!ok) {
              std::ostringstream msg;
              msg << "interval values of path " << path_str(space, coords)
                  << " violate the splice rule at [" << grid.times[s].str() << ","
                  << grid.times[w].str() << "] and [" << grid.times[u].str() << ","
                  << grid.times[t].str() << "]: inner=" << num_str(inner)
                  << " left=" << num_str(left) << " right=" << num_str(right)
                  << " outer=" << num_str(outer);
              fail(ErrorKind::IncompatibleValues, msg.str());
            }
          }

    for (int k = 0; k < K; ++k) c.points[p * K + k] = val(k, k);
    for (int k = 0; k + 1 < K; ++k) {
      const double pk = val(k, k), pk1 = val(k + 1, k + 1), pair = val(k, k + 1);
      double g;
      if (pk == kNegInf || pk1 == kNegInf)
        g = 0.0;  // indeterminate gap next to an absorbed point
      else if (pair == kNegInf)
        g = kNegInf;
      else
        g = pair - pk - pk1;
      c.gaps[p * (K - 1) + k] = g;
    }

    // The splice rule makes the point/gap form reproduce every closed value.
    for (int k = 0; k < K; ++k)
      for (int l = k; l < K; ++l) {
        const double rec = c.closed_value(p, k, l), want = val(k, l);
        const bool ok = (rec == kNegInf || want == kNegInf)
                            ? rec == want
                            : std::abs(rec - want) <= tol * (1 + std::abs(want)) * K;
        if (!ok)
          fail(ErrorKind::IncompatibleValues,
               "splice-consistent values failed the point/gap reconstruction at path " +
                   path_str(space, coords));
      }

    advance(coords, n);
  }
  return c;
}

// ---------------------------------------------------------------------------
// Additive functionals
// ---------------------------------------------------------------------------

AdditiveFunctional make_additive_functional(Content c, const DensePathMeasure& R) {
  R.validate();
  check_same_frame(c.space, c.grid, R.space, R.grid);
  const int n = c.n(), K = c.K();
  const std::int64_t cells = c.paths();

  double worst = 0;
  for (int k = 0; k < K; ++k)
    for (int l = k; l < K; ++l) {
      std::int64_t seg_cells = 1;
      for (int j = k; j <= l; ++j) seg_cells *= n;
      std::vector<double> table(seg_cells, kUnset);
      std::vector<int> coords(K, 0);
      for (std::int64_t p = 0; p < cells; ++p) {
        if (R.w[p] > 0) {
          const std::int64_t s = seg_flat(coords, k, l, n);
          const double v = c.closed_value(p, k, l);
          if (is_unset(table[s])) {
            table[s] = v;
          } else if (table[s] == kNegInf || v == kNegInf) {
            if (table[s] != v) worst = std::max(worst, 1.0);
          } else {
            worst = std::max(worst, std::abs(table[s] - v));
          }
        }
        advance(coords, n);
      }
    }
  return {std::move(c), worst};
}

AdditiveFunctional extract_additive_functional(const DensePathMeasure& P,
                                               const DensePathMeasure& R, double markov_tol) {
  P.validate();
  R.validate();
  check_same_frame(P.space, P.grid, R.space, R.grid);
  if (std::abs(P.mass() - 1.0) > kMassTol)
    fail(ErrorKind::NotProbability, "left measure must be a probability");

  const int n = P.n(), K = P.K();
  const std::int64_t cells = P.cells();
  {
    std::vector<int> coords(K, 0);
    for (std::int64_t p = 0; p < cells; ++p) {
      if (P.w[p] > 0 && R.w[p] <= 0)
        fail(ErrorKind::NotAbsolutelyContinuous,
             "left measure charges path " + path_str(P.space, coords) +
                 " which the reference does not");
      advance(coords, n);
    }
  }
  auto mp = is_markov(P, markov_tol);
  if (!mp.holds)
    fail(ErrorKind::NotMarkov, "left measure: " + (mp.witness ? mp.witness->note : std::string()) +
                                   " (residual " + num_str(mp.worst_residual) + ")");
  auto mr = is_markov(R, markov_tol);
  if (!mr.holds)
    fail(ErrorKind::NotMarkov, "reference measure: " + (mr.witness ? mr.witness->note : std::string()) +
                                   " (residual " + num_str(mr.worst_residual) + ")");

  const int pc = Content::pair_count(K);
  std::vector<double> closed(cells * pc, 0.0);
  for (int k = 0; k < K; ++k)
    for (int l = k; l < K; ++l) {
      std::vector<int> sel(static_cast<std::size_t>(l - k + 1));
      std::iota(sel.begin(), sel.end(), k);
      const FiniteMeasure Pm = marginal(P, sel);
      const FiniteMeasure Rm = marginal(R, sel);
      const int pi = Content::pair_index(k, l, K);
      std::vector<int> coords(K, 0);
      for (std::int64_t p = 0; p < cells; ++p) {
        const std::int64_t s = seg_flat(coords, k, l, n);
        double v;
        if (Rm.w[s] > 0 && Pm.w[s] > 0)
          v = std::log(Pm.w[s] / Rm.w[s]);
        else
          v = kNegInf;
        closed[p * pc + pi] = v;
        advance(coords, n);
      }
    }

  Content c = content_from_closed(P.space, P.grid, closed, 1e-10);
  return make_additive_functional(std::move(c), R);
}

// ---------------------------------------------------------------------------
// sum_decompose
// ---------------------------------------------------------------------------

namespace {

struct ForestSplit {
  bool ok = false;
  std::vector<double> row;  // potentials per row state
  std::vector<double> col;
  std::optional<CycleCertificate> certificate;
};

// Assigns row/col potentials over the present cells of g by spanning-forest
// propagation, then verifies every present cell.  On an inconsistent cell,
// returns the alternating cycle through the forest as a certificate.
ForestSplit forest_split(const std::vector<double>& g, const std::vector<bool>& present, int n,
                         double tol) {
  ForestSplit out;
  out.row.assign(n, 0.0);
  out.col.assign(n, 0.0);
  // Nodes: rows are 0..n-1, cols are n..2n-1.
  std::vector<int> parent(2 * n, -1);
  std::vector<bool> visited(2 * n, false), assigned_row(n, false), assigned_col(n, false);

  for (int root = 0; root < n; ++root) {
    bool has_edge = false;
    for (int z = 0; z < n && !has_edge; ++z) has_edge = present[root * n + z];
    if (!has_edge || visited[root]) continue;
    visited[root] = true;
    assigned_row[root] = true;
    out.row[root] = 0.0;
    std::deque<int> queue{root};
    while (!queue.empty()) {
      const int node = queue.front();
      queue.pop_front();
      if (node < n) {
        for (int z = 0; z < n; ++z)
          if (present[node * n + z] && !visited[n + z]) {
            visited[n + z] = true;
            assigned_col[z] = true;
            out.col[z] = g[node * n + z] - out.row[node];
            parent[n + z] = node;
            queue.push_back(n + z);
          }
      } else {
        const int z = node - n;
        for (int x = 0; x < n; ++x)
          if (present[x * n + z] && !visited[x]) {
            visited[x] = true;
            assigned_row[x] = true;
            out.row[x] = g[x * n + z] - out.col[z];
            parent[x] = node;
            queue.push_back(x);
          }
      }
    }
  }

  for (int x = 0; x < n; ++x)
    for (int z = 0; z < n; ++z) {
      if (!present[x * n + z]) continue;
      if (std::abs(g[x * n + z] - out.row[x] - out.col[z]) <= tol) continue;
      // Inconsistent edge: the tree path from x to z plus this edge is an
      // alternating cycle with a nonzero alternating sum.
      auto chain = [&](int node) {
        std::vector<int> c{node};
        while (parent[c.back()] >= 0) c.push_back(parent[c.back()]);
        return c;
      };
      std::vector<int> ca = chain(x), cb = chain(n + z);
      // Drop the common tail above the lowest common ancestor.
      while (ca.size() > 1 && cb.size() > 1 && ca[ca.size() - 1] == cb[cb.size() - 1] &&
             ca[ca.size() - 2] == cb[cb.size() - 2]) {
        ca.pop_back();
        cb.pop_back();
      }
      std::vector<int> route = ca;  // x ... lca
      for (int i = static_cast<int>(cb.size()) - 2; i >= 0; --i) route.push_back(cb[i]);
      CycleCertificate cert;
      for (std::size_t i = 0; i + 1 < route.size(); ++i) {
        const int a = route[i], b = route[i + 1];
        const int rx = a < n ? a : b, cz = a < n ? b - n : a - n;
        cert.cells.emplace_back(rx, cz);
      }
      cert.cells.emplace_back(x, z);  // closing edge
      double lhs = 0, rhs = 0;
      for (std::size_t i = 0; i < cert.cells.size(); ++i) {
        const double fv = g[cert.cells[i].first * n + cert.cells[i].second];
        (i % 2 == 0 ? lhs : rhs) += fv;
      }
      cert.lhs = lhs;
      cert.rhs = rhs;
      out.ok = false;
      out.certificate = std::move(cert);
      return out;
    }
  out.ok = true;
  return out;
}

}  // namespace

SumDecomposeResult sum_decompose(const std::vector<double>& f, const DensePathMeasure& R,
                                 int s_idx, int u_idx, int t_idx, const std::vector<double>& a,
                                 const std::vector<double>& b, double tol) {
  R.validate();
  const int n = R.n(), K = R.K();
  if (!(0 <= s_idx && s_idx < u_idx && u_idx < t_idx && t_idx < K))
    fail(ErrorKind::BadCoords, "need time indices s < u < t inside the grid");
  auto pow_n = [&](int len) {
    std::int64_t c = 1;
    for (int j = 0; j < len; ++j) c *= n;
    return c;
  };
  if (static_cast<std::int64_t>(f.size()) != static_cast<std::int64_t>(n) * n)
    fail(ErrorKind::ShapeMismatch, "pair function must have n*n entries");
  if (static_cast<std::int64_t>(a.size()) != pow_n(u_idx - s_idx + 1))
    fail(ErrorKind::ShapeMismatch, "first summand has wrong shape");
  if (static_cast<std::int64_t>(b.size()) != pow_n(t_idx - u_idx + 1))
    fail(ErrorKind::ShapeMismatch, "second summand has wrong shape");

  const std::int64_t n2 = static_cast<std::int64_t>(n) * n;
  std::vector<double> mass_su(n2, 0), asum_su(n2, 0), mass_ut(n2, 0), bsum_ut(n2, 0),
      mass_st(n2, 0);
  std::vector<double> mass_s(n, 0), mass_t(n, 0), mass_u(n, 0);

  std::vector<int> coords(K, 0);
  const std::int64_t cells = R.cells();
  for (std::int64_t p = 0; p < cells; ++p) {
    const double w = R.w[p];
    if (w > 0) {
      const int x = coords[s_idx], y = coords[u_idx], z = coords[t_idx];
      const double av = a[seg_flat(coords, s_idx, u_idx, n)];
      const double bv = b[seg_flat(coords, u_idx, t_idx, n)];
      const double fv = f[x * n + z];
      if (std::abs(fv - (av + bv)) > tol) {
        std::ostringstream msg;
        msg << "pair function is not the stated sum on charged path "
            << path_str(R.space, coords) << ": f=" << num_str(fv) << " a=" << num_str(av)
            << " b=" << num_str(bv);
        fail(ErrorKind::PremiseViolated, msg.str());
      }
      mass_su[x * n + y] += w;
      asum_su[x * n + y] += w * av;
      mass_ut[y * n + z] += w;
      bsum_ut[y * n + z] += w * bv;
      mass_st[x * n + z] += w;
      mass_s[x] += w;
      mass_t[z] += w;
      mass_u[y] += w;
    }
    advance(coords, n);
  }

  std::vector<int> s_states, t_states, pivots;
  for (int x = 0; x < n; ++x)
    if (mass_s[x] > 0) s_states.push_back(x);
  for (int z = 0; z < n; ++z)
    if (mass_t[z] > 0) t_states.push_back(z);
  for (int y = 0; y < n; ++y)
    if (mass_u[y] > 0) pivots.push_back(y);
  std::stable_sort(pivots.begin(), pivots.end(),
                   [&](int u, int v) { return mass_u[u] > mass_u[v]; });

  SumDecomposeResult res;
  for (int y : pivots) {
    std::vector<double> fs(n, 0), ft(n, 0);
    bool valid = true;
    for (int x : s_states) {
      const double m = mass_su[x * n + y];
      if (m <= 0) {
        valid = false;
        break;
      }
      fs[x] = asum_su[x * n + y] / m;
    }
    if (valid)
      for (int z : t_states) {
        const double m = mass_ut[y * n + z];
        if (m <= 0) {
          valid = false;
          break;
        }
        ft[z] = bsum_ut[y * n + z] / m;
      }
    if (valid)
      for (int x : s_states) {
        for (int z : t_states)
          if (mass_st[x * n + z] > 0 && std::abs(f[x * n + z] - fs[x] - ft[z]) > tol) {
            valid = false;
            break;
          }
        if (!valid) break;
      }
    if (valid) {
      res.feasible = true;
      res.f_s = std::move(fs);
      res.f_t = std::move(ft);
      res.pivot = y;
      return res;
    }
  }

  // No pivot validated: look for a four-cell violation first.
  for (std::size_t i = 0; i < s_states.size(); ++i)
    for (std::size_t i2 = i + 1; i2 < s_states.size(); ++i2)
      for (std::size_t j = 0; j < t_states.size(); ++j)
        for (std::size_t j2 = j + 1; j2 < t_states.size(); ++j2) {
          const int x = s_states[i], x2 = s_states[i2], z = t_states[j], z2 = t_states[j2];
          if (mass_st[x * n + z] <= 0 || mass_st[x * n + z2] <= 0 ||
              mass_st[x2 * n + z] <= 0 || mass_st[x2 * n + z2] <= 0)
            continue;
          const double lhs = f[x * n + z] + f[x2 * n + z2];
          const double rhs = f[x * n + z2] + f[x2 * n + z];
          if (std::abs(lhs - rhs) > tol) {
            CycleCertificate cert;
            cert.cells = {{x, z}, {x, z2}, {x2, z2}, {x2, z}};
            cert.lhs = lhs;
            cert.rhs = rhs;
            res.feasible = false;
            res.certificate = std::move(cert);
            return res;
          }
        }

  // Sparse support with no four-cell witness: spanning-forest assignment.
  std::vector<bool> present(n2, false);
  for (std::int64_t i = 0; i < n2; ++i) present[i] = mass_st[i] > 0;
  ForestSplit split = forest_split(f, present, n, tol);
  if (split.ok) {
    res.feasible = true;
    res.f_s = std::move(split.row);
    res.f_t = std::move(split.col);
    res.pivot = -1;
    return res;
  }
  res.feasible = false;
  res.certificate = std::move(split.certificate);
  return res;
}

// ---------------------------------------------------------------------------
// localize_functional
// ---------------------------------------------------------------------------

AdditiveFunctional localize_functional(const AdditiveFunctional& A, const DensePathMeasure& R,
                                       const std::vector<int>& t_indices, double tol) {
  R.validate();
  check_same_frame(A.content.space, A.content.grid, R.space, R.grid);
  const int n = R.n(), K = R.K();
  std::vector<int> T = t_indices;
  std::sort(T.begin(), T.end());
  T.erase(std::unique(T.begin(), T.end()), T.end());
  if (T.empty()) fail(ErrorKind::BadCoords, "need at least one constrained time index");
  if (T.front() < 0 || T.back() >= K)
    fail(ErrorKind::BadCoords, "constrained time index out of range");
  const auto irr = is_irreducible(R, IrreducibilityMode::MarkovPairs);
  if (!irr.holds) fail(ErrorKind::NotIrreducible, irr.witness ? irr.witness->note : "support is not pairwise tensorized");

  const int M = static_cast<int>(T.size());
  const std::int64_t cells = R.cells();

  // Per-state values of the functional at each constrained time.
  std::vector<std::vector<double>> pt(M, std::vector<double>(n, kUnset));
  {
    std::vector<int> coords(K, 0);
    for (std::int64_t p = 0; p < cells; ++p) {
      if (R.w[p] > 0)
        for (int m = 0; m < M; ++m) {
          const double v = A.content.points[p * K + T[m]];
          if (!merge_value(pt[m][coords[T[m]]], v, tol))
            fail(ErrorKind::ReconstructionFailed,
                 "single-time value at a constrained index is not a function of the state "
                 "there (path " +
                     path_str(R.space, coords) + ")");
        }
      advance(coords, n);
    }
    for (auto& tab : pt)
      for (double& v : tab)
        if (is_unset(v)) v = 0.0;
  }

  // Tabulates an interval value as a function of the state at one anchor
  // index, skipping classes already absorbed by a -inf point value.
  auto tabulate_anchor = [&](const GridIntervalSet& I, int anchor, const std::vector<double>& ap,
                             const char* what) {
    std::vector<double> tab(n, kUnset);
    if (I.empty()) {
      std::fill(tab.begin(), tab.end(), 0.0);
      return tab;
    }
    std::vector<int> coords(K, 0);
    for (std::int64_t p = 0; p < cells; ++p) {
      if (R.w[p] > 0) {
        const int x = coords[anchor];
        if (ap[x] != kNegInf) {
          const double v = A.content.eval(p, I);
          if (v == kNegInf)
            fail(ErrorKind::ReconstructionFailed,
                 std::string(what) +
                     " carries an absorbed value on a charged path with finite "
                     "constrained-time values; the functional does not localize (path " +
                     path_str(R.space, coords) + ")");
          if (!merge_value(tab[x], v, tol))
            fail(ErrorKind::ReconstructionFailed,
                 std::string(what) + " is not a function of the adjacent constrained state (path " +
                     path_str(R.space, coords) + ")");
        }
      }
      advance(coords, n);
    }
    for (double& v : tab)
      if (is_unset(v)) v = 0.0;
    return tab;
  };

  const std::vector<double> left =
      tabulate_anchor(GridIntervalSet::half_open_right(0, T.front()), T.front(), pt.front(),
                      "the segment before the first constrained time");
  const std::vector<double> right =
      tabulate_anchor(GridIntervalSet::half_open_left(T.back(), K - 1), T.back(), pt.back(),
                      "the segment after the last constrained time");

  // Split every inter-constraint open-interval value into endpoint terms.
  std::vector<std::vector<double>> alpha(std::max(0, M - 1), std::vector<double>(n, 0.0));
  std::vector<std::vector<double>> beta(std::max(0, M - 1), std::vector<double>(n, 0.0));
  for (int m = 0; m + 1 < M; ++m) {
    const int s = T[m], t = T[m + 1];
    const GridIntervalSet I = GridIntervalSet::open(s, t);
    std::vector<double> g(static_cast<std::int64_t>(n) * n, kUnset);
    std::vector<bool> present(static_cast<std::int64_t>(n) * n, false);
    std::vector<int> coords(K, 0);
    for (std::int64_t p = 0; p < cells; ++p) {
      if (R.w[p] > 0) {
        const int x = coords[s], z = coords[t];
        if (pt[m][x] != kNegInf && pt[m + 1][z] != kNegInf) {
          const double v = A.content.eval(p, I);
          if (v == kNegInf)
            fail(ErrorKind::ReconstructionFailed,
                 "an inter-constraint interval carries an absorbed value on a charged path "
                 "with finite endpoint values; the functional does not localize (path " +
                     path_str(R.space, coords) + ")");
          if (!merge_value(g[x * n + z], v, tol))
            fail(ErrorKind::ReconstructionFailed,
                 "inter-constraint interval value between t=" + R.grid.times[s].str() +
                     " and t=" + R.grid.times[t].str() +
                     " is not a function of its endpoint states (path " +
                     path_str(R.space, coords) + ")");
          present[x * n + z] = true;
        }
      }
      advance(coords, n);
    }
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n) * n; ++i)
      if (is_unset(g[i])) g[i] = 0.0;
    ForestSplit split = forest_split(g, present, n, tol);
    if (!split.ok) {
      std::ostringstream msg;
      msg << "inter-constraint interval value between t=" << R.grid.times[s].str() << " and t="
          << R.grid.times[t].str() << " does not split into endpoint terms";
      if (split.certificate) {
        msg << "; alternating cycle";
        for (auto& cell : split.certificate->cells)
          msg << " (" << R.space.labels[cell.first] << "," << R.space.labels[cell.second] << ")";
        msg << " with sums " << num_str(split.certificate->lhs) << " vs "
            << num_str(split.certificate->rhs);
      }
      fail(ErrorKind::ReconstructionFailed, msg.str());
    }
    alpha[m] = std::move(split.row);
    beta[m] = std::move(split.col);
  }

  // Assemble the localized per-state tables.
  std::vector<std::vector<double>> atil(M, std::vector<double>(n, 0.0));
  for (int m = 0; m < M; ++m)
    for (int x = 0; x < n; ++x) {
      if (pt[m][x] == kNegInf) {
        atil[m][x] = kNegInf;
        continue;
      }
      double v = pt[m][x];
      v += (m == 0) ? left[x] : beta[m - 1][x];
      v += (m == M - 1) ? right[x] : alpha[m][x];
      atil[m][x] = v;
    }

  std::vector<double> points(cells * K, 0.0), gaps(cells * (K - 1), 0.0);
  {
    std::vector<int> coords(K, 0);
    for (std::int64_t p = 0; p < cells; ++p) {
      for (int m = 0; m < M; ++m) points[p * K + T[m]] = atil[m][coords[T[m]]];
      advance(coords, n);
    }
  }
  Content out = Content::from_points_gaps(R.space, R.grid, std::move(points), std::move(gaps));

  // The localized functional must keep the total value of every charged path.
  {
    std::vector<int> coords(K, 0);
    for (std::int64_t p = 0; p < cells; ++p) {
      if (R.w[p] > 0) {
        const double told = A.content.closed_value(p, 0, K - 1);
        const double tnew = out.closed_value(p, 0, K - 1);
        const bool ok = (told == kNegInf || tnew == kNegInf)
                            ? told == tnew
                            : std::abs(told - tnew) <= tol * std::max(1.0, std::abs(told)) * K;
        if (!ok)
          fail(ErrorKind::ReconstructionFailed,
               "localized functional changes the total value of charged path " +
                   path_str(R.space, coords) + ": " + num_str(told) + " vs " + num_str(tnew));
      }
      advance(coords, n);
    }
  }
  return {std::move(out), 0.0};
}

// ---------------------------------------------------------------------------
// Potentials
// ---------------------------------------------------------------------------

namespace {

void validate_potentials(const DensePathMeasure& R, const Potentials& pot) {
  const int n = R.n(), K = R.K();
  if (pot.time_indices.size() != pot.f.size())
    fail(ErrorKind::ShapeMismatch, "one potential vector per time index required");
  for (std::size_t i = 0; i < pot.time_indices.size(); ++i) {
    const int t = pot.time_indices[i];
    if (t < 0 || t >= K) fail(ErrorKind::BadCoords, "potential time index out of range");
    if (i > 0 && pot.time_indices[i - 1] >= t)
      fail(ErrorKind::BadCoords, "potential time indices must be strictly ascending");
    if (static_cast<int>(pot.f[i].size()) != n)
      fail(ErrorKind::ShapeMismatch, "potential vector has wrong length");
  }
  if (pot.eta && static_cast<std::int64_t>(pot.eta->size()) != static_cast<std::int64_t>(n) * n)
    fail(ErrorKind::ShapeMismatch, "endpoint potential must have n*n entries");
}

std::vector<double> potentials_weights(const DensePathMeasure& R, const Potentials& pot) {
  const int n = R.n(), K = R.K();
  const std::int64_t cells = R.cells();
  std::vector<double> w(cells, 0.0);
  std::vector<int> coords(K, 0);
  for (std::int64_t p = 0; p < cells; ++p) {
    if (R.w[p] > 0) {
      double e = 0;
      for (std::size_t i = 0; i < pot.time_indices.size(); ++i)
        e = absorbing_add(e, pot.f[i][coords[pot.time_indices[i]]]);
      if (pot.eta) e = absorbing_add(e, (*pot.eta)[coords[0] * n + coords[K - 1]]);
      w[p] = (e == kNegInf) ? 0.0 : R.w[p] * std::exp(e);
    }
    advance(coords, n);
  }
  return w;
}

}  // namespace

DensePathMeasure apply_potentials(const DensePathMeasure& R, const Potentials& pot) {
  R.validate();
  validate_potentials(R, pot);
  std::vector<double> w = potentials_weights(R, pot);
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  if (!(total > 0))
    fail(ErrorKind::InfeasibleProblem, "potentials assign zero mass to every charged path");
  for (double& v : w) v /= total;
  DensePathMeasure out = R;
  out.w = std::move(w);
  out.normalized = true;
  return out;
}

double potentials_density_residual(const DensePathMeasure& P, const DensePathMeasure& R,
                                   const Potentials& pot) {
  P.validate();
  R.validate();
  check_same_frame(P.space, P.grid, R.space, R.grid);
  validate_potentials(R, pot);
  std::vector<double> q = potentials_weights(R, pot);
  const double qtot = std::accumulate(q.begin(), q.end(), 0.0);
  const double ptot = P.mass();
  if (!(qtot > 0) || !(ptot > 0)) return 1.0;
  double worst = 0;
  for (std::int64_t i = 0; i < P.cells(); ++i) {
    const double pv = P.w[i] / ptot, qv = q[i] / qtot;
    if (pv == 0 && qv == 0) continue;
    if (pv == 0 || qv == 0) return 1.0;
    worst = std::max(worst, std::abs(pv - qv) / std::max(pv, qv));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// decompose_to_potentials
// ---------------------------------------------------------------------------

Potentials decompose_to_potentials(const DensePathMeasure& P, const DensePathMeasure& R,
                                   const std::vector<int>& t_indices, bool endpoint,
                                   double tol) {
  P.validate();
  R.validate();
  check_same_frame(P.space, P.grid, R.space, R.grid);
  if (std::abs(P.mass() - 1.0) > kMassTol)
    fail(ErrorKind::NotProbability, "left measure must be a probability");
  const int n = P.n(), K = P.K();
  std::vector<int> T = t_indices;
  std::sort(T.begin(), T.end());
  T.erase(std::unique(T.begin(), T.end()), T.end());
  if (!T.empty() && (T.front() < 0 || T.back() >= K))
    fail(ErrorKind::BadCoords, "constrained time index out of range");

  Potentials pot;
  pot.time_indices = T;

  if (!endpoint) {
    if (T.empty()) {
      // Constant density: nothing to extract, normalization covers it.
      const double res = potentials_density_residual(P, R, pot);
      if (res > tol)
        fail(ErrorKind::ReconstructionFailed,
             "density is not constant while no time is constrained (residual " + num_str(res) +
                 ")");
      return pot;
    }
    const AdditiveFunctional A = extract_additive_functional(P, R);
    const AdditiveFunctional local = localize_functional(A, R, T, std::max(tol, 1e-9));
    // Read the per-state tables back off the localized functional.
    pot.f.assign(T.size(), std::vector<double>(n, kUnset));
    std::vector<int> coords(K, 0);
    for (std::int64_t p = 0; p < R.cells(); ++p) {
      if (R.w[p] > 0)
        for (std::size_t m = 0; m < T.size(); ++m) {
          double& slot = pot.f[m][coords[T[m]]];
          if (is_unset(slot)) slot = local.content.points[p * K + T[m]];
        }
      advance(coords, n);
    }
    for (auto& fv : pot.f)
      for (double& v : fv)
        if (is_unset(v)) v = kNegInf;  // states the reference never charges
  } else {
    // Tuple of determining coordinates: endpoints plus the constrained times.
    std::vector<int> tuple = T;
    tuple.insert(tuple.begin(), 0);
    tuple.push_back(K - 1);
    std::sort(tuple.begin(), tuple.end());
    tuple.erase(std::unique(tuple.begin(), tuple.end()), tuple.end());
    const int D = static_cast<int>(tuple.size());

    const FiniteMeasure Pm = marginal(P, tuple);
    const FiniteMeasure Rm = marginal(R, tuple);
    const std::int64_t tcells = Rm.cells();

    // Per-coordinate supports and mass profiles.
    std::vector<std::vector<double>> rmass(D, std::vector<double>(n, 0.0));
    std::vector<std::vector<double>> pmass(D, std::vector<double>(n, 0.0));
    {
      std::vector<int> tc(D, 0);
      for (std::int64_t i = 0; i < tcells; ++i) {
        for (int j = 0; j < D; ++j) {
          rmass[j][tc[j]] += Rm.w[i];
          pmass[j][tc[j]] += Pm.w[i];
        }
        advance(tc, n);
      }
    }
    // The support of the tuple marginal must be the product of the
    // per-coordinate supports, otherwise single-state pivots do not exist.
    std::vector<double> L(tcells, kNegInf);
    {
      std::vector<int> tc(D, 0);
      for (std::int64_t i = 0; i < tcells; ++i) {
        bool in_product = true;
        for (int j = 0; j < D; ++j) in_product = in_product && rmass[j][tc[j]] > 0;
        if (in_product && Rm.w[i] <= 0) {
          std::string msg = "reference support over the determining times is not a product at (";
          for (int j = 0; j < D; ++j)
            msg += (j ? "," : "") + R.space.labels[tc[j]];
          fail(ErrorKind::NotIrreducible, msg + ")");
        }
        if (Rm.w[i] > 0 && Pm.w[i] > 0) L[i] = std::log(Pm.w[i] / Rm.w[i]);
        advance(tc, n);
      }
    }

    std::vector<int> pivot(D, 0);
    for (int j = 0; j < D; ++j) {
      for (int x = 1; x < n; ++x)
        if (pmass[j][x] > pmass[j][pivot[j]]) pivot[j] = x;
    }
    auto tuple_flat = [&](const std::vector<int>& tc) {
      std::int64_t idx = 0;
      for (int j = 0; j < D; ++j) idx = idx * n + tc[j];
      return idx;
    };

    // Single-time terms for interior determining coordinates.
    std::vector<std::vector<double>> inner_f;
    std::vector<int> inner_times;
    const double base = L[tuple_flat(pivot)];
    for (int j = 0; j < D; ++j) {
      if (tuple[j] == 0 || tuple[j] == K - 1) continue;
      std::vector<double> fv(n, kNegInf);
      std::vector<int> tc = pivot;
      for (int x = 0; x < n; ++x) {
        tc[j] = x;
        const double lv = L[tuple_flat(tc)];
        fv[x] = (lv == kNegInf || base == kNegInf) ? kNegInf : lv - base;
      }
      inner_times.push_back(tuple[j]);
      inner_f.push_back(std::move(fv));
    }
    // Endpoint pair term.
    std::vector<double> eta(static_cast<std::int64_t>(n) * n, kNegInf);
    {
      std::vector<int> tc = pivot;
      for (int x0 = 0; x0 < n; ++x0)
        for (int x1 = 0; x1 < n; ++x1) {
          tc[0] = x0;
          tc[D - 1] = x1;
          eta[x0 * n + x1] = L[tuple_flat(tc)];
        }
    }

    pot.f.assign(T.size(), std::vector<double>(n, 0.0));
    for (std::size_t m = 0; m < T.size(); ++m) {
      const auto it = std::find(inner_times.begin(), inner_times.end(), T[m]);
      if (it != inner_times.end())
        pot.f[m] = inner_f[static_cast<std::size_t>(it - inner_times.begin())];
      // Constraints sitting at time 0 or K-1 stay zero: eta carries them.
    }
    pot.eta = std::move(eta);
  }

  // Gauge: center every single-time term except the last against the P
  // marginal; the last term (or the endpoint term) absorbs the total shift.
  {
    double carried = 0;
    const bool eta_absorbs = pot.eta.has_value();
    const std::size_t stop = eta_absorbs || pot.f.empty() ? pot.f.size() : pot.f.size() - 1;
    for (std::size_t m = 0; m < stop; ++m) {
      const FiniteMeasure mu = marginal(P, {pot.time_indices[m]});
      double mean = 0;
      bool finite = true;
      for (int x = 0; x < n; ++x) {
        if (mu.w[x] <= 0) continue;
        if (pot.f[m][x] == kNegInf) {
          finite = false;
          break;
        }
        mean += mu.w[x] * pot.f[m][x];
      }
      if (!finite) continue;  // leave as-is; the verification below decides
      for (double& v : pot.f[m])
        if (v != kNegInf) v -= mean;
      carried += mean;
    }
    if (carried != 0) {
      if (eta_absorbs) {
        for (double& v : *pot.eta)
          if (v != kNegInf) v += carried;
      } else if (!pot.f.empty()) {
        for (double& v : pot.f.back())
          if (v != kNegInf) v += carried;
      }
    }
  }

  const double res = potentials_density_residual(P, R, pot);
  if (res > tol) {
    std::ostringstream msg;
    msg << "extracted potentials do not reproduce the density (worst relative cell error "
        << num_str(res) << ")";
    fail(ErrorKind::ReconstructionFailed, msg.str());
  }
  return pot;
}

// ---------------------------------------------------------------------------
// density_measurability_check
// ---------------------------------------------------------------------------

MeasurabilityReport density_measurability_check(const DensePathMeasure& P,
                                                const DensePathMeasure& R,
                                                const std::vector<int>& coords_in, double tol) {
  P.validate();
  R.validate();
  check_same_frame(P.space, P.grid, R.space, R.grid);
  const int n = P.n(), K = P.K();
  std::vector<int> coords = coords_in;
  std::sort(coords.begin(), coords.end());
  coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
  if (coords.empty()) fail(ErrorKind::BadCoords, "need at least one coordinate");
  if (coords.front() < 0 || coords.back() >= K)
    fail(ErrorKind::BadCoords, "coordinate out of range");

  const std::int64_t cells = P.cells();
  {
    std::vector<int> path(K, 0);
    for (std::int64_t p = 0; p < cells; ++p) {
      if (P.w[p] > 0 && R.w[p] <= 0)
        fail(ErrorKind::NotAbsolutelyContinuous,
             "left measure charges path " + path_str(P.space, path) +
                 " which the reference does not");
      advance(path, n);
    }
  }

  const FiniteMeasure Pm = marginal(P, coords);
  const FiniteMeasure Rm = marginal(R, coords);
  const std::int64_t nclass = Pm.cells();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> lo(nclass, inf), hi(nclass, -inf), tv(nclass, 0.0);

  std::vector<int> path(K, 0);
  for (std::int64_t p = 0; p < cells; ++p) {
    if (R.w[p] > 0) {
      std::int64_t cls = 0;
      for (int c : coords) cls = cls * n + path[c];
      const double ratio = P.w[p] / R.w[p];
      lo[cls] = std::min(lo[cls], ratio);
      hi[cls] = std::max(hi[cls], ratio);
      if (Pm.w[cls] > 0)
        tv[cls] += std::abs(P.w[p] / Pm.w[cls] - R.w[p] / Rm.w[cls]);
    }
    advance(path, n);
  }

  MeasurabilityReport rep;
  for (std::int64_t c = 0; c < nclass; ++c) {
    if (Rm.w[c] <= 0) continue;
    rep.worst_spread = std::max(rep.worst_spread, (hi[c] - lo[c]) / std::max(1.0, hi[c]));
    const double avg = Pm.w[c] / Rm.w[c];
    rep.worst_ratio_error =
        std::max(rep.worst_ratio_error,
                 std::max(std::abs(hi[c] - avg), std::abs(lo[c] - avg)) / std::max(1.0, avg));
    if (Pm.w[c] > 0) rep.worst_conditional_tv = std::max(rep.worst_conditional_tv, tv[c] / 2);
  }
  rep.measurable = rep.worst_spread <= tol;
  rep.conditionals_match = rep.worst_conditional_tv <= tol;
  return rep;
}

}  // namespace bridgekit
