#include "bridgekit/structure.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace bridgekit {

const char* structure_property_name(StructureProperty p) {
  switch (p) {
    case StructureProperty::Markov: return "markov";
    case StructureProperty::Reciprocal: return "reciprocal";
    case StructureProperty::IrreducibleMarkovPairs: return "irreducible_markov_pairs";
    case StructureProperty::IrreducibleReciprocalTriples: return "irreducible_reciprocal_triples";
  }
  return "?";
}

namespace {

std::vector<double> normalized_weights(const DensePathMeasure& q) {
  double m = q.mass();
  if (m <= 0) fail(ErrorKind::InvalidArgument, "structure check on a zero-mass measure");
  std::vector<double> w = q.w;
  for (double& x : w) x /= m;
  return w;
}

// Flat index of a path restricted to a coordinate block, the block in
// ascending order, base n.
inline std::int64_t block_flat(const std::vector<int>& path, const std::vector<int>& block, int n) {
  std::int64_t f = 0;
  for (int c : block) f = f * n + path[c];
  return f;
}

// TV residual of a joint over (U, V) cells against the product of its
// marginals, all computed from raw (unnormalized) weights.
double product_residual(const std::vector<double>& joint, std::int64_t ucells,
                        std::int64_t vcells) {
  double mass = 0;
  std::vector<double> mu(ucells, 0.0), mv(vcells, 0.0);
  for (std::int64_t u = 0; u < ucells; ++u)
    for (std::int64_t v = 0; v < vcells; ++v) {
      double x = joint[u * vcells + v];
      mass += x;
      mu[u] += x;
      mv[v] += x;
    }
  if (mass <= 0) return 0;
  double r = 0;
  for (std::int64_t u = 0; u < ucells; ++u)
    for (std::int64_t v = 0; v < vcells; ++v)
      r += std::abs(joint[u * vcells + v] / mass - (mu[u] / mass) * (mv[v] / mass));
  return 0.5 * r;
}

}  // namespace

StructureReport is_markov(const DensePathMeasure& q, double tol) {
  q.validate();
  const int n = q.n(), K = q.K();
  std::vector<double> w = normalized_weights(q);

  StructureReport rep;
  rep.property = StructureProperty::Markov;
  rep.worst_residual = 0;

  for (int k = 1; k + 1 < K; ++k) {
    std::vector<int> past, future;
    for (int i = 0; i < k; ++i) past.push_back(i);
    for (int i = k + 1; i < K; ++i) future.push_back(i);
    std::int64_t pcells = 1, fcells = 1;
    for (size_t i = 0; i < past.size(); ++i) pcells *= n;
    for (size_t i = 0; i < future.size(); ++i) fcells *= n;

    // One joint (past, future) table per conditioning state.
    std::vector<std::vector<double>> joint(n);
    std::vector<double> cond_mass(n, 0.0);
    std::vector<int> path(K, 0);
    for (std::int64_t f = 0; f < q.cells(); ++f) {
      if (w[f] > 0) {
        int x = path[k];
        if (joint[x].empty()) joint[x].assign(pcells * fcells, 0.0);
        joint[x][block_flat(path, past, n) * fcells + block_flat(path, future, n)] += w[f];
        cond_mass[x] += w[f];
      }
      for (int i = K - 1; i >= 0; --i) {
        if (++path[i] < n) break;
        path[i] = 0;
      }
    }
    for (int x = 0; x < n; ++x) {
      if (cond_mass[x] <= 0) continue;  // state not charged at t_k: skipped
      double r = product_residual(joint[x], pcells, fcells);
      if (r > rep.worst_residual) {
        rep.worst_residual = r;
        rep.witness = StructureWitness{
            {k}, {x}, "conditional split at index " + std::to_string(k) + ", state '" +
                          q.space.labels[x] + "'"};
      }
    }
  }
  rep.holds = rep.worst_residual <= tol;
  if (rep.holds) rep.witness.reset();
  return rep;
}

StructureReport is_reciprocal(const DensePathMeasure& q, double tol) {
  q.validate();
  const int n = q.n(), K = q.K();
  std::vector<double> w = normalized_weights(q);

  StructureReport rep;
  rep.property = StructureProperty::Reciprocal;
  rep.worst_residual = 0;

  for (int k = 0; k < K; ++k) {
    for (int l = k + 1; l < K; ++l) {
      std::vector<int> inside, outside;
      for (int i = k + 1; i < l; ++i) inside.push_back(i);
      for (int i = 0; i < k; ++i) outside.push_back(i);
      for (int i = l + 1; i < K; ++i) outside.push_back(i);
      if (inside.empty() || outside.empty()) continue;  // a side is pinned: trivially independent
      std::int64_t icells = 1, ocells = 1;
      for (size_t i = 0; i < inside.size(); ++i) icells *= n;
      for (size_t i = 0; i < outside.size(); ++i) ocells *= n;

      std::vector<std::vector<double>> joint(n * n);
      std::vector<int> path(K, 0);
      for (std::int64_t f = 0; f < q.cells(); ++f) {
        if (w[f] > 0) {
          int xy = path[k] * n + path[l];
          if (joint[xy].empty()) joint[xy].assign(icells * ocells, 0.0);
          joint[xy][block_flat(path, inside, n) * ocells + block_flat(path, outside, n)] += w[f];
        }
        for (int i = K - 1; i >= 0; --i) {
          if (++path[i] < n) break;
          path[i] = 0;
        }
      }
      for (int xy = 0; xy < n * n; ++xy) {
        if (joint[xy].empty()) continue;  // endpoint pair not charged: skipped
        double r = product_residual(joint[xy], icells, ocells);
        if (r > rep.worst_residual) {
          rep.worst_residual = r;
          rep.witness = StructureWitness{
              {k, l},
              {xy / n, xy % n},
              "window (" + std::to_string(k) + "," + std::to_string(l) + ") pinned at ('" +
                  q.space.labels[xy / n] + "','" + q.space.labels[xy % n] + "')"};
        }
      }
    }
  }
  rep.holds = rep.worst_residual <= tol;
  if (rep.holds) rep.witness.reset();
  return rep;
}

StructureReport is_irreducible(const DensePathMeasure& q, IrreducibilityMode mode) {
  q.validate();
  const int n = q.n(), K = q.K();

  StructureReport rep;
  rep.property = mode == IrreducibilityMode::MarkovPairs
                     ? StructureProperty::IrreducibleMarkovPairs
                     : StructureProperty::IrreducibleReciprocalTriples;
  rep.worst_residual = 0;
  rep.holds = true;

  // Per-index supports.
  std::vector<std::vector<char>> supp(K, std::vector<char>(n, 0));
  std::vector<int> path(K, 0);
  for (std::int64_t f = 0; f < q.cells(); ++f) {
    if (q.w[f] > 0)
      for (int k = 0; k < K; ++k) supp[k][path[k]] = 1;
    for (int i = K - 1; i >= 0; --i) {
      if (++path[i] < n) break;
      path[i] = 0;
    }
  }

  auto check_tuple = [&](const std::vector<int>& idx) -> std::optional<StructureWitness> {
    // Joint support over the tuple.
    std::int64_t cells = 1;
    for (size_t i = 0; i < idx.size(); ++i) cells *= n;
    std::vector<char> joint(cells, 0);
    std::vector<int> p(K, 0);
    for (std::int64_t f = 0; f < q.cells(); ++f) {
      if (q.w[f] > 0) joint[block_flat(p, idx, n)] = 1;
      for (int i = K - 1; i >= 0; --i) {
        if (++p[i] < n) break;
        p[i] = 0;
      }
    }
    // Compare against the product of single-index supports.
    std::vector<int> states(idx.size(), 0);
    for (std::int64_t f = 0; f < cells; ++f) {
      bool prod = true;
      for (size_t i = 0; i < idx.size(); ++i) prod = prod && supp[idx[i]][states[i]];
      if (prod && !joint[f]) {
        std::string note = "missing joint support at";
        for (size_t i = 0; i < idx.size(); ++i)
          note += " t" + std::to_string(idx[i]) + "='" + q.space.labels[states[i]] + "'";
        return StructureWitness{idx, states, note};
      }
      for (int i = static_cast<int>(idx.size()) - 1; i >= 0; --i) {
        if (++states[i] < n) break;
        states[i] = 0;
      }
    }
    return std::nullopt;
  };

  auto consider = [&](const std::vector<int>& idx) {
    if (!rep.holds) return;
    if (auto wit = check_tuple(idx)) {
      rep.holds = false;
      rep.worst_residual = 1;
      rep.witness = std::move(wit);
    }
  };

  if (mode == IrreducibilityMode::MarkovPairs) {
    for (int s = 0; s < K && rep.holds; ++s)
      for (int t = s + 1; t < K && rep.holds; ++t) consider({s, t});
  } else {
    for (int s = 0; s < K && rep.holds; ++s)
      for (int u = s + 1; u < K && rep.holds; ++u)
        for (int t = u + 1; t < K && rep.holds; ++t) consider({s, u, t});
    // With fewer than three grid points there is no triple; fall back to
    // pairs so the guarantee is still meaningful.
    if (K < 3)
      for (int s = 0; s < K && rep.holds; ++s)
        for (int t = s + 1; t < K && rep.holds; ++t) consider({s, t});
  }
  return rep;
}

TransitionDensity transition_density(const DensePathMeasure& q, int s_idx, int t_idx) {
  q.validate();
  const int n = q.n(), K = q.K();
  if (s_idx < 0 || t_idx >= K || s_idx >= t_idx)
    fail(ErrorKind::BadCoords, "transition density needs grid indices s < t");
  double m = q.mass();
  if (m <= 0) fail(ErrorKind::InvalidArgument, "transition density of a zero-mass measure");

  FiniteMeasure joint = marginal(q, {s_idx, t_idx});
  FiniteMeasure ms = marginal(q, {s_idx});
  FiniteMeasure mt = marginal(q, {t_idx});

  TransitionDensity d;
  d.s_index = s_idx;
  d.t_index = t_idx;
  d.n = n;
  d.values.assign(static_cast<size_t>(n) * n, 0.0);
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y) {
      double denom = (ms.w[x] / m) * (mt.w[y] / m);
      if (denom > 0) d.values[x * n + y] = (joint.w[x * n + y] / m) / denom;
    }
  return d;
}

CondFactorization conditional_factorize(const FiniteMeasure& p, const FiniteMeasure& r,
                                        const std::vector<int>& a_coords,
                                        const std::vector<int>& b_coords,
                                        const std::vector<int>& c_coords, double tol) {
  p.validate();
  r.validate();
  if (p.shape() != r.shape()) fail(ErrorKind::ShapeMismatch, "factorization shape mismatch");
  // The three blocks must partition the coordinates.
  {
    std::vector<int> all;
    all.insert(all.end(), a_coords.begin(), a_coords.end());
    all.insert(all.end(), b_coords.begin(), b_coords.end());
    all.insert(all.end(), c_coords.begin(), c_coords.end());
    std::vector<int> sorted = all;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < static_cast<int>(sorted.size()); ++i)
      if (sorted[i] != i || static_cast<int>(sorted.size()) != p.dim())
        fail(ErrorKind::BadCoords, "A, B, C must partition the coordinates");
    if (a_coords.empty() || b_coords.empty())
      fail(ErrorKind::BadCoords, "A and B must be nonempty");
  }
  if (!abs_continuous(p, r))
    fail(ErrorKind::NotAbsolutelyContinuous, "density change charges a null cell of the reference");

  double pm = p.mass(), rm = r.mass();
  if (std::abs(pm - 1.0) > kMassTol)
    fail(ErrorKind::NotProbability, "factorization needs a probability numerator");
  if (rm <= 0) fail(ErrorKind::InvalidArgument, "zero-mass reference");

  // Check A independent of B given C under r, conditioning slice by slice.
  const std::vector<int> shape = r.shape();
  auto sub_flat = [&](const std::vector<int>& multi, const std::vector<int>& coords) {
    std::int64_t f = 0;
    for (int c : coords) f = f * shape[c] + multi[c];
    return f;
  };
  std::int64_t acells = 1, bcells = 1, ccells = 1;
  for (int c : a_coords) acells *= shape[c];
  for (int c : b_coords) bcells *= shape[c];
  for (int c : c_coords) ccells *= shape[c];

  {
    std::vector<std::vector<double>> joint(ccells);
    std::vector<int> multi(p.dim(), 0);
    for (std::int64_t f = 0; f < r.cells(); ++f) {
      if (r.w[f] > 0) {
        std::int64_t cf = c_coords.empty() ? 0 : sub_flat(multi, c_coords);
        if (joint[cf].empty()) joint[cf].assign(acells * bcells, 0.0);
        joint[cf][sub_flat(multi, a_coords) * bcells + sub_flat(multi, b_coords)] += r.w[f];
      }
      for (int i = p.dim() - 1; i >= 0; --i) {
        if (++multi[i] < shape[i]) break;
        multi[i] = 0;
      }
    }
    for (std::int64_t cf = 0; cf < ccells; ++cf) {
      if (joint[cf].empty()) continue;
      double res = product_residual(joint[cf], acells, bcells);
      if (res > tol)
        fail(ErrorKind::NotConditionallyIndependent,
             "reference violates the conditional split at slice " + std::to_string(cf) +
                 " (residual " + std::to_string(res) + ")");
    }
  }

  // Marginal density ratios (normalized measures), eq-style:
  //   gamma = d p_C / d r_C,  alpha = (d p_{AC} / d r_{AC}) / gamma,  beta sym.
  std::vector<int> ac = a_coords, bc = b_coords;
  ac.insert(ac.end(), c_coords.begin(), c_coords.end());
  bc.insert(bc.end(), c_coords.begin(), c_coords.end());

  FiniteMeasure pac = marginal(p, ac), rac = marginal(r, ac);
  FiniteMeasure pbc = marginal(p, bc), rbc = marginal(r, bc);

  CondFactorization out;
  out.a_coords = a_coords;
  out.b_coords = b_coords;
  out.c_coords = c_coords;
  out.gamma.assign(ccells, 0.0);
  out.alpha.assign(acells * ccells, 0.0);
  out.beta.assign(bcells * ccells, 0.0);

  if (c_coords.empty()) {
    out.gamma.assign(1, 1.0);
  } else {
    FiniteMeasure pc = marginal(p, c_coords), rc = marginal(r, c_coords);
    for (std::int64_t cf = 0; cf < ccells; ++cf)
      if (rc.w[cf] > 0) out.gamma[cf] = (pc.w[cf] / pm) / (rc.w[cf] / rm);
  }
  for (std::int64_t f = 0; f < acells * ccells; ++f) {
    std::int64_t cf = f % std::max<std::int64_t>(ccells, 1);
    if (rac.w[f] > 0 && out.gamma[cf] > 0)
      out.alpha[f] = ((pac.w[f] / pm) / (rac.w[f] / rm)) / out.gamma[cf];
  }
  for (std::int64_t f = 0; f < bcells * ccells; ++f) {
    std::int64_t cf = f % std::max<std::int64_t>(ccells, 1);
    if (rbc.w[f] > 0 && out.gamma[cf] > 0)
      out.beta[f] = ((pbc.w[f] / pm) / (rbc.w[f] / rm)) / out.gamma[cf];
  }

  // The factorization must rebuild dp/dr on supp(r); if it does not, the
  // numerator lacks the conditional split (the converse direction).
  {
    std::vector<int> multi(p.dim(), 0);
    for (std::int64_t f = 0; f < r.cells(); ++f) {
      if (r.w[f] > 0) {
        std::int64_t af = sub_flat(multi, a_coords);
        std::int64_t bf = sub_flat(multi, b_coords);
        std::int64_t cf = c_coords.empty() ? 0 : sub_flat(multi, c_coords);
        double rebuilt = out.alpha[af * ccells + cf] * out.beta[bf * ccells + cf] * out.gamma[cf];
        double direct = (p.w[f] / pm) / (r.w[f] / rm);
        if (std::abs(rebuilt - direct) > tol * std::max(1.0, std::abs(direct)))
          fail(ErrorKind::NotConditionallyIndependent,
               "density change does not factor through the conditional split at cell " +
                   std::to_string(f) + " (rebuilt " + std::to_string(rebuilt) + ", direct " +
                   std::to_string(direct) + ")");
      }
      for (int i = p.dim() - 1; i >= 0; --i) {
        if (++multi[i] < shape[i]) break;
        multi[i] = 0;
      }
    }
  }
  return out;
}

// --- folding ----------------------------------------------------------------

FoldParameters fold_parameters(const StateSpace& space, const TimeGrid& grid, const Rat& lambda) {
  space.validate();
  grid.validate();
  if (!(Rat(0) < lambda && lambda < Rat(1)))
    fail(ErrorKind::BadFoldGrid, "fold parameter must lie strictly inside (0,1)");
  const auto& ts = grid.times;
  const int K = grid.size();
  int m = -1;
  for (int k = 0; k < K; ++k)
    if (ts[k] == lambda) m = k;
  if (m <= 0 || m >= K - 1)
    fail(ErrorKind::BadFoldGrid, "fold parameter " + lambda.str() + " is not an interior grid point");

  // Forward leg: tau = t_k / lambda for t_k <= lambda.
  // Backward leg: tau = (1 - t_l) / (1 - lambda) for t_l >= lambda.
  // Admissible iff the two tau sets coincide (then both legs stay on the
  // grid at every folded time, and indices 0..m / m..K-1 are all covered).
  std::vector<Rat> ftau, btau;
  for (int k = 0; k <= m; ++k) ftau.push_back(ts[k] / lambda);
  for (int l = m; l < K; ++l) btau.push_back((Rat(1) - ts[l]) / (Rat(1) - lambda));
  std::sort(btau.begin(), btau.end());
  if (ftau != btau)
    fail(ErrorKind::BadFoldGrid, "legs of the fold at " + lambda.str() +
                                     " induce different folded grids (" +
                                     std::to_string(ftau.size()) + " vs " +
                                     std::to_string(btau.size()) + " points or mismatched times)");

  FoldParameters fp;
  fp.lambda = lambda;
  fp.original_space = space;
  fp.original_grid = grid;
  fp.folded_grid.times = ftau;
  fp.folded_grid.validate();
  for (const Rat& tau : ftau) {
    Rat tf = lambda * tau;
    Rat tb = Rat(1) - (Rat(1) - lambda) * tau;
    int fi = -1, bi = -1;
    for (int k = 0; k < K; ++k) {
      if (ts[k] == tf) fi = k;
      if (ts[k] == tb) bi = k;
    }
    if (fi < 0 || bi < 0) fail(ErrorKind::BadFoldGrid, "internal: folded time off the grid");
    fp.fwd.push_back(fi);
    fp.bwd.push_back(bi);
  }
  // Coverage: every original index on exactly one leg, except the meeting
  // index m carried consistently by both at folded time 1.
  std::vector<int> covered(K, 0);
  for (int j = 0; j < static_cast<int>(ftau.size()); ++j) {
    covered[fp.fwd[j]]++;
    if (fp.bwd[j] != fp.fwd[j]) covered[fp.bwd[j]]++;
  }
  for (int k = 0; k < K; ++k)
    if (covered[k] != 1)
      fail(ErrorKind::BadFoldGrid, "original index " + std::to_string(k) +
                                       " covered " + std::to_string(covered[k]) + " times");
  return fp;
}

std::vector<Rat> admissible_lambdas(const TimeGrid& grid) {
  std::vector<Rat> out;
  for (int k = 1; k + 1 < grid.size(); ++k) {
    try {
      fold_parameters(StateSpace{{"0"}}, grid, grid.times[k]);
      out.push_back(grid.times[k]);
    } catch (const Error& e) {
      if (e.kind != ErrorKind::BadFoldGrid) throw;
    }
  }
  return out;
}

DensePathMeasure fold(const DensePathMeasure& q, const FoldParameters& fp,
                      std::int64_t size_guard) {
  q.validate();
  if (!(q.space == fp.original_space) || !(q.grid == fp.original_grid))
    fail(ErrorKind::ShapeMismatch, "fold parameters were built for a different measure shape");
  const int n = q.n(), K = q.K();
  const int J = fp.folded_grid.size();
  StateSpace pspace = paired_space(q.space, q.space);
  std::int64_t cells = checked_cells(std::vector<int>(J, n * n), size_guard);

  std::vector<double> w(cells, 0.0);
  std::vector<int> path(K, 0);
  for (std::int64_t f = 0; f < q.cells(); ++f) {
    if (q.w[f] > 0) {
      std::int64_t pf = 0;
      for (int j = 0; j < J; ++j) pf = pf * (n * n) + (path[fp.fwd[j]] * n + path[fp.bwd[j]]);
      w[pf] += q.w[f];
    }
    for (int i = K - 1; i >= 0; --i) {
      if (++path[i] < n) break;
      path[i] = 0;
    }
  }
  DensePathMeasure out;
  out.space = pspace;
  out.grid = fp.folded_grid;
  out.w = std::move(w);
  out.normalized = std::abs(out.mass() - 1.0) <= kMassTol;
  return out;
}

DensePathMeasure unfold(const DensePathMeasure& folded, const FoldParameters& fp,
                        std::int64_t size_guard) {
  folded.validate();
  const int n = fp.original_space.size();
  const int K = fp.original_grid.size();
  const int J = fp.folded_grid.size();
  if (folded.n() != n * n || folded.K() != J)
    fail(ErrorKind::ShapeMismatch, "folded measure does not match the fold parameters");
  std::int64_t cells = checked_cells(std::vector<int>(K, n), size_guard);

  std::vector<double> w(cells, 0.0);
  std::vector<int> fpath(J, 0);
  for (std::int64_t f = 0; f < folded.cells(); ++f) {
    if (folded.w[f] > 0) {
      std::vector<int> orig(K, -1);
      bool ok = true;
      for (int j = 0; j < J && ok; ++j) {
        int first = fpath[j] / n, second = fpath[j] % n;
        if (orig[fp.fwd[j]] >= 0 && orig[fp.fwd[j]] != first) ok = false;
        orig[fp.fwd[j]] = first;
        if (orig[fp.bwd[j]] >= 0 && orig[fp.bwd[j]] != second) ok = false;
        orig[fp.bwd[j]] = second;
      }
      if (!ok)
        fail(ErrorKind::InconsistentSupport,
             "positive mass outside the folded image at folded cell " + std::to_string(f));
      std::int64_t of = 0;
      for (int k = 0; k < K; ++k) of = of * n + orig[k];
      w[of] += folded.w[f];
    }
    for (int i = J - 1; i >= 0; --i) {
      if (++fpath[i] < folded.n()) break;
      fpath[i] = 0;
    }
  }
  DensePathMeasure out;
  out.space = fp.original_space;
  out.grid = fp.original_grid;
  out.w = std::move(w);
  out.normalized = std::abs(out.mass() - 1.0) <= kMassTol;
  return out;
}

bool tensorization_check(const DensePathMeasure& q, const std::vector<int>& indices,
                         double structure_tol) {
  q.validate();
  if (indices.size() < 2) fail(ErrorKind::BadCoords, "tensorization needs at least two indices");
  {
    std::set<int> seen;
    for (int i : indices) {
      if (i < 0 || i >= q.K()) fail(ErrorKind::BadCoords, "tensorization index out of range");
      if (!seen.insert(i).second) fail(ErrorKind::BadCoords, "tensorization index repeated");
    }
  }
  StructureReport rec = is_reciprocal(q, structure_tol);
  if (!rec.holds)
    fail(ErrorKind::PreconditionFailed, "tensorization requires a reciprocal measure (residual " +
                                            std::to_string(rec.worst_residual) + ")");
  StructureReport irr = is_irreducible(q, IrreducibilityMode::ReciprocalTriples);
  if (!irr.holds)
    fail(ErrorKind::PreconditionFailed,
         "tensorization requires triple-irreducibility (" +
             (irr.witness ? irr.witness->note : std::string("support gap")) + ")");

  std::vector<int> idx = indices;
  std::sort(idx.begin(), idx.end());
  const int n = q.n(), K = q.K();
  // Joint support over the tuple vs product of single supports.
  std::vector<std::vector<char>> supp(K, std::vector<char>(n, 0));
  std::int64_t cells = 1;
  for (size_t i = 0; i < idx.size(); ++i) cells *= n;
  std::vector<char> joint(cells, 0);
  std::vector<int> path(K, 0);
  for (std::int64_t f = 0; f < q.cells(); ++f) {
    if (q.w[f] > 0) {
      for (int k = 0; k < K; ++k) supp[k][path[k]] = 1;
      std::int64_t jf = 0;
      for (int c : idx) jf = jf * n + path[c];
      joint[jf] = 1;
    }
    for (int i = K - 1; i >= 0; --i) {
      if (++path[i] < n) break;
      path[i] = 0;
    }
  }
  std::vector<int> states(idx.size(), 0);
  for (std::int64_t f = 0; f < cells; ++f) {
    bool prod = true;
    for (size_t i = 0; i < idx.size(); ++i) prod = prod && supp[idx[i]][states[i]];
    if (prod != (joint[f] != 0)) return false;
    for (int i = static_cast<int>(idx.size()) - 1; i >= 0; --i) {
      if (++states[i] < n) break;
      states[i] = 0;
    }
  }
  return true;
}

}  // namespace bridgekit
