#include "stokesamg/amg.hpp"

#include <algorithm>
#include <cmath>

#include "stokesamg/errors.hpp"
#include "stokesamg/krylov.hpp"

namespace stokesamg {

namespace {

StrengthGraph graph_from_adjacency(int n, std::vector<std::vector<std::pair<int, double>>>& adj) {
  StrengthGraph g;
  g.n = n;
  g.offsets.assign(n + 1, 0);
  for (int i = 0; i < n; ++i) {
    auto& nb = adj[i];
    std::sort(nb.begin(), nb.end());
    // merge duplicates keeping the stronger weight
    size_t w = 0;
    for (size_t r = 0; r < nb.size(); ++r) {
      if (w > 0 && nb[w - 1].first == nb[r].first) {
        nb[w - 1].second = std::max(nb[w - 1].second, nb[r].second);
      } else {
        nb[w++] = nb[r];
      }
    }
    nb.resize(w);
    g.offsets[i + 1] = g.offsets[i] + static_cast<int>(w);
  }
  g.neighbors.reserve(g.offsets[n]);
  g.weights.reserve(g.offsets[n]);
  for (int i = 0; i < n; ++i) {
    for (auto& [j, s] : adj[i]) {
      g.neighbors.push_back(j);
      g.weights.push_back(s);
    }
  }
  return g;
}

}  // namespace

StrengthGraph evolution_soc(const SparseMatrix& a, double theta, int k) {
  const int n = a.nrows;
  const auto d_inv = inv_diagonal(a);
  const double rho = power_rho_estimate(a, d_inv, 10);
  const double omega = 4.0 / (3.0 * rho);
  const SparseMatrix at = transpose(a);  // row j = column j of a

  std::vector<std::vector<std::pair<int, double>>> adj(n);
  std::vector<double> z(n, 0.0), az(n, 0.0);
  std::vector<int> touched, az_touched;
  std::vector<char> in_touched(n, 0), in_az(n, 0);

  for (int j = 0; j < n; ++j) {
    // z = (I - omega D^-1 A)^k delta_j, kept sparse via touched lists
    z[j] = 1.0;
    touched = {j};
    in_touched[j] = 1;
    for (int step = 0; step < k; ++step) {
      az_touched.clear();
      for (int idx : touched) {
        const double v = z[idx];
        if (v == 0.0) continue;
        for (int q = at.row_offsets[idx]; q < at.row_offsets[idx + 1]; ++q) {
          const int i = at.col_indices[q];
          if (!in_az[i]) {
            in_az[i] = 1;
            az_touched.push_back(i);
            az[i] = 0.0;
          }
          az[i] += at.values[q] * v;
        }
      }
      for (int i : az_touched) {
        if (!in_touched[i]) {
          in_touched[i] = 1;
          touched.push_back(i);
        }
        z[i] -= omega * d_inv[i] * az[i];
        in_az[i] = 0;
      }
    }
    // measure over the support of z, i.e. the pattern of A^k around j
    const double zj = std::abs(z[j]);
    if (zj > 0.0) {
      std::sort(touched.begin(), touched.end());
      double smax = 0.0;
      for (int i : touched) {
        if (i != j) smax = std::max(smax, std::abs(z[i]) / zj);
      }
      if (smax > 0.0) {
        for (int i : touched) {
          if (i == j) continue;
          const double s = std::abs(z[i]) / zj;
          if (s > 0.0 && s >= theta * smax) {
            adj[i].push_back({j, s});
            adj[j].push_back({i, s});
          }
        }
      }
    }
    for (int idx : touched) {
      z[idx] = 0.0;
      in_touched[idx] = 0;
    }
  }
  return graph_from_adjacency(n, adj);
}

StrengthGraph symmetric_soc(const SparseMatrix& a, double theta) {
  const int n = a.nrows;
  const auto d = diagonal_of(a);
  for (int i = 0; i < n; ++i)
    if (d[i] == 0.0) throw ZeroDiagonal("symmetric_soc: zero diagonal at row " + std::to_string(i));
  std::vector<std::vector<std::pair<int, double>>> adj(n);
  for (int i = 0; i < n; ++i) {
    for (int q = a.row_offsets[i]; q < a.row_offsets[i + 1]; ++q) {
      const int j = a.col_indices[q];
      if (j == i) continue;
      const double s = std::abs(a.values[q]) / std::sqrt(std::abs(d[i] * d[j]));
      if (s >= theta) {
        adj[i].push_back({j, s});
        adj[j].push_back({i, s});
      }
    }
  }
  return graph_from_adjacency(n, adj);
}

Aggregation aggregate(const StrengthGraph& g) {
  const int n = g.n;
  Aggregation agg;
  agg.node_to_agg.assign(n, -1);
  int next = 0;
  // pass 1: seed where the whole strong neighborhood is free
  for (int i = 0; i < n; ++i) {
    if (agg.node_to_agg[i] >= 0 || g.degree(i) == 0) continue;
    bool free = true;
    for (int q = g.offsets[i]; q < g.offsets[i + 1]; ++q) {
      if (agg.node_to_agg[g.neighbors[q]] >= 0) {
        free = false;
        break;
      }
    }
    if (!free) continue;
    agg.node_to_agg[i] = next;
    for (int q = g.offsets[i]; q < g.offsets[i + 1]; ++q) agg.node_to_agg[g.neighbors[q]] = next;
    ++next;
  }
  // pass 2: attach stragglers to the strongest pass-1 aggregate
  const std::vector<int> pass1 = agg.node_to_agg;
  for (int i = 0; i < n; ++i) {
    if (pass1[i] >= 0) continue;
    int best = -1;
    double best_w = 0.0;
    for (int q = g.offsets[i]; q < g.offsets[i + 1]; ++q) {
      const int t = pass1[g.neighbors[q]];
      if (t < 0) continue;
      const double w = g.weights[q];
      if (best < 0 || w > best_w || (w == best_w && t < best)) {
        best = t;
        best_w = w;
      }
    }
    if (best >= 0) agg.node_to_agg[i] = best;
  }
  // pass 3: leftovers form new aggregates with their free strong neighbors
  for (int i = 0; i < n; ++i) {
    if (agg.node_to_agg[i] >= 0) continue;
    agg.node_to_agg[i] = next;
    for (int q = g.offsets[i]; q < g.offsets[i + 1]; ++q) {
      const int j = g.neighbors[q];
      if (agg.node_to_agg[j] < 0) agg.node_to_agg[j] = next;
    }
    ++next;
  }
  agg.num_aggregates = next;
  return agg;
}

TentativeResult tentative_prolongator_with_nullvec(const Aggregation& agg,
                                                   const std::vector<double>& nullvec) {
  const int n = static_cast<int>(agg.node_to_agg.size());
  const int nc = agg.num_aggregates;
  std::vector<double> colnorm(nc, 0.0);
  for (int i = 0; i < n; ++i) colnorm[agg.node_to_agg[i]] += nullvec[i] * nullvec[i];
  for (int c = 0; c < nc; ++c) {
    colnorm[c] = std::sqrt(colnorm[c]);
    if (colnorm[c] == 0.0)
      throw Error("tentative_prolongator: zero near-kernel over aggregate " + std::to_string(c));
  }
  std::vector<Triplet> trips;
  trips.reserve(n);
  for (int i = 0; i < n; ++i) {
    const int c = agg.node_to_agg[i];
    trips.push_back({i, c, nullvec[i] / colnorm[c]});
  }
  TentativeResult res;
  res.t = from_triplets(n, nc, std::move(trips));
  res.coarse_nullvec = std::move(colnorm);
  return res;
}

SparseMatrix tentative_prolongator(const Aggregation& agg, const std::vector<double>& nullvec) {
  return tentative_prolongator_with_nullvec(agg, nullvec).t;
}

SparseMatrix smooth_prolongator(const SparseMatrix& a, const SparseMatrix& t, double omega_frac) {
  const auto d_inv = inv_diagonal(a);
  const double rho = power_rho_estimate(a, d_inv, 10);
  const double omega = omega_frac / rho;
  SparseMatrix at = spgemm(a, t);
  for (int r = 0; r < at.nrows; ++r)
    for (int q = at.row_offsets[r]; q < at.row_offsets[r + 1]; ++q)
      at.values[q] *= omega * d_inv[r];
  return sparse_add(t, at, 1.0, -1.0);
}

namespace {

StrengthGraph build_soc(const SparseMatrix& a, const AmgConfig& cfg) {
  return cfg.use_evolution_soc ? evolution_soc(a, cfg.theta, cfg.soc_k)
                               : symmetric_soc(a, cfg.sym_theta);
}

}  // namespace

ScalarHierarchy build_scalar_hierarchy(const SparseMatrix& a, const AmgConfig& cfg) {
  ScalarHierarchy h;
  h.matrices.push_back(a);
  std::vector<double> nullvec(a.nrows, 1.0);
  while (h.levels() < cfg.max_levels) {
    const SparseMatrix& cur = h.matrices.back();
    if (cur.nrows <= cfg.coarse_size) break;
    const StrengthGraph g = build_soc(cur, cfg);
    const Aggregation agg = aggregate(g);
    if (agg.num_aggregates > 0.9 * cur.nrows) {
      h.truncated = true;
      break;
    }
    auto tent = tentative_prolongator_with_nullvec(agg, nullvec);
    SparseMatrix p = smooth_prolongator(cur, tent.t, cfg.omega_frac);
    SparseMatrix coarse = galerkin_triple(p, cur);
    h.prolongators.push_back(std::move(p));
    h.matrices.push_back(std::move(coarse));
    nullvec = std::move(tent.coarse_nullvec);
  }
  for (size_t l = 0; l + 1 < h.matrices.size(); ++l) h.d_inv.push_back(inv_diagonal(h.matrices[l]));
  h.coarse_lu = dense_lu_factor(to_dense(h.matrices.back()));
  return h;
}

namespace {

void vcycle_level(const ScalarHierarchy& h, int level, const std::vector<double>& b,
                  std::vector<double>& x) {
  if (level == h.levels() - 1) {
    x = dense_lu_solve(h.coarse_lu, b);
    return;
  }
  const SparseMatrix& a = h.matrices[level];
  const auto& d_inv = h.d_inv[level];
  auto jacobi = [&d_inv](const std::vector<double>& r, std::vector<double>& z) {
    z.resize(r.size());
    for (size_t i = 0; i < r.size(); ++i) z[i] = d_inv[i] * r[i];
  };
  FgmresOptions relax_opt;
  relax_opt.tol = 0.0;
  relax_opt.max_iters = 2;
  relax_opt.restart = 2;
  fgmres(matrix_operator(a), b, x, jacobi, relax_opt);

  std::vector<double> r = spmv(a, x);
  for (size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
  const SparseMatrix& p = h.prolongators[level];
  std::vector<double> rc = spmv(transpose(p), r);
  std::vector<double> xc(rc.size(), 0.0);
  vcycle_level(h, level + 1, rc, xc);
  std::vector<double> corr = spmv(p, xc);
  for (size_t i = 0; i < x.size(); ++i) x[i] += corr[i];

  fgmres(matrix_operator(a), b, x, jacobi, relax_opt);
}

}  // namespace

void scalar_vcycle(const ScalarHierarchy& h, const std::vector<double>& b,
                   std::vector<double>& x) {
  if (static_cast<int>(b.size()) != h.matrices.front().nrows)
    throw DimensionMismatch("scalar_vcycle: rhs size mismatch");
  if (x.size() != b.size()) x.assign(b.size(), 0.0);
  vcycle_level(h, 0, b, x);
}

MonolithicHierarchy build_monolithic_hierarchy(const SaddleSystem& sys, const AmgConfig& cfg) {
  if (sys.Ap.nrows != sys.n_p)
    throw DimensionMismatch(
        "build_monolithic_hierarchy: pressure auxiliary operator does not match the pressure "
        "space");
  MonolithicHierarchy h;
  MonolithicLevel l0;
  l0.k = assemble_saddle_matrix(sys);
  l0.n_x = sys.n_x;
  l0.n_y = sys.n_y;
  l0.n_p = sys.n_p;
  h.levels.push_back(std::move(l0));

  SparseMatrix ax = extract_block(sys.A, 0, sys.n_x, 0, sys.n_x);
  SparseMatrix ay = extract_block(sys.A, sys.n_x, sys.n_x + sys.n_y, sys.n_x, sys.n_x + sys.n_y);
  SparseMatrix ap = sys.Ap;
  std::vector<double> null_x(ax.nrows, 1.0), null_y(ay.nrows, 1.0), null_p(ap.nrows, 1.0);

  while (h.num_levels() < cfg.max_levels) {
    MonolithicLevel& cur = h.levels.back();
    if (cur.total() <= cfg.coarse_size) break;

    struct Step {
      SparseMatrix p;
      std::vector<double> coarse_null;
    };
    auto coarsen = [&cfg](const SparseMatrix& a, const std::vector<double>& nullvec,
                          bool& stagnated) -> Step {
      const StrengthGraph g = build_soc(a, cfg);
      const Aggregation agg = aggregate(g);
      if (agg.num_aggregates > 0.9 * a.nrows) {
        stagnated = true;
        return {};
      }
      auto tent = tentative_prolongator_with_nullvec(agg, nullvec);
      Step s;
      s.p = smooth_prolongator(a, tent.t, cfg.omega_frac);
      s.coarse_null = std::move(tent.coarse_nullvec);
      return s;
    };
    bool stagnated = false;
    Step sx = coarsen(ax, null_x, stagnated);
    Step sy = stagnated ? Step{} : coarsen(ay, null_y, stagnated);
    Step sp = stagnated ? Step{} : coarsen(ap, null_p, stagnated);
    if (stagnated) {
      h.truncated = true;
      break;
    }
    cur.p = block_diag({&sx.p, &sy.p, &sp.p});
    MonolithicLevel next;
    next.k = galerkin_triple(cur.p, cur.k);
    next.n_x = sx.p.ncols;
    next.n_y = sy.p.ncols;
    next.n_p = sp.p.ncols;
    ax = galerkin_triple(sx.p, ax);
    ay = galerkin_triple(sy.p, ay);
    ap = galerkin_triple(sp.p, ap);
    null_x = std::move(sx.coarse_null);
    null_y = std::move(sy.coarse_null);
    null_p = std::move(sp.coarse_null);
    h.levels.push_back(std::move(next));
  }
  return h;
}

}  // namespace stokesamg
