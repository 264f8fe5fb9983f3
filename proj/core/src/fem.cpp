#include "stokesamg/fem.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "stokesamg/errors.hpp"

namespace stokesamg {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Degree-4 rule on the reference triangle, barycentric points with weights
// summing to one.
struct TriQuad {
  std::array<double, 3> lambda;
  double weight;
};

const std::array<TriQuad, 6>& tri_quadrature() {
  static const double a1 = 0.445948490915965;
  static const double w1 = 0.223381589678011;
  static const double a2 = 0.091576213509771;
  static const double w2 = 0.109951743655322;
  static const std::array<TriQuad, 6> q = {{
      {{a1, a1, 1 - 2 * a1}, w1},
      {{a1, 1 - 2 * a1, a1}, w1},
      {{1 - 2 * a1, a1, a1}, w1},
      {{a2, a2, 1 - 2 * a2}, w2},
      {{a2, 1 - 2 * a2, a2}, w2},
      {{1 - 2 * a2, a2, a2}, w2},
  }};
  return q;
}

// 3-point Gauss on [0,1].
struct LineQuad {
  double s;
  double weight;
};
const std::array<LineQuad, 3>& line_quadrature() {
  static const double c = std::sqrt(3.0 / 5.0);
  static const std::array<LineQuad, 3> q = {{
      {0.5 * (1 - c), 5.0 / 18.0},
      {0.5, 8.0 / 18.0},
      {0.5 * (1 + c), 5.0 / 18.0},
  }};
  return q;
}

struct TriGeometry {
  double area;
  std::array<std::array<double, 2>, 3> grad_lambda;
  std::array<std::array<double, 2>, 3> corner;
};

TriGeometry tri_geometry(const SimplicialMesh2D& m, int t) {
  TriGeometry g;
  for (int k = 0; k < 3; ++k) g.corner[k] = m.vertices[m.triangles[t][k]];
  const auto& a = g.corner[0];
  const auto& b = g.corner[1];
  const auto& c = g.corner[2];
  const double twoA = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
  g.area = 0.5 * twoA;
  g.grad_lambda[0] = {(b[1] - c[1]) / twoA, (c[0] - b[0]) / twoA};
  g.grad_lambda[1] = {(c[1] - a[1]) / twoA, (a[0] - c[0]) / twoA};
  g.grad_lambda[2] = {(a[1] - b[1]) / twoA, (b[0] - a[0]) / twoA};
  return g;
}

std::array<double, 2> point_at(const TriGeometry& g, const std::array<double, 3>& lam) {
  return {lam[0] * g.corner[0][0] + lam[1] * g.corner[1][0] + lam[2] * g.corner[2][0],
          lam[0] * g.corner[0][1] + lam[1] * g.corner[1][1] + lam[2] * g.corner[2][1]};
}

// P2 basis: 0..2 vertex functions, 3..5 edge functions (3+i on the edge
// opposite vertex i).
std::array<double, 6> p2_values(const std::array<double, 3>& l) {
  std::array<double, 6> n;
  for (int i = 0; i < 3; ++i) n[i] = l[i] * (2 * l[i] - 1);
  for (int i = 0; i < 3; ++i) n[3 + i] = 4 * l[(i + 1) % 3] * l[(i + 2) % 3];
  return n;
}

std::array<std::array<double, 2>, 6> p2_gradients(const TriGeometry& g,
                                                  const std::array<double, 3>& l) {
  std::array<std::array<double, 2>, 6> dn;
  for (int i = 0; i < 3; ++i) {
    dn[i] = {(4 * l[i] - 1) * g.grad_lambda[i][0], (4 * l[i] - 1) * g.grad_lambda[i][1]};
  }
  for (int i = 0; i < 3; ++i) {
    const int p = (i + 1) % 3, q = (i + 2) % 3;
    dn[3 + i] = {4 * (l[p] * g.grad_lambda[q][0] + l[q] * g.grad_lambda[p][0]),
                 4 * (l[p] * g.grad_lambda[q][1] + l[q] * g.grad_lambda[p][1])};
  }
  return dn;
}

// Scalar P2 DoF indices of triangle t: vertices then V + edge index.
std::array<int, 6> p2_dofs(const SimplicialMesh2D& m, int t) {
  std::array<int, 6> d;
  for (int k = 0; k < 3; ++k) d[k] = m.triangles[t][k];
  for (int k = 0; k < 3; ++k) d[3 + k] = m.num_vertices() + m.tri_edges[t][k];
  return d;
}

std::vector<std::array<double, 2>> p2_dof_coords(const SimplicialMesh2D& m) {
  std::vector<std::array<double, 2>> c = m.vertices;
  c.reserve(m.num_vertices() + m.num_edges());
  for (const auto& e : m.edges) {
    c.push_back({0.5 * (m.vertices[e[0]][0] + m.vertices[e[1]][0]),
                 0.5 * (m.vertices[e[0]][1] + m.vertices[e[1]][1])});
  }
  return c;
}

// Dirichlet nodal values per scalar DoF, P2 space.
std::map<int, std::array<double, 2>> p2_dirichlet_values(const SimplicialMesh2D& m,
                                                         const ProblemData& prob) {
  std::map<int, std::array<double, 2>> vals;
  for (const auto& be : m.boundary_edges) {
    if (be.tag == BoundaryTag::Neumann) continue;
    const auto& pa = m.vertices[be.a];
    const auto& pb = m.vertices[be.b];
    vals[be.a] = prob.dirichlet(be.tag, pa[0], pa[1]);
    vals[be.b] = prob.dirichlet(be.tag, pb[0], pb[1]);
    const int mid = m.num_vertices() + m.edge_index(be.a, be.b);
    vals[mid] = prob.dirichlet(be.tag, 0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1]));
  }
  return vals;
}

std::map<int, std::array<double, 2>> p1_dirichlet_values(const SimplicialMesh2D& m,
                                                         const ProblemData& prob) {
  std::map<int, std::array<double, 2>> vals;
  for (const auto& be : m.boundary_edges) {
    if (be.tag == BoundaryTag::Neumann) continue;
    const auto& pa = m.vertices[be.a];
    const auto& pb = m.vertices[be.b];
    vals[be.a] = prob.dirichlet(be.tag, pa[0], pa[1]);
    vals[be.b] = prob.dirichlet(be.tag, pb[0], pb[1]);
  }
  return vals;
}

void check_compatibility(const SimplicialMesh2D& m, const ProblemData& prob) {
  if (!prob.check_compatibility) return;
  bool has_neumann = false;
  for (const auto& be : m.boundary_edges)
    if (be.tag == BoundaryTag::Neumann) has_neumann = true;
  if (has_neumann) return;
  // enclosed flow: boundary flux must vanish
  double flux = 0.0;
  double scale = 0.0;
  for (const auto& be : m.boundary_edges) {
    const auto& pa = m.vertices[be.a];
    const auto& pb = m.vertices[be.b];
    const double tx = pb[0] - pa[0], ty = pb[1] - pa[1];
    const double len = std::hypot(tx, ty);
    scale += len;
    // boundary edges are stored unoriented; integrate g.n with the outward
    // normal inferred from the incident triangle
    // normal candidates: (ty, -tx)/len and its negation; pick the one pointing
    // away from the triangle's third vertex.
    std::array<double, 2> n{ty / len, -tx / len};
    // find incident triangle
    for (int t = 0; t < m.num_triangles(); ++t) {
      const auto& tri = m.triangles[t];
      int other = -1;
      int found = 0;
      for (int k = 0; k < 3; ++k) {
        if (tri[k] == be.a || tri[k] == be.b)
          ++found;
        else
          other = tri[k];
      }
      if (found == 2 && other >= 0) {
        const auto& po = m.vertices[other];
        const double dx = po[0] - 0.5 * (pa[0] + pb[0]);
        const double dy = po[1] - 0.5 * (pa[1] + pb[1]);
        if (n[0] * dx + n[1] * dy > 0) {
          n[0] = -n[0];
          n[1] = -n[1];
        }
        break;
      }
    }
    for (const auto& q : line_quadrature()) {
      const double x = pa[0] + q.s * tx;
      const double y = pa[1] + q.s * ty;
      const auto g = prob.dirichlet(be.tag, x, y);
      flux += q.weight * len * (g[0] * n[0] + g[1] * n[1]);
    }
  }
  if (std::abs(flux) > 1e-10 * std::max(scale, 1.0)) {
    throw CompatibilityError("enclosed flow with nonzero net boundary flux");
  }
}

struct ScalarReduction {
  std::vector<int> old_to_new;  // -1 for constrained
  std::vector<int> kept;        // new -> old
};

ScalarReduction make_reduction(int n, const std::map<int, std::array<double, 2>>& constrained) {
  ScalarReduction r;
  r.old_to_new.assign(n, -1);
  for (int i = 0; i < n; ++i) {
    if (!constrained.count(i)) {
      r.old_to_new[i] = static_cast<int>(r.kept.size());
      r.kept.push_back(i);
    }
  }
  return r;
}

// Reduce a scalar operator: returns A[free,free] and accumulates the Dirichlet
// lift A[free,cons]*g into lift_x / lift_y.
SparseMatrix reduce_scalar(const SparseMatrix& a, const ScalarReduction& red,
                           const std::map<int, std::array<double, 2>>& vals,
                           std::vector<double>& lift_x, std::vector<double>& lift_y) {
  std::vector<Triplet> trips;
  for (int r = 0; r < a.nrows; ++r) {
    const int rn = red.old_to_new[r];
    if (rn < 0) continue;
    for (int k = a.row_offsets[r]; k < a.row_offsets[r + 1]; ++k) {
      const int c = a.col_indices[k];
      const int cn = red.old_to_new[c];
      if (cn >= 0) {
        trips.push_back({rn, cn, a.values[k]});
      } else {
        const auto& g = vals.at(c);
        lift_x[rn] += a.values[k] * g[0];
        lift_y[rn] += a.values[k] * g[1];
      }
    }
  }
  const int ns = static_cast<int>(red.kept.size());
  return from_triplets(ns, ns, std::move(trips));
}

// Reduce the full-width divergence operator (columns [x-block | y-block], each
// of scalar width n_s) and accumulate the continuity lift into rhs_p.
SparseMatrix reduce_divergence(const SparseMatrix& b_full, int n_s, const ScalarReduction& red,
                               const std::map<int, std::array<double, 2>>& vals,
                               std::vector<double>& rhs_p) {
  const int ns_red = static_cast<int>(red.kept.size());
  std::vector<Triplet> trips;
  for (int r = 0; r < b_full.nrows; ++r) {
    for (int k = b_full.row_offsets[r]; k < b_full.row_offsets[r + 1]; ++k) {
      const int c = b_full.col_indices[k];
      const int comp = c / n_s;
      const int sc = c % n_s;
      const int cn = red.old_to_new[sc];
      if (cn >= 0) {
        trips.push_back({r, comp * ns_red + cn, b_full.values[k]});
      } else {
        const auto& g = vals.at(sc);
        rhs_p[r] -= b_full.values[k] * (comp == 0 ? g[0] : g[1]);
      }
    }
  }
  return from_triplets(b_full.nrows, 2 * ns_red, std::move(trips));
}

}  // namespace

ProblemData bfs_problem() {
  ProblemData p;
  p.dirichlet = [](BoundaryTag tag, double, double y) -> std::array<double, 2> {
    if (tag == BoundaryTag::DirichletInflow) return {4.0 * y * (1.0 - y), 0.0};
    return {0.0, 0.0};
  };
  return p;
}

ProblemData channel_problem() {
  ProblemData p;
  p.dirichlet = [](BoundaryTag tag, double, double y) -> std::array<double, 2> {
    if (tag == BoundaryTag::DirichletInflow) return {4.0 * y * (1.0 - y), 0.0};
    return {0.0, 0.0};
  };
  return p;
}

ProblemData zero_problem() { return ProblemData{}; }

SparseMatrix assemble_saddle_matrix(const SaddleSystem& sys) {
  const int nu = sys.n_u();
  const int n = sys.total_dofs();
  std::vector<Triplet> trips;
  trips.reserve(sys.A.nnz() + 2 * sys.B.nnz());
  for (int r = 0; r < sys.A.nrows; ++r)
    for (int k = sys.A.row_offsets[r]; k < sys.A.row_offsets[r + 1]; ++k)
      trips.push_back({r, sys.A.col_indices[k], sys.A.values[k]});
  for (int r = 0; r < sys.B.nrows; ++r) {
    for (int k = sys.B.row_offsets[r]; k < sys.B.row_offsets[r + 1]; ++k) {
      trips.push_back({nu + r, sys.B.col_indices[k], sys.B.values[k]});
      trips.push_back({sys.B.col_indices[k], nu + r, sys.B.values[k]});
    }
  }
  return from_triplets(n, n, std::move(trips));
}

SparseMatrix assemble_p1_stiffness(const SimplicialMesh2D& m) {
  std::vector<Triplet> trips;
  trips.reserve(m.num_triangles() * 9);
  for (int t = 0; t < m.num_triangles(); ++t) {
    const TriGeometry g = tri_geometry(m, t);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        const double v = g.area * (g.grad_lambda[i][0] * g.grad_lambda[j][0] +
                                   g.grad_lambda[i][1] * g.grad_lambda[j][1]);
        trips.push_back({m.triangles[t][i], m.triangles[t][j], v});
      }
    }
  }
  return from_triplets(m.num_vertices(), m.num_vertices(), std::move(trips));
}

SparseMatrix assemble_p1_mass(const SimplicialMesh2D& m) {
  std::vector<Triplet> trips;
  trips.reserve(m.num_triangles() * 9);
  for (int t = 0; t < m.num_triangles(); ++t) {
    const double a = m.signed_area(t);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        trips.push_back({m.triangles[t][i], m.triangles[t][j], a / 12.0 * (i == j ? 2.0 : 1.0)});
  }
  return from_triplets(m.num_vertices(), m.num_vertices(), std::move(trips));
}

SparseMatrix p1_interpolation(const SimplicialMesh2D& m, const SimplicialMesh2D& m_fine,
                              const RefinementMap& map) {
  if (static_cast<int>(map.vertex_origin.size()) != m_fine.num_vertices())
    throw DimensionMismatch("p1_interpolation: refinement map does not match fine mesh");
  std::vector<Triplet> trips;
  for (int i = 0; i < m_fine.num_vertices(); ++i) {
    const auto& org = map.vertex_origin[i];
    if (const auto* cv = std::get_if<CoarseVertex>(&org)) {
      trips.push_back({i, cv->index, 1.0});
    } else if (const auto* em = std::get_if<EdgeMidpoint>(&org)) {
      trips.push_back({i, em->a, 0.5});
      trips.push_back({i, em->b, 0.5});
    } else {
      throw DimensionMismatch("p1_interpolation: barycentric lineage not supported here");
    }
  }
  return from_triplets(m_fine.num_vertices(), m.num_vertices(), std::move(trips));
}

SaddleSystem assemble_taylor_hood(const SimplicialMesh2D& m, const ProblemData& prob) {
  if (m.boundary_edges.empty()) throw UntaggedBoundary("assemble_taylor_hood: no boundary tags");
  check_compatibility(m, prob);
  const int nv = m.num_vertices();
  const int n_s = nv + m.num_edges();

  std::vector<Triplet> a_trips, b_trips;
  std::vector<double> fx(n_s, 0.0), fy(n_s, 0.0);
  for (int t = 0; t < m.num_triangles(); ++t) {
    const TriGeometry g = tri_geometry(m, t);
    const auto dofs = p2_dofs(m, t);
    for (const auto& q : tri_quadrature()) {
      const double w = q.weight * g.area;
      const auto dn = p2_gradients(g, q.lambda);
      const auto n = p2_values(q.lambda);
      for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < 6; ++j) {
          a_trips.push_back(
              {dofs[i], dofs[j], w * (dn[i][0] * dn[j][0] + dn[i][1] * dn[j][1])});
        }
      }
      for (int k = 0; k < 3; ++k) {  // P1 pressure basis = lambda_k
        for (int j = 0; j < 6; ++j) {
          b_trips.push_back({m.triangles[t][k], dofs[j], -w * q.lambda[k] * dn[j][0]});
          b_trips.push_back({m.triangles[t][k], n_s + dofs[j], -w * q.lambda[k] * dn[j][1]});
        }
      }
      const auto pt = point_at(g, q.lambda);
      const auto f = prob.force(pt[0], pt[1]);
      if (f[0] != 0.0 || f[1] != 0.0) {
        for (int j = 0; j < 6; ++j) {
          fx[dofs[j]] += w * n[j] * f[0];
          fy[dofs[j]] += w * n[j] * f[1];
        }
      }
    }
  }
  if (prob.neumann) {
    for (const auto& be : m.boundary_edges) {
      if (be.tag != BoundaryTag::Neumann) continue;
      const auto& pa = m.vertices[be.a];
      const auto& pb = m.vertices[be.b];
      const double len = std::hypot(pb[0] - pa[0], pb[1] - pa[1]);
      const int mid = nv + m.edge_index(be.a, be.b);
      for (const auto& q : line_quadrature()) {
        const double x = pa[0] + q.s * (pb[0] - pa[0]);
        const double y = pa[1] + q.s * (pb[1] - pa[1]);
        const auto gn = (*prob.neumann)(x, y);
        const double na = (1 - q.s) * (1 - 2 * q.s);
        const double nb = q.s * (2 * q.s - 1);
        const double nm = 4 * q.s * (1 - q.s);
        const double w = q.weight * len;
        fx[be.a] += w * na * gn[0];
        fy[be.a] += w * na * gn[1];
        fx[be.b] += w * nb * gn[0];
        fy[be.b] += w * nb * gn[1];
        fx[mid] += w * nm * gn[0];
        fy[mid] += w * nm * gn[1];
      }
    }
  }
  SparseMatrix a_full = from_triplets(n_s, n_s, std::move(a_trips));
  SparseMatrix b_full = from_triplets(nv, 2 * n_s, std::move(b_trips));

  const auto vals = p2_dirichlet_values(m, prob);
  const auto red = make_reduction(n_s, vals);
  const int ns_red = static_cast<int>(red.kept.size());

  SaddleSystem sys;
  sys.disc = Discretization::TH;
  sys.n_x = sys.n_y = ns_red;
  sys.n_p = nv;
  std::vector<double> lift_x(ns_red, 0.0), lift_y(ns_red, 0.0);
  SparseMatrix a_red = reduce_scalar(a_full, red, vals, lift_x, lift_y);
  std::vector<double> rhs_p(nv, 0.0);
  sys.B = reduce_divergence(b_full, n_s, red, vals, rhs_p);
  sys.A = block_diag({&a_red, &a_red});
  sys.Ap = assemble_p1_stiffness(m);
  sys.Mp = assemble_p1_mass(m);
  sys.rhs.assign(sys.total_dofs(), 0.0);
  for (int i = 0; i < ns_red; ++i) {
    sys.rhs[i] = fx[red.kept[i]] - lift_x[i];
    sys.rhs[ns_red + i] = fy[red.kept[i]] - lift_y[i];
  }
  for (int i = 0; i < nv; ++i) sys.rhs[2 * ns_red + i] = rhs_p[i];

  const auto coords = p2_dof_coords(m);
  sys.velocity_coords.reserve(ns_red);
  for (int i : red.kept) sys.velocity_coords.push_back(coords[i]);
  sys.pressure_coords = m.vertices;
  for (const auto& [dof, g] : vals) {
    sys.bc.constrained.push_back(dof);
    sys.bc.values_x.push_back(g[0]);
    sys.bc.values_y.push_back(g[1]);
  }
  return sys;
}

SaddleSystem assemble_scott_vogelius(const SimplicialMesh2D& m, const ProblemData& prob,
                                     bool force_unrefined) {
  if (!m.barycentric && !force_unrefined)
    throw StabilityWarning("assemble_scott_vogelius: mesh is not barycentrically refined");
  if (m.boundary_edges.empty()) throw UntaggedBoundary("assemble_scott_vogelius: no boundary tags");
  check_compatibility(m, prob);
  const int nv = m.num_vertices();
  const int nt = m.num_triangles();
  const int n_s = nv + m.num_edges();
  const int n_p = 3 * nt;

  std::vector<Triplet> a_trips, b_trips, mp_trips, mix_trips;
  std::vector<double> fx(n_s, 0.0), fy(n_s, 0.0);
  std::vector<double> areas(nt, 0.0);
  for (int t = 0; t < nt; ++t) {
    const TriGeometry g = tri_geometry(m, t);
    areas[t] = g.area;
    const auto dofs = p2_dofs(m, t);
    for (const auto& q : tri_quadrature()) {
      const double w = q.weight * g.area;
      const auto dn = p2_gradients(g, q.lambda);
      const auto n = p2_values(q.lambda);
      for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j)
          a_trips.push_back({dofs[i], dofs[j], w * (dn[i][0] * dn[j][0] + dn[i][1] * dn[j][1])});
      for (int k = 0; k < 3; ++k) {  // discontinuous P1 basis = lambda_k on element t
        for (int j = 0; j < 6; ++j) {
          b_trips.push_back({3 * t + k, dofs[j], -w * q.lambda[k] * dn[j][0]});
          b_trips.push_back({3 * t + k, n_s + dofs[j], -w * q.lambda[k] * dn[j][1]});
        }
      }
      const auto pt = point_at(g, q.lambda);
      const auto f = prob.force(pt[0], pt[1]);
      if (f[0] != 0.0 || f[1] != 0.0) {
        for (int j = 0; j < 6; ++j) {
          fx[dofs[j]] += w * n[j] * f[0];
          fy[dofs[j]] += w * n[j] * f[1];
        }
      }
    }
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        const double v = g.area / 12.0 * (i == j ? 2.0 : 1.0);
        mp_trips.push_back({3 * t + i, 3 * t + j, v});
        mix_trips.push_back({m.triangles[t][i], 3 * t + j, v});
      }
    }
  }
  if (prob.neumann) {
    for (const auto& be : m.boundary_edges) {
      if (be.tag != BoundaryTag::Neumann) continue;
      const auto& pa = m.vertices[be.a];
      const auto& pb = m.vertices[be.b];
      const double len = std::hypot(pb[0] - pa[0], pb[1] - pa[1]);
      const int mid = nv + m.edge_index(be.a, be.b);
      for (const auto& q : line_quadrature()) {
        const double x = pa[0] + q.s * (pb[0] - pa[0]);
        const double y = pa[1] + q.s * (pb[1] - pa[1]);
        const auto gn = (*prob.neumann)(x, y);
        const double na = (1 - q.s) * (1 - 2 * q.s);
        const double nb = q.s * (2 * q.s - 1);
        const double nm = 4 * q.s * (1 - q.s);
        const double w = q.weight * len;
        fx[be.a] += w * na * gn[0];
        fy[be.a] += w * na * gn[1];
        fx[be.b] += w * nb * gn[0];
        fy[be.b] += w * nb * gn[1];
        fx[mid] += w * nm * gn[0];
        fy[mid] += w * nm * gn[1];
      }
    }
  }
  SparseMatrix a_full = from_triplets(n_s, n_s, std::move(a_trips));
  SparseMatrix b_full = from_triplets(n_p, 2 * n_s, std::move(b_trips));

  const auto vals = p2_dirichlet_values(m, prob);
  const auto red = make_reduction(n_s, vals);
  const int ns_red = static_cast<int>(red.kept.size());

  SaddleSystem sys;
  sys.disc = Discretization::SV;
  sys.n_x = sys.n_y = ns_red;
  sys.n_p = n_p;
  std::vector<double> lift_x(ns_red, 0.0), lift_y(ns_red, 0.0);
  SparseMatrix a_red = reduce_scalar(a_full, red, vals, lift_x, lift_y);
  std::vector<double> rhs_p(n_p, 0.0);
  sys.B = reduce_divergence(b_full, n_s, red, vals, rhs_p);
  sys.A = block_diag({&a_red, &a_red});
  sys.Ap = assemble_p1_stiffness(m);
  sys.Mp = from_triplets(n_p, n_p, std::move(mp_trips));
  sys.Mp_cg = assemble_p1_mass(m);
  sys.M_mix = from_triplets(nv, n_p, std::move(mix_trips));
  sys.sv_element_areas = std::move(areas);
  sys.rhs.assign(sys.total_dofs(), 0.0);
  for (int i = 0; i < ns_red; ++i) {
    sys.rhs[i] = fx[red.kept[i]] - lift_x[i];
    sys.rhs[ns_red + i] = fy[red.kept[i]] - lift_y[i];
  }
  for (int i = 0; i < n_p; ++i) sys.rhs[2 * ns_red + i] = rhs_p[i];

  const auto coords = p2_dof_coords(m);
  for (int i : red.kept) sys.velocity_coords.push_back(coords[i]);
  sys.pressure_coords.reserve(n_p);
  sys.sv_pressure_vertices.reserve(nt);
  for (int t = 0; t < nt; ++t) {
    sys.sv_pressure_vertices.push_back(m.triangles[t]);
    for (int k = 0; k < 3; ++k) sys.pressure_coords.push_back(m.vertices[m.triangles[t][k]]);
  }
  for (const auto& [dof, g] : vals) {
    sys.bc.constrained.push_back(dof);
    sys.bc.values_x.push_back(g[0]);
    sys.bc.values_y.push_back(g[1]);
  }
  return sys;
}

SaddleSystem assemble_iso(const SimplicialMesh2D& m, const SimplicialMesh2D& m_fine,
                          const RefinementMap& map, const ProblemData& prob) {
  if (m_fine.num_vertices() != m.num_vertices() + m.num_edges() ||
      m_fine.num_triangles() != 4 * m.num_triangles())
    throw DimensionMismatch("assemble_iso: fine mesh is not a quadrisection of the coarse mesh");
  check_compatibility(m, prob);
  const int nvf = m_fine.num_vertices();
  const int nvc = m.num_vertices();

  std::vector<Triplet> a_trips, b_trips;
  std::vector<double> fx(nvf, 0.0), fy(nvf, 0.0);
  for (int t = 0; t < m_fine.num_triangles(); ++t) {
    const TriGeometry g = tri_geometry(m_fine, t);
    const auto& tri = m_fine.triangles[t];
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        a_trips.push_back({tri[i], tri[j],
                           g.area * (g.grad_lambda[i][0] * g.grad_lambda[j][0] +
                                     g.grad_lambda[i][1] * g.grad_lambda[j][1])});
      }
    }
    // div term against the fine P1 pressure basis; gradients constant so the
    // P1 x P0 products integrate with the one-third rule
    for (int k = 0; k < 3; ++k) {
      for (int j = 0; j < 3; ++j) {
        b_trips.push_back({tri[k], tri[j], -g.area / 3.0 * g.grad_lambda[j][0]});
        b_trips.push_back({tri[k], nvf + tri[j], -g.area / 3.0 * g.grad_lambda[j][1]});
      }
    }
    for (const auto& q : tri_quadrature()) {
      const auto pt = point_at(g, q.lambda);
      const auto f = prob.force(pt[0], pt[1]);
      if (f[0] != 0.0 || f[1] != 0.0) {
        const double w = q.weight * g.area;
        for (int j = 0; j < 3; ++j) {
          fx[tri[j]] += w * q.lambda[j] * f[0];
          fy[tri[j]] += w * q.lambda[j] * f[1];
        }
      }
    }
  }
  if (prob.neumann) {
    for (const auto& be : m_fine.boundary_edges) {
      if (be.tag != BoundaryTag::Neumann) continue;
      const auto& pa = m_fine.vertices[be.a];
      const auto& pb = m_fine.vertices[be.b];
      const double len = std::hypot(pb[0] - pa[0], pb[1] - pa[1]);
      for (const auto& q : line_quadrature()) {
        const double x = pa[0] + q.s * (pb[0] - pa[0]);
        const double y = pa[1] + q.s * (pb[1] - pa[1]);
        const auto gn = (*prob.neumann)(x, y);
        const double w = q.weight * len;
        fx[be.a] += w * (1 - q.s) * gn[0];
        fy[be.a] += w * (1 - q.s) * gn[1];
        fx[be.b] += w * q.s * gn[0];
        fy[be.b] += w * q.s * gn[1];
      }
    }
  }
  SparseMatrix a_full = from_triplets(nvf, nvf, std::move(a_trips));
  SparseMatrix b_fine = from_triplets(nvf, 2 * nvf, std::move(b_trips));
  const SparseMatrix e = p1_interpolation(m, m_fine, map);
  SparseMatrix b_coarse_p = spgemm(transpose(e), b_fine);  // nvc x 2*nvf

  const auto vals = p1_dirichlet_values(m_fine, prob);
  const auto red = make_reduction(nvf, vals);
  const int ns_red = static_cast<int>(red.kept.size());

  SaddleSystem sys;
  sys.disc = Discretization::ISO;
  sys.n_x = sys.n_y = ns_red;
  sys.n_p = nvc;
  std::vector<double> lift_x(ns_red, 0.0), lift_y(ns_red, 0.0);
  SparseMatrix a_red = reduce_scalar(a_full, red, vals, lift_x, lift_y);
  std::vector<double> rhs_p(nvc, 0.0);
  sys.B = reduce_divergence(b_coarse_p, nvf, red, vals, rhs_p);
  sys.A = block_diag({&a_red, &a_red});
  sys.Ap = assemble_p1_stiffness(m);
  sys.Mp = assemble_p1_mass(m);
  sys.rhs.assign(sys.total_dofs(), 0.0);
  for (int i = 0; i < ns_red; ++i) {
    sys.rhs[i] = fx[red.kept[i]] - lift_x[i];
    sys.rhs[ns_red + i] = fy[red.kept[i]] - lift_y[i];
  }
  for (int i = 0; i < nvc; ++i) sys.rhs[2 * ns_red + i] = rhs_p[i];

  for (int i : red.kept) sys.velocity_coords.push_back(m_fine.vertices[i]);
  sys.pressure_coords = m.vertices;
  for (const auto& [dof, g] : vals) {
    sys.bc.constrained.push_back(dof);
    sys.bc.values_x.push_back(g[0]);
    sys.bc.values_y.push_back(g[1]);
  }
  return sys;
}

namespace {

// Expand reduced per-component solution into the full scalar space, filling
// Dirichlet values back in.
std::vector<double> expand_field(const SaddleSystem& sys, const std::vector<double>& sol,
                                 int comp, int n_s_full) {
  std::vector<double> full(n_s_full, 0.0);
  std::vector<bool> is_con(n_s_full, false);
  for (size_t k = 0; k < sys.bc.constrained.size(); ++k) {
    const int d = sys.bc.constrained[k];
    full[d] = comp == 0 ? sys.bc.values_x[k] : sys.bc.values_y[k];
    is_con[d] = true;
  }
  int j = 0;
  const int off = comp * sys.n_x;
  for (int i = 0; i < n_s_full; ++i) {
    if (!is_con[i]) full[i] = sol[off + j++];
  }
  return full;
}

}  // namespace

MMSErrors mms_errors(const SaddleSystem& sys, const SimplicialMesh2D& m,
                     const std::vector<double>& solution, const ExactVelocity& u_exact,
                     const ExactPressure& p_exact) {
  const int n_s_full = m.num_vertices() + m.num_edges();
  const std::vector<double> ux = expand_field(sys, solution, 0, n_s_full);
  const std::vector<double> uy = expand_field(sys, solution, 1, n_s_full);
  const double* p = solution.data() + sys.n_u();
  MMSErrors err;
  for (int t = 0; t < m.num_triangles(); ++t) {
    const TriGeometry g = tri_geometry(m, t);
    const auto dofs = p2_dofs(m, t);
    for (const auto& q : tri_quadrature()) {
      const double w = q.weight * g.area;
      const auto n = p2_values(q.lambda);
      double uhx = 0.0, uhy = 0.0;
      for (int j = 0; j < 6; ++j) {
        uhx += ux[dofs[j]] * n[j];
        uhy += uy[dofs[j]] * n[j];
      }
      double ph = 0.0;
      if (sys.disc == Discretization::SV) {
        for (int k = 0; k < 3; ++k) ph += p[3 * t + k] * q.lambda[k];
      } else {
        for (int k = 0; k < 3; ++k) ph += p[m.triangles[t][k]] * q.lambda[k];
      }
      const auto pt = point_at(g, q.lambda);
      const auto ue = u_exact(pt[0], pt[1]);
      const double pe = p_exact(pt[0], pt[1]);
      err.velocity_l2 += w * ((uhx - ue[0]) * (uhx - ue[0]) + (uhy - ue[1]) * (uhy - ue[1]));
      err.pressure_l2 += w * (ph - pe) * (ph - pe);
      err.velocity_norm += w * (ue[0] * ue[0] + ue[1] * ue[1]);
      err.pressure_norm += w * pe * pe;
    }
  }
  err.velocity_l2 = std::sqrt(err.velocity_l2);
  err.pressure_l2 = std::sqrt(err.pressure_l2);
  err.velocity_norm = std::sqrt(err.velocity_norm);
  err.pressure_norm = std::sqrt(err.pressure_norm);
  return err;
}

DivergenceReport sv_divergence(const SaddleSystem& sys, const SimplicialMesh2D& m,
                               const std::vector<double>& solution) {
  const int n_s_full = m.num_vertices() + m.num_edges();
  const std::vector<double> ux = expand_field(sys, solution, 0, n_s_full);
  const std::vector<double> uy = expand_field(sys, solution, 1, n_s_full);
  DivergenceReport rep;
  rep.element_div2.assign(m.num_triangles(), 0.0);
  for (int t = 0; t < m.num_triangles(); ++t) {
    const TriGeometry g = tri_geometry(m, t);
    const auto dofs = p2_dofs(m, t);
    for (const auto& q : tri_quadrature()) {
      const double w = q.weight * g.area;
      const auto dn = p2_gradients(g, q.lambda);
      double div = 0.0, gx0 = 0.0, gx1 = 0.0, gy0 = 0.0, gy1 = 0.0;
      for (int j = 0; j < 6; ++j) {
        div += ux[dofs[j]] * dn[j][0] + uy[dofs[j]] * dn[j][1];
        gx0 += ux[dofs[j]] * dn[j][0];
        gx1 += ux[dofs[j]] * dn[j][1];
        gy0 += uy[dofs[j]] * dn[j][0];
        gy1 += uy[dofs[j]] * dn[j][1];
      }
      rep.element_div2[t] += w * div * div;
      rep.grad_norm2 += w * (gx0 * gx0 + gx1 * gx1 + gy0 * gy0 + gy1 * gy1);
    }
  }
  return rep;
}

ManufacturedCase manufactured_unit_square() {
  ManufacturedCase c;
  c.u_exact = [](double x, double y) -> std::array<double, 2> {
    return {std::sin(kPi * x) * std::sin(kPi * y), std::cos(kPi * x) * std::cos(kPi * y)};
  };
  c.p_exact = [](double x, double) { return std::sin(kPi * x); };
  c.problem.dirichlet = [u = c.u_exact](BoundaryTag, double x, double y) { return u(x, y); };
  c.problem.force = [](double x, double y) -> std::array<double, 2> {
    return {2 * kPi * kPi * std::sin(kPi * x) * std::sin(kPi * y) + kPi * std::cos(kPi * x),
            2 * kPi * kPi * std::cos(kPi * x) * std::cos(kPi * y)};
  };
  // du/dn - n p on the outflow edge x=1, n=(1,0)
  c.problem.neumann = [](double x, double y) -> std::array<double, 2> {
    return {kPi * std::cos(kPi * x) * std::sin(kPi * y) - std::sin(kPi * x),
            -kPi * std::sin(kPi * x) * std::cos(kPi * y)};
  };
  return c;
}

}  // namespace stokesamg
