#include <doctest.h>

#include <cmath>
#include <random>

#include "stokesamg/errors.hpp"
#include "stokesamg/transfer.hpp"

using namespace stokesamg;

namespace {

BoundaryTag right_neumann(double x, double) {
  return x > 1 - 1e-12 ? BoundaryTag::Neumann : BoundaryTag::DirichletZero;
}

}  // namespace

TEST_SUITE("transfer") {

TEST_CASE("taylor-hood/iso injection is the identity on both fields") {
  auto m = structured_tri_mesh(4, 4, RectDomain{0, 0, 1, 1}, right_neumann);
  auto [mf, map] = quadrisect(m);
  auto th = assemble_taylor_hood(m, zero_problem());
  auto iso = assemble_iso(m, mf, map, zero_problem());
  auto t = build_th_transfer(th, iso);
  CHECK(t.n_u0 == t.n_u1);
  CHECK(t.n_p0 == t.n_p1);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> v(th.total_dofs());
  for (double& x : v) x = dist(rng);
  auto up = t.prolong(v);
  CHECK(up == v);
  auto down = t.restrict_(up);
  CHECK(down == v);
}

TEST_CASE("co-location mismatch is rejected") {
  auto m = structured_tri_mesh(4, 4, RectDomain{0, 0, 1, 1}, right_neumann);
  auto m2 = structured_tri_mesh(4, 4, RectDomain{0, 0, 2, 1}, right_neumann);
  auto [mf2, map2] = quadrisect(m2);
  auto th = assemble_taylor_hood(m, zero_problem());
  auto iso2 = assemble_iso(m2, mf2, map2, zero_problem());
  CHECK_THROWS_AS(build_th_transfer(th, iso2), Error);
}

TEST_CASE("sv pressure interpolation duplicates vertex values") {
  auto m0 = structured_tri_mesh(2, 2, RectDomain{0, 0, 1, 1}, right_neumann);
  auto [m, map] = barycentric_refine(m0);
  auto sys = assemble_scott_vogelius(m, zero_problem());
  auto p = build_sv_pressure_interp(sys.sv_pressure_vertices, m.num_vertices());
  CHECK(p.nrows == 3 * m.num_triangles());
  CHECK(p.ncols == m.num_vertices());
  CHECK(p.nnz() == 3 * m.num_triangles());
  for (double v : p.values) CHECK(v == 1.0);
  // constants map to constants
  auto ones = spmv(p, std::vector<double>(m.num_vertices(), 1.0));
  for (double v : ones) CHECK(v == 1.0);
  // column sums = number of incident triangles per vertex
  std::vector<int> valence(m.num_vertices(), 0);
  for (const auto& tri : m.triangles)
    for (int k = 0; k < 3; ++k) ++valence[tri[k]];
  auto pt = transpose(p);
  for (int v = 0; v < m.num_vertices(); ++v) {
    double s = 0.0;
    for (int q = pt.row_offsets[v]; q < pt.row_offsets[v + 1]; ++q) s += pt.values[q];
    CHECK(s == doctest::Approx(valence[v]));
  }
}

TEST_CASE("mixed and cg mass row sums agree") {
  auto m0 = structured_tri_mesh(3, 3, RectDomain{0, 0, 1, 1}, right_neumann);
  auto [m, map] = barycentric_refine(m0);
  auto sys = assemble_scott_vogelius(m, zero_problem());
  for (int r = 0; r < sys.Mp_cg.nrows; ++r) {
    double scg = 0.0, smix = 0.0;
    for (int q = sys.Mp_cg.row_offsets[r]; q < sys.Mp_cg.row_offsets[r + 1]; ++q)
      scg += sys.Mp_cg.values[q];
    for (int q = sys.M_mix.row_offsets[r]; q < sys.M_mix.row_offsets[r + 1]; ++q)
      smix += sys.M_mix.values[q];
    CHECK(std::abs(scg - smix) <= 1e-13);
  }
}

TEST_CASE("mass projection preserves constants and left-inverts duplication") {
  auto m0 = structured_tri_mesh(3, 3, RectDomain{0, 0, 1, 1}, right_neumann);
  auto [m, map] = barycentric_refine(m0);
  auto sys = assemble_scott_vogelius(m, zero_problem());
  auto r0 = build_sv_pressure_restrict(sys.Mp_cg, sys.M_mix);

  auto cg = r0->apply(std::vector<double>(sys.n_p, 1.0));
  for (double v : cg) CHECK(std::abs(v - 1.0) <= 1e-11);

  auto p = build_sv_pressure_interp(sys.sv_pressure_vertices, m.num_vertices());
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> q(m.num_vertices());
  for (double& v : q) v = dist(rng);
  auto back = r0->apply(spmv(p, q));
  // dense mass-solve oracle
  auto lu = dense_lu_factor(to_dense(sys.Mp_cg));
  auto ref = dense_lu_solve(lu, spmv(sys.M_mix, spmv(p, q)));
  for (int i = 0; i < m.num_vertices(); ++i) {
    CHECK(std::abs(back[i] - q[i]) <= 1e-10);
    CHECK(std::abs(back[i] - ref[i]) <= 1e-10);
  }
}

TEST_CASE("mass projection iteration count is level-independent") {
  std::vector<int> counts;
  for (int n : {2, 4, 8}) {
    auto m0 = structured_tri_mesh(n, n, RectDomain{0, 0, 1, 1}, right_neumann);
    auto [m, map] = barycentric_refine(m0);
    auto sys = assemble_scott_vogelius(m, zero_problem());
    auto r0 = build_sv_pressure_restrict(sys.Mp_cg, sys.M_mix);
    std::vector<double> p(sys.n_p);
    for (int i = 0; i < sys.n_p; ++i) p[i] = std::sin(0.37 * i);
    r0->apply(p);
    counts.push_back(r0->iteration_counts().back());
  }
  CHECK(counts[2] <= counts[0] + 2);
  CHECK(counts[2] <= 25);  // well-conditioned mass solve stays cheap
}

TEST_CASE("sv transfer round trip on the cg pressure subspace") {
  auto m0 = structured_tri_mesh(2, 2, RectDomain{0, 0, 1, 1}, right_neumann);
  auto [m, bmap] = barycentric_refine(m0);
  auto sv = assemble_scott_vogelius(m, zero_problem());
  auto [mf, qmap] = quadrisect(m);
  auto iso = assemble_iso(m, mf, qmap, zero_problem());
  auto t = build_sv_transfer(sv, iso);
  CHECK(t.n_u0 == t.n_u1);
  CHECK(t.n_p0 == 3 * m.num_triangles());
  CHECK(t.n_p1 == m.num_vertices());
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> v(t.n_u1 + t.n_p1);
  for (double& x : v) x = dist(rng);
  auto back = t.restrict_(t.prolong(v));
  for (size_t i = 0; i < v.size(); ++i) CHECK(std::abs(back[i] - v[i]) <= 1e-9);
}

TEST_CASE("eta weighting scales the blocks") {
  std::vector<double> r(7, 1.0);
  auto same = apply_eta_weighting(r, 1.0, 1.0, 4, 3);
  CHECK(same == r);
  auto w = apply_eta_weighting(r, 1.0, 4.0, 4, 3);
  for (int i = 0; i < 4; ++i) CHECK(w[i] == 1.0);
  for (int i = 4; i < 7; ++i) CHECK(w[i] == 4.0);
  auto c = apply_eta_weighting(r, 2.5, 2.5, 4, 3);
  for (double v : c) CHECK(v == 2.5);
}

}  // TEST_SUITE
