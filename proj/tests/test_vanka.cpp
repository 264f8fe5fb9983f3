#include <doctest.h>

#include <cmath>
#include <random>

#include "stokesamg/errors.hpp"
#include "stokesamg/fem.hpp"
#include "stokesamg/vanka.hpp"

using namespace stokesamg;

namespace {

// Dense oracle: sum_i V_i^T W_i (V_i K V_i^T)^-1 V_i assembled with plain
// dense inverses, no block structure exploited.
DenseMatrix dense_vanka_oracle(const SparseMatrix& k, const std::vector<VankaPatch>& patches,
                               const std::vector<double>& weights) {
  const int n = k.nrows;
  DenseMatrix m(n, n);
  for (const auto& p : patches) {
    std::vector<int> idx = p.velocity;
    idx.insert(idx.end(), p.pressure.begin(), p.pressure.end());
    const int s = static_cast<int>(idx.size());
    DenseMatrix local(s, s);
    for (int i = 0; i < s; ++i)
      for (int j = 0; j < s; ++j) local(i, j) = k.at(idx[i], idx[j]);
    auto lu = dense_lu_factor(local);
    // invert column by column
    for (int j = 0; j < s; ++j) {
      std::vector<double> e(s, 0.0);
      e[j] = 1.0;
      auto col = dense_lu_solve(lu, e);
      for (int i = 0; i < s; ++i) m(idx[i], idx[j]) += weights[idx[i]] * col[i];
    }
  }
  return m;
}

SaddleSystem small_th_system() {
  auto m = structured_tri_mesh(4, 4, RectDomain{0, 0, 1, 1}, [](double x, double) {
    return x > 1 - 1e-12 ? BoundaryTag::Neumann : BoundaryTag::DirichletZero;
  });
  return assemble_taylor_hood(m, zero_problem());
}

}  // namespace

TEST_SUITE("vanka") {

TEST_CASE("patch counts and sizes on taylor-hood") {
  // jitter the interior vertices: on a perfectly symmetric mesh some B-row
  // entries cancel to exact zeros and the nnz count drops below the generic one
  auto m = structured_tri_mesh(4, 4, RectDomain{0, 0, 1, 1}, [](double x, double) {
    return x > 1 - 1e-12 ? BoundaryTag::Neumann : BoundaryTag::DirichletZero;
  });
  std::vector<bool> on_boundary(m.num_vertices(), false);
  for (const auto& be : m.boundary_edges) on_boundary[be.a] = on_boundary[be.b] = true;
  for (int i = 0; i < m.num_vertices(); ++i) {
    if (!on_boundary[i]) {
      m.vertices[i][0] += 0.013 * std::sin(3.1 * i);
      m.vertices[i][1] += 0.013 * std::cos(2.7 * i);
    }
  }
  auto sys = assemble_taylor_hood(m, zero_problem());
  auto k = assemble_saddle_matrix(sys);
  auto patches = build_patches(k, sys.n_x, sys.n_y, sys.n_p);
  CHECK(static_cast<int>(patches.size()) == sys.n_p);
  // an interior vertex of the structured mesh touches 6 triangles:
  // 7 vertices + 12 edges = 19 scalar DoFs per component -> 38 + 1 = 39
  size_t biggest = 0;
  for (const auto& p : patches)
    biggest = std::max(biggest, p.velocity.size() + p.pressure.size());
  CHECK(biggest == 39);
  for (const auto& p : patches) {
    // velocity set is exactly the nonzero columns of the seed row
    for (int d : p.velocity) CHECK(k.at(p.pressure[0], d) != 0.0);
    CHECK(std::is_sorted(p.velocity.begin(), p.velocity.end()));
  }
}

TEST_CASE("sv fine level uses 15-dof element patches") {
  auto m0 = structured_tri_mesh(3, 3, RectDomain{0, 0, 1, 1}, [](double x, double) {
    return x > 1 - 1e-12 ? BoundaryTag::Neumann : BoundaryTag::DirichletZero;
  });
  auto [m, map] = barycentric_refine(m0);
  auto sys = assemble_scott_vogelius(m, zero_problem());
  auto k = assemble_saddle_matrix(sys);
  auto patches = build_patches(k, sys.n_x, sys.n_y, sys.n_p, /*sv_triples=*/true);
  CHECK(static_cast<int>(patches.size()) == sys.n_p / 3);
  size_t biggest = 0;
  for (const auto& p : patches) {
    CHECK(p.pressure.size() == 3);
    biggest = std::max(biggest, p.velocity.size() + p.pressure.size());
  }
  CHECK(biggest == 15);  // 6 P2 DoFs per component on one triangle + 3 pressure
}

TEST_CASE("hand-factored 3x3 patch") {
  // K = [[1,0,1],[0,1,0],[1,0,0]]: A = I2, B = [1,0], S = -1
  SparseMatrix k = from_triplets(
      3, 3, {{0, 0, 1}, {0, 2, 1}, {1, 1, 1}, {2, 0, 1}});
  std::vector<VankaPatch> patches(1);
  patches[0].pressure = {2};
  patches[0].velocity = {0, 1};
  patches[0].nx = 1;
  auto f = factor_patches(k, patches, 2);
  REQUIRE(f.patches.size() == 1);
  CHECK(f.patches[0].s_inv(0, 0) == doctest::Approx(-1.0));
  auto x = apply_vanka(f, {1.0, 0.0, 1.0});
  CHECK(x[0] == doctest::Approx(1.0));
  CHECK(x[1] == doctest::Approx(0.0));
  CHECK(x[2] == doctest::Approx(0.0));
}

TEST_CASE("block-lu patch solve equals a dense solve of the full patch") {
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    // A: SPD block-diagonal 5+5, B: 2x10
    DenseMatrix ax(5, 5), ay(5, 5);
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 5; ++j) {
        ax(i, j) += 0.3 * dist(rng);
        ay(i, j) += 0.3 * dist(rng);
      }
    }
    // symmetrize + diagonal dominance
    std::vector<Triplet> t;
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) {
        t.push_back({i, j, 0.5 * (ax(i, j) + ax(j, i)) + (i == j ? 4.0 : 0.0)});
        t.push_back({5 + i, 5 + j, 0.5 * (ay(i, j) + ay(j, i)) + (i == j ? 4.0 : 0.0)});
      }
    for (int p = 0; p < 2; ++p)
      for (int j = 0; j < 10; ++j) {
        const double v = dist(rng);
        t.push_back({10 + p, j, v});
        t.push_back({j, 10 + p, v});
      }
    SparseMatrix k = from_triplets(12, 12, std::move(t));
    std::vector<VankaPatch> patches(1);
    patches[0].pressure = {10, 11};
    patches[0].velocity = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    patches[0].nx = 5;
    auto f = factor_patches(k, patches, 10);
    std::vector<double> b(12);
    for (double& v : b) v = dist(rng);
    auto x = apply_vanka(f, b);
    auto ref = dense_lu_solve(dense_lu_factor(to_dense(k)), b);
    for (int i = 0; i < 12; ++i)
      worst = std::max(worst, std::abs(x[i] - ref[i]) / std::max(1.0, std::abs(ref[i])));
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("partition of unity and assembled inverse match the dense oracle") {
  auto sys = small_th_system();
  auto k = assemble_saddle_matrix(sys);
  auto patches = build_patches(k, sys.n_x, sys.n_y, sys.n_p);
  auto f = factor_patches(k, patches, sys.n_u());

  // exact partition of unity via integer multiplicities
  std::vector<int> mult(k.nrows, 0);
  for (const auto& p : patches) {
    for (int d : p.velocity) ++mult[d];
    for (int d : p.pressure) ++mult[d];
  }
  for (int d = 0; d < k.nrows; ++d) {
    if (mult[d] > 0) CHECK(f.weights[d] * mult[d] == 1.0);
  }

  auto oracle = dense_vanka_oracle(k, patches, f.weights);
  // apply to a few probe vectors instead of all n columns
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int probe = 0; probe < 5; ++probe) {
    std::vector<double> r(k.nrows);
    for (double& v : r) v = dist(rng);
    auto got = apply_vanka(f, r);
    auto want = dense_matvec(oracle, r);
    for (int i = 0; i < k.nrows; ++i)
      CHECK(std::abs(got[i] - want[i]) <= 1e-11 * std::max(1.0, std::abs(want[i])));
  }
}

TEST_CASE("storage accounting honors the factor-of-two claim") {
  auto sys = small_th_system();
  auto k = assemble_saddle_matrix(sys);
  auto patches = build_patches(k, sys.n_x, sys.n_y, sys.n_p);
  auto f = factor_patches(k, patches, sys.n_u());
  CHECK(f.a_factor_bytes * 2 <= f.dense_inverse_bytes);
  CHECK(f.a_factor_bytes + f.aux_bytes <= f.dense_inverse_bytes);
}

TEST_CASE("single patch covering all dofs inverts K and is symmetric") {
  SparseMatrix k = from_triplets(3, 3, {{0, 0, 2}, {0, 2, 1}, {1, 1, 3}, {1, 2, -1},
                                        {2, 0, 1}, {2, 1, -1}});
  std::vector<VankaPatch> patches(1);
  patches[0].pressure = {2};
  patches[0].velocity = {0, 1};
  patches[0].nx = 1;
  auto f = factor_patches(k, patches, 2);
  auto oracle = dense_vanka_oracle(k, patches, f.weights);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(oracle(i, j) == doctest::Approx(oracle(j, i)));  // symmetric: W = I here
  std::vector<double> b = {1.0, 2.0, 3.0};
  auto x = apply_vanka(f, b);
  auto kx = spmv(k, x);
  for (int i = 0; i < 3; ++i) CHECK(kx[i] == doctest::Approx(b[i]));
}

TEST_CASE("relaxation fixed points and exactness") {
  auto sys = small_th_system();
  auto k = assemble_saddle_matrix(sys);
  auto patches = build_patches(k, sys.n_x, sys.n_y, sys.n_p);
  auto f = factor_patches(k, patches, sys.n_u());

  std::vector<double> x(k.nrows);
  for (int i = 0; i < k.nrows; ++i) x[i] = std::sin(0.1 * i);
  auto b = spmv(k, x);
  auto x1 = x;
  vanka_relax(k, f, x1, b, RelaxMode::KrylovWrapped, 2);
  for (int i = 0; i < k.nrows; ++i) CHECK(x1[i] == doctest::Approx(x[i]));
  auto x2 = x;
  vanka_relax(k, f, x2, b, RelaxMode::Stationary, 3, 0.0);
  for (int i = 0; i < k.nrows; ++i) CHECK(x2[i] == x[i]);

  // one-patch system: krylov wrapping is exact after one inner iteration
  SparseMatrix k1 = from_triplets(3, 3, {{0, 0, 2}, {0, 2, 1}, {1, 1, 3}, {1, 2, -1},
                                         {2, 0, 1}, {2, 1, -1}});
  std::vector<VankaPatch> p1(1);
  p1[0].pressure = {2};
  p1[0].velocity = {0, 1};
  p1[0].nx = 1;
  auto f1 = factor_patches(k1, p1, 2);
  std::vector<double> y(3, 0.0), rhs = {1.0, -2.0, 0.5};
  vanka_relax(k1, f1, y, rhs, RelaxMode::KrylovWrapped, 1);
  auto ky = spmv(k1, y);
  for (int i = 0; i < 3; ++i) CHECK(ky[i] == doctest::Approx(rhs[i]));
}

TEST_CASE("stationary sweeps contract by 1-omega on a single-patch system") {
  // with one patch covering everything the preconditioner is K^-1, so the
  // damped iteration has error propagator (1-omega) I
  SparseMatrix k = from_triplets(3, 3, {{0, 0, 2}, {0, 2, 1}, {1, 1, 3}, {1, 2, -1},
                                        {2, 0, 1}, {2, 1, -1}});
  std::vector<VankaPatch> patches(1);
  patches[0].pressure = {2};
  patches[0].velocity = {0, 1};
  patches[0].nx = 1;
  auto f = factor_patches(k, patches, 2);
  std::vector<double> xref = {1.0, -2.0, 0.5};
  auto b = spmv(k, xref);
  std::vector<double> x(3, 0.0);
  const double omega = 0.78;
  vanka_relax(k, f, x, b, RelaxMode::Stationary, 4, omega);
  const double factor = std::pow(1.0 - omega, 4);
  for (int i = 0; i < 3; ++i)
    CHECK(x[i] - xref[i] == doctest::Approx(-factor * xref[i]).epsilon(1e-10));
}

TEST_CASE("apply is linear and zero-preserving") {
  auto sys = small_th_system();
  auto k = assemble_saddle_matrix(sys);
  auto patches = build_patches(k, sys.n_x, sys.n_y, sys.n_p);
  auto f = factor_patches(k, patches, sys.n_u());
  auto z = apply_vanka(f, std::vector<double>(k.nrows, 0.0));
  for (double v : z) CHECK(v == 0.0);
}

}  // TEST_SUITE
