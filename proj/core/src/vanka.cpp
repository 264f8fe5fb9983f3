#include "stokesamg/vanka.hpp"

#include <algorithm>
#include <cmath>

#include "stokesamg/errors.hpp"
#include "stokesamg/krylov.hpp"

namespace stokesamg {

std::vector<VankaPatch> build_patches(const SparseMatrix& k, int n_x, int n_y, int n_p,
                                      bool sv_triples) {
  const int n_u = n_x + n_y;
  if (k.nrows != n_u + n_p) throw DimensionMismatch("build_patches: block sizes do not match K");
  if (sv_triples && n_p % 3 != 0)
    throw DimensionMismatch("build_patches: triple seeding needs a multiple-of-3 pressure count");
  const int group = sv_triples ? 3 : 1;
  std::vector<VankaPatch> patches;
  patches.reserve(n_p / group);
  for (int p0 = 0; p0 < n_p; p0 += group) {
    VankaPatch patch;
    for (int g = 0; g < group; ++g) {
      const int row = n_u + p0 + g;
      patch.pressure.push_back(row);
      for (int q = k.row_offsets[row]; q < k.row_offsets[row + 1]; ++q) {
        const int c = k.col_indices[q];
        if (c < n_u) patch.velocity.push_back(c);
      }
    }
    std::sort(patch.velocity.begin(), patch.velocity.end());
    patch.velocity.erase(std::unique(patch.velocity.begin(), patch.velocity.end()),
                         patch.velocity.end());
    if (patch.velocity.empty())
      throw SingularPatch("build_patches: pressure row " + std::to_string(p0) +
                          " couples to no velocity DoFs");
    patch.nx = static_cast<int>(
        std::lower_bound(patch.velocity.begin(), patch.velocity.end(), n_x) -
        patch.velocity.begin());
    patches.push_back(std::move(patch));
  }
  return patches;
}

namespace {

// Dense restriction of a CSR block to a small index set, via a scatter map.
DenseMatrix gather_dense(const SparseMatrix& k, const std::vector<int>& rows,
                         const std::vector<int>& cols, std::vector<int>& scatter) {
  DenseMatrix d(static_cast<int>(rows.size()), static_cast<int>(cols.size()));
  for (size_t c = 0; c < cols.size(); ++c) scatter[cols[c]] = static_cast<int>(c);
  for (size_t r = 0; r < rows.size(); ++r) {
    const int row = rows[r];
    for (int q = k.row_offsets[row]; q < k.row_offsets[row + 1]; ++q) {
      const int loc = scatter[k.col_indices[q]];
      if (loc >= 0) d(static_cast<int>(r), loc) = k.values[q];
    }
  }
  for (int c : cols) scatter[c] = -1;
  return d;
}

}  // namespace

VankaFactorization factor_patches(const SparseMatrix& k, const std::vector<VankaPatch>& patches,
                                  int n_u) {
  VankaFactorization f;
  f.weights.assign(k.nrows, 0.0);
  for (const auto& p : patches) {
    for (int d : p.velocity) f.weights[d] += 1.0;
    for (int d : p.pressure) f.weights[d] += 1.0;
  }
  for (double& w : f.weights)
    if (w > 0.0) w = 1.0 / w;

  std::vector<int> scatter(k.nrows, -1);
  f.patches.reserve(patches.size());
  for (size_t pid = 0; pid < patches.size(); ++pid) {
    const auto& p = patches[pid];
    const int nv = static_cast<int>(p.velocity.size());
    const int np = static_cast<int>(p.pressure.size());
    const int nx = p.nx;
    const int ny = nv - nx;
    VankaFactorization::PatchFactors pf;
    pf.velocity = p.velocity;
    pf.pressure = p.pressure;
    pf.nx = nx;

    const std::vector<int> vx(p.velocity.begin(), p.velocity.begin() + nx);
    const std::vector<int> vy(p.velocity.begin() + nx, p.velocity.end());
    try {
      if (nx > 0) pf.lu_x = dense_lu_factor(gather_dense(k, vx, vx, scatter));
      if (ny > 0) pf.lu_y = dense_lu_factor(gather_dense(k, vy, vy, scatter));
    } catch (const SingularMatrix&) {
      throw SingularPatch("factor_patches: singular velocity block in patch " +
                          std::to_string(pid));
    }
    DenseMatrix b = gather_dense(k, p.pressure, p.velocity, scatter);  // np x nv

    // u_hat = -A^-1 B^T, columns solved per component
    pf.u_hat = DenseMatrix(nv, np);
    std::vector<double> col;
    for (int j = 0; j < np; ++j) {
      col.assign(nx, 0.0);
      for (int i = 0; i < nx; ++i) col[i] = -b(j, i);
      if (nx > 0) dense_lu_solve_inplace(pf.lu_x, col.data());
      for (int i = 0; i < nx; ++i) pf.u_hat(i, j) = col[i];
      col.assign(ny, 0.0);
      for (int i = 0; i < ny; ++i) col[i] = -b(j, nx + i);
      if (ny > 0) dense_lu_solve_inplace(pf.lu_y, col.data());
      for (int i = 0; i < ny; ++i) pf.u_hat(nx + i, j) = col[i];
    }
    // S = -B A^-1 B^T = B u_hat
    DenseMatrix s(np, np);
    for (int i = 0; i < np; ++i)
      for (int j = 0; j < np; ++j) {
        double acc = 0.0;
        for (int m = 0; m < nv; ++m) acc += b(i, m) * pf.u_hat(m, j);
        s(i, j) = acc;
      }
    LUFactors s_lu;
    try {
      s_lu = dense_lu_factor(s);
    } catch (const SingularMatrix&) {
      throw SingularPatch("factor_patches: singular Schur block in patch " + std::to_string(pid));
    }
    pf.s_inv = DenseMatrix(np, np);
    for (int j = 0; j < np; ++j) {
      col.assign(np, 0.0);
      col[j] = 1.0;
      dense_lu_solve_inplace(s_lu, col.data());
      for (int i = 0; i < np; ++i) pf.s_inv(i, j) = col[i];
    }
    // b_hat = -S^-1 B A^-1 = S^-1 u_hat^T (A symmetric)
    pf.b_hat = DenseMatrix(np, nv);
    for (int i = 0; i < np; ++i)
      for (int j = 0; j < nv; ++j) {
        double acc = 0.0;
        for (int m = 0; m < np; ++m) acc += pf.s_inv(i, m) * pf.u_hat(j, m);
        pf.b_hat(i, j) = acc;
      }

    f.a_factor_bytes += sizeof(double) * (static_cast<size_t>(nx) * nx + static_cast<size_t>(ny) * ny);
    f.aux_bytes += sizeof(double) * (2 * static_cast<size_t>(nv) * np + static_cast<size_t>(np) * np);
    f.dense_inverse_bytes += sizeof(double) * static_cast<size_t>(nv + np) * (nv + np);
    f.patches.push_back(std::move(pf));
  }
  (void)n_u;
  return f;
}

std::vector<double> apply_vanka(const VankaFactorization& f, const std::vector<double>& r) {
  std::vector<double> delta(r.size(), 0.0);
  std::vector<double> bu, bp, xu, xp;
  for (const auto& p : f.patches) {
    const int nv = static_cast<int>(p.velocity.size());
    const int np = static_cast<int>(p.pressure.size());
    const int nx = p.nx;
    const int ny = nv - nx;
    bu.resize(nv);
    bp.resize(np);
    for (int i = 0; i < nv; ++i) bu[i] = r[p.velocity[i]];
    for (int i = 0; i < np; ++i) bp[i] = r[p.pressure[i]];
    // t = A^-1 b_u
    xu = bu;
    if (nx > 0) dense_lu_solve_inplace(p.lu_x, xu.data());
    if (ny > 0) dense_lu_solve_inplace(p.lu_y, xu.data() + nx);
    // x_p = S^-1 b_p + b_hat b_u
    xp.assign(np, 0.0);
    for (int i = 0; i < np; ++i) {
      double acc = 0.0;
      for (int j = 0; j < np; ++j) acc += p.s_inv(i, j) * bp[j];
      for (int j = 0; j < nv; ++j) acc += p.b_hat(i, j) * bu[j];
      xp[i] = acc;
    }
    // x_u = t + u_hat x_p
    for (int i = 0; i < nv; ++i) {
      double acc = xu[i];
      for (int j = 0; j < np; ++j) acc += p.u_hat(i, j) * xp[j];
      delta[p.velocity[i]] += f.weights[p.velocity[i]] * acc;
    }
    for (int i = 0; i < np; ++i) delta[p.pressure[i]] += f.weights[p.pressure[i]] * xp[i];
  }
  return delta;
}

void vanka_relax(const SparseMatrix& k, const VankaFactorization& f, std::vector<double>& x,
                 const std::vector<double>& b, RelaxMode mode, int sweeps, double omega) {
  const int n = k.nrows;
  std::vector<double> r(n);
  if (mode == RelaxMode::Stationary) {
    for (int s = 0; s < sweeps; ++s) {
      r = spmv(k, x);
      for (int i = 0; i < n; ++i) r[i] = b[i] - r[i];
      const std::vector<double> d = apply_vanka(f, r);
      for (int i = 0; i < n; ++i) x[i] += omega * d[i];
    }
    return;
  }
  r = spmv(k, x);
  for (int i = 0; i < n; ++i) r[i] = b[i] - r[i];
  std::vector<double> corr(n, 0.0);
  FgmresOptions opt;
  opt.tol = 0.0;
  opt.max_iters = sweeps;
  opt.restart = sweeps;
  auto prec = [&f](const std::vector<double>& v, std::vector<double>& z) { z = apply_vanka(f, v); };
  fgmres(matrix_operator(k), r, corr, prec, opt);
  for (int i = 0; i < n; ++i) x[i] += corr[i];
}

}  // namespace stokesamg
