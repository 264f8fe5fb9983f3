#include "stokesamg/krylov.hpp"

#include <cmath>

#include "stokesamg/errors.hpp"

namespace stokesamg {

LinearOperator matrix_operator(const SparseMatrix& m) {
  return [&m](const std::vector<double>& x, std::vector<double>& y) { y = spmv(m, x); };
}

LinearOperator identity_operator() {
  return [](const std::vector<double>& x, std::vector<double>& y) { y = x; };
}

KrylovReport fgmres(const LinearOperator& a, const std::vector<double>& b,
                    std::vector<double>& x, const LinearOperator& prec,
                    const FgmresOptions& opt) {
  const int n = static_cast<int>(b.size());
  if (static_cast<int>(x.size()) != n) throw DimensionMismatch("fgmres: guess/rhs size mismatch");
  KrylovReport rep;
  const double bnorm = norm2(b);
  const double ref = bnorm > 0.0 ? bnorm : 1.0;

  std::vector<double> ax(n), r(n);
  a(x, ax);
  for (int i = 0; i < n; ++i) r[i] = b[i] - ax[i];
  double rnorm = norm2(r);
  rep.residual_history.push_back(rnorm);
  if (rnorm / ref <= opt.tol) {
    rep.converged = true;
    rep.final_relative_residual = rnorm / ref;
    return rep;
  }

  const int m = opt.restart;
  std::vector<std::vector<double>> v(m + 1), z(m);
  std::vector<double> h((m + 1) * m, 0.0);  // column-major within the small dense problem
  std::vector<double> cs(m, 0.0), sn(m, 0.0), g(m + 1, 0.0);

  while (rep.iterations < opt.max_iters) {
    // (re)start
    a(x, ax);
    for (int i = 0; i < n; ++i) r[i] = b[i] - ax[i];
    rnorm = norm2(r);
    if (rnorm / ref <= opt.tol) {
      rep.converged = true;
      break;
    }
    v[0] = r;
    for (double& vi : v[0]) vi /= rnorm;
    std::fill(g.begin(), g.end(), 0.0);
    g[0] = rnorm;

    int j = 0;
    for (; j < m && rep.iterations < opt.max_iters; ++j) {
      z[j].assign(n, 0.0);
      prec(v[j], z[j]);
      std::vector<double> w(n);
      a(z[j], w);
      // modified Gram-Schmidt
      for (int i = 0; i <= j; ++i) {
        const double hij = dot(w, v[i]);
        h[i * m + j] = hij;
        for (int k = 0; k < n; ++k) w[k] -= hij * v[i][k];
      }
      const double wnorm = norm2(w);
      h[(j + 1) * m + j] = wnorm;
      bool breakdown = wnorm < opt.breakdown;
      if (!breakdown) {
        v[j + 1] = w;
        for (double& vi : v[j + 1]) vi /= wnorm;
      }
      // apply accumulated Givens rotations to column j
      for (int i = 0; i < j; ++i) {
        const double t = cs[i] * h[i * m + j] + sn[i] * h[(i + 1) * m + j];
        h[(i + 1) * m + j] = -sn[i] * h[i * m + j] + cs[i] * h[(i + 1) * m + j];
        h[i * m + j] = t;
      }
      const double denom = std::hypot(h[j * m + j], h[(j + 1) * m + j]);
      if (denom > 0.0) {
        cs[j] = h[j * m + j] / denom;
        sn[j] = h[(j + 1) * m + j] / denom;
      } else {
        cs[j] = 1.0;
        sn[j] = 0.0;
      }
      h[j * m + j] = cs[j] * h[j * m + j] + sn[j] * h[(j + 1) * m + j];
      h[(j + 1) * m + j] = 0.0;
      g[j + 1] = -sn[j] * g[j];
      g[j] = cs[j] * g[j];

      ++rep.iterations;
      rnorm = std::abs(g[j + 1]);
      rep.residual_history.push_back(rnorm);
      if (rnorm / ref <= opt.tol || breakdown) {
        ++j;
        break;
      }
    }
    // back-substitute the j x j triangular system and update x
    std::vector<double> y(j, 0.0);
    for (int i = j - 1; i >= 0; --i) {
      double s = g[i];
      for (int k = i + 1; k < j; ++k) s -= h[i * m + k] * y[k];
      y[i] = s / h[i * m + i];
    }
    for (int i = 0; i < j; ++i)
      for (int k = 0; k < n; ++k) x[k] += y[i] * z[i][k];
    if (rnorm / ref <= opt.tol) {
      rep.converged = true;
      break;
    }
  }
  a(x, ax);
  for (int i = 0; i < n; ++i) r[i] = b[i] - ax[i];
  rep.final_relative_residual = norm2(r) / ref;
  if (rep.final_relative_residual <= opt.tol) rep.converged = true;
  return rep;
}

double relative_residual(const SparseMatrix& a, const std::vector<double>& x,
                         const std::vector<double>& b) {
  std::vector<double> ax = spmv(a, x);
  double r2 = 0.0;
  for (size_t i = 0; i < b.size(); ++i) {
    const double d = b[i] - ax[i];
    r2 += d * d;
  }
  const double bn = norm2(b);
  return std::sqrt(r2) / (bn > 0.0 ? bn : 1.0);
}

}  // namespace stokesamg
