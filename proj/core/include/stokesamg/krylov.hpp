#pragma once

#include <functional>
#include <vector>

#include "stokesamg/sparse.hpp"

namespace stokesamg {

/// y = op(x). Operators and preconditioners share this shape; an identity
/// preconditioner just copies.
using LinearOperator = std::function<void(const std::vector<double>& x, std::vector<double>& y)>;

LinearOperator matrix_operator(const SparseMatrix& m);
LinearOperator identity_operator();

struct FgmresOptions {
  double tol = 1e-8;        // relative to ||b||
  int max_iters = 500;
  int restart = 20;
  double breakdown = 1e-30;  // happy-breakdown threshold on the new basis norm
};

struct KrylovReport {
  bool converged = false;
  int iterations = 0;
  std::vector<double> residual_history;  // absolute residual norms, [0] = initial
  double final_relative_residual = 0.0;
};

/// Right-preconditioned flexible GMRES. x holds the initial guess on entry and
/// the solution on exit.
KrylovReport fgmres(const LinearOperator& a, const std::vector<double>& b,
                    std::vector<double>& x, const LinearOperator& prec,
                    const FgmresOptions& opt);

/// ||b - A x|| / ||b|| with the zero-rhs convention ||b||=1.
double relative_residual(const SparseMatrix& a, const std::vector<double>& x,
                         const std::vector<double>& b);

}  // namespace stokesamg
