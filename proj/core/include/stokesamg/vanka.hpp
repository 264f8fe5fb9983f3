#pragma once

#include <vector>

#include "stokesamg/sparse.hpp"

namespace stokesamg {

/// One pressure-seeded patch: the velocity set is exactly the nonzero columns
/// of the seed rows of the level's B block.
struct VankaPatch {
  std::vector<int> pressure;  // global DoF indices (already offset past velocity)
  std::vector<int> velocity;  // sorted global velocity DoF indices
  int nx = 0;                 // velocity[0..nx) are x-component DoFs
};

/// One patch per pressure DoF; with sv_triples, one patch per consecutive
/// triple of pressure DoFs (the element-owned discontinuous pressure of the
/// finest SV level).
std::vector<VankaPatch> build_patches(const SparseMatrix& k, int n_x, int n_y, int n_p,
                                      bool sv_triples = false);

struct VankaFactorization {
  struct PatchFactors {
    std::vector<int> velocity;
    std::vector<int> pressure;
    int nx = 0;
    LUFactors lu_x, lu_y;  // per-component A-block factors
    DenseMatrix u_hat;     // -A^-1 B^T            (nv x np)
    DenseMatrix b_hat;     // -S^-1 B A^-1         (np x nv)
    DenseMatrix s_inv;     // (-B A^-1 B^T)^-1     (np x np)
  };
  std::vector<PatchFactors> patches;
  std::vector<double> weights;  // w_d = 1 / #patches containing d, full level length

  // storage accounting (bytes of dense factor payload)
  size_t a_factor_bytes = 0;
  size_t aux_bytes = 0;            // u_hat + b_hat + s_inv
  size_t dense_inverse_bytes = 0;  // what a full dense patch inverse would cost
};

VankaFactorization factor_patches(const SparseMatrix& k, const std::vector<VankaPatch>& patches,
                                  int n_u);

/// Weighted additive sweep: delta = sum_i V_i^T W K_i^-1 V_i r, sequential
/// patch order (deterministic).
std::vector<double> apply_vanka(const VankaFactorization& f, const std::vector<double>& r);

enum class RelaxMode { KrylovWrapped, Stationary };

/// KrylovWrapped: x += FGMRES_sweeps(k, b - k x) preconditioned by one Vanka
/// sweep, zero inner guess, no restart. Stationary: sweeps damped Richardson
/// steps x += omega * vanka(b - k x).
void vanka_relax(const SparseMatrix& k, const VankaFactorization& f, std::vector<double>& x,
                 const std::vector<double>& b, RelaxMode mode, int sweeps, double omega = 1.0);

}  // namespace stokesamg
