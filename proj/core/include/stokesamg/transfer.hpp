#pragma once

#include <memory>
#include <vector>

#include "stokesamg/amg.hpp"
#include "stokesamg/fem.hpp"
#include "stokesamg/sparse.hpp"

namespace stokesamg {

/// dg-pressure -> cg-pressure restriction by finite-element projection:
/// p_cg = Mcg^-1 (Mmix p_dg), solved with FGMRES preconditioned by one scalar
/// AMG V-cycle to a 1e-12 relative residual.
class SvPressureRestrict {
 public:
  SvPressureRestrict(SparseMatrix mcg, SparseMatrix mmix, double tol);

  std::vector<double> apply(const std::vector<double>& p_dg) const;

  const std::vector<int>& iteration_counts() const { return iterations_; }

 private:
  SparseMatrix mcg_;
  SparseMatrix mmix_;
  ScalarHierarchy amg_;
  double tol_;
  mutable std::vector<int> iterations_;
};

std::shared_ptr<SvPressureRestrict> build_sv_pressure_restrict(const SparseMatrix& mcg,
                                                               const SparseMatrix& mmix,
                                                               double tol = 1e-12);

/// Each discontinuous pressure DoF receives the continuous value at its
/// vertex: one unit entry per row.
SparseMatrix build_sv_pressure_interp(const std::vector<std::array<int, 3>>& sv_pressure_vertices,
                                      int n_cg);

enum class TransferMode { TH_injection, SV_projection };

/// Field-block-diagonal transfer between the high-order system (index 0) and
/// its low-order surrogate (index 1).
struct TransferPair {
  TransferMode mode = TransferMode::TH_injection;
  int n_u0 = 0, n_p0 = 0;
  int n_u1 = 0, n_p1 = 0;
  SparseMatrix p0_pressure;  // SV only: n_p0 x n_p1 duplication map
  std::shared_ptr<SvPressureRestrict> r0_pressure;  // SV only

  std::vector<double> prolong(const std::vector<double>& x1) const;   // low -> high
  std::vector<double> restrict_(const std::vector<double>& r0) const;  // high -> low
};

/// Injection between co-located TH and ISO systems; coordinates verified to
/// 1e-14.
TransferPair build_th_transfer(const SaddleSystem& sys0, const SaddleSystem& sys1);

/// SV <-> ISO transfer: velocity injection (co-location verified), pressure
/// duplication / mass projection.
TransferPair build_sv_transfer(const SaddleSystem& sys0, const SaddleSystem& sys1);

/// Scales the velocity block by eta_u and the pressure block by eta_p.
std::vector<double> apply_eta_weighting(const std::vector<double>& r, double eta_u, double eta_p,
                                        int n_u, int n_p);

}  // namespace stokesamg
