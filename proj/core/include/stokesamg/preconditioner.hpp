#pragma once

#include <memory>
#include <vector>

#include "stokesamg/amg.hpp"
#include "stokesamg/fem.hpp"
#include "stokesamg/krylov.hpp"
#include "stokesamg/transfer.hpp"
#include "stokesamg/vanka.hpp"

namespace stokesamg {

enum class Variant { DCall, DCLO, DCHO, HOAMG, Uzawa };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

struct SolverConfig {
  Variant variant = Variant::DCall;
  double eta_u = 1.0;
  double eta_p = 1.0;
  double omega0 = 1.0;  // stationary fine-relaxation damping (SV)
  int nu1 = 2;
  int nu2 = 2;
  int gamma = 1;  // V-cycles on the low-order system per application
  int restart = 20;
  double tol = 1e-10;
  int max_iters = 200;
  AmgConfig amg;
  bool allow_sv_hoamg = false;  // HO-AMG on SV is refused unless overridden
  bool enclosed_flow = false;   // all-Dirichlet: project out the pressure constant
  bool validate = true;

  void check() const;  // throws ConfigError on invariant violations
};

/// A preconditioner maps a residual to a correction; zero maps to zero.
class StokesPreconditioner {
 public:
  virtual ~StokesPreconditioner() = default;
  virtual std::vector<double> apply(const std::vector<double>& r) const = 0;
  virtual int size() const = 0;
  virtual int pressure_size() const = 0;

  // relaxation-unit instrumentation (per-application counters accumulate)
  mutable long fine_relax_units = 0;    // units spent on the K0 system
  mutable long level1_relax_units = 0;  // units spent on the finest low-order level
};

/// Shared monolithic V-cycle: Krylov-wrapped Vanka relaxation on every level,
/// dense LU on the coarsest.
class MonolithicSolver {
 public:
  MonolithicSolver(MonolithicHierarchy h, const SolverConfig& cfg);

  /// One V(nu1, nu2) cycle for K e = b starting from e = 0. When
  /// skip_finest_relax is set, no relaxation is performed on level 0 of this
  /// hierarchy; relaxed units on level 0 are reported through *finest_units.
  std::vector<double> vcycle(const std::vector<double>& b, int nu1, int nu2,
                             bool skip_finest_relax, long* finest_units) const;

  const MonolithicHierarchy& hierarchy() const { return h_; }
  const std::vector<VankaFactorization>& factorizations() const { return vanka_; }

 private:
  void cycle_level(int level, const std::vector<double>& b, std::vector<double>& x, int nu1,
                   int nu2, bool skip_finest_relax, long* finest_units) const;

  MonolithicHierarchy h_;
  std::vector<VankaFactorization> vanka_;  // one per non-coarsest level
  LUFactors coarse_lu_;
};

/// Defect-correction preconditioner: relaxation on the high-order system K0,
/// coarse correction through the low-order surrogate K1 and its AMG hierarchy.
class DCPreconditioner : public StokesPreconditioner {
 public:
  DCPreconditioner(const SaddleSystem& sys0, const SaddleSystem& sys1, TransferPair transfer,
                   SolverConfig cfg);

  std::vector<double> apply(const std::vector<double>& r) const override;
  int size() const override { return k0_.nrows; }
  int pressure_size() const override { return n_p0_; }

  /// eta and omega0 do not enter the setup; scans reuse one instance.
  void set_parameters(double eta_u, double eta_p, double omega0);
  const SolverConfig& config() const { return cfg_; }
  const SparseMatrix& k0() const { return k0_; }
  const MonolithicSolver& low_order() const { return *mono_; }

 private:
  SolverConfig cfg_;
  SparseMatrix k0_;
  int n_u0_ = 0, n_p0_ = 0;
  bool stationary_fine_ = false;  // SV finest grid uses stationary Vanka
  VankaFactorization fine_vanka_;
  TransferPair transfer_;
  std::unique_ptr<MonolithicSolver> mono_;
};

/// Monolithic AMG applied directly to the high-order system.
class HoAmgPreconditioner : public StokesPreconditioner {
 public:
  HoAmgPreconditioner(const SaddleSystem& sys0, SolverConfig cfg);

  std::vector<double> apply(const std::vector<double>& r) const override;
  int size() const override { return n_; }
  int pressure_size() const override { return n_p_; }
  const MonolithicSolver& solver() const { return *mono_; }

 private:
  SolverConfig cfg_;
  int n_ = 0;
  int n_p_ = 0;
  std::unique_ptr<MonolithicSolver> mono_;
};

/// Inexact Uzawa: du = Q_A^-1 r_u (scalar V-cycle per component),
/// dp = Q_B^-1 (B du - r_p) (exact element mass inverse for SV, scalar V-cycle
/// on Mp for TH/ISO).
class UzawaPreconditioner : public StokesPreconditioner {
 public:
  UzawaPreconditioner(const SaddleSystem& sys, SolverConfig cfg);

  std::vector<double> apply(const std::vector<double>& r) const override;
  int size() const override { return n_u_ + n_p_; }
  int pressure_size() const override { return n_p_; }

 private:
  SolverConfig cfg_;
  int n_x_ = 0, n_u_ = 0, n_p_ = 0;
  bool sv_exact_mass_ = false;
  SparseMatrix b_;
  ScalarHierarchy amg_x_, amg_y_;
  ScalarHierarchy amg_mp_;                  // TH/ISO pressure mass
  std::vector<double> sv_element_areas_;    // SV exact inverse blocks
};

struct SolveResult {
  std::vector<double> x;
  KrylovReport report;
};

/// Outer FGMRES on K0 with the given preconditioner; handles the
/// enclosed-flow constant-pressure projection when configured.
SolveResult solve_stokes(const SparseMatrix& k0, const std::vector<double>& rhs,
                         const StokesPreconditioner& prec, const SolverConfig& cfg);

struct ScanPoint {
  double omega0 = 1.0;
  double eta_u = 1.0;
  double eta_p = 1.0;
  int iterations = 0;
  bool converged = false;
  double last10_factor = 1.0;  // geometric mean of the trailing residual ratios
};

struct ScanResult {
  std::vector<ScanPoint> points;
  int best = -1;
};

/// Brute-force grid scan to a 1e-8 relative residual. couple_eta scans
/// eta_u = eta_p = eta (TH); otherwise eta_u stays fixed and eta_p is scanned
/// (SV overweighting).
ScanResult parameter_scan(DCPreconditioner& prec, const std::vector<double>& rhs,
                          const std::vector<double>& omega0_values,
                          const std::vector<double>& eta_values, bool couple_eta,
                          double fixed_eta_u = 1.0, double tol = 1e-8, int max_iters = 200);

}  // namespace stokesamg
