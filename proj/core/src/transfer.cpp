#include "stokesamg/transfer.hpp"

#include <cmath>

#include "stokesamg/errors.hpp"
#include "stokesamg/krylov.hpp"

namespace stokesamg {

SvPressureRestrict::SvPressureRestrict(SparseMatrix mcg, SparseMatrix mmix, double tol)
    : mcg_(std::move(mcg)), mmix_(std::move(mmix)), tol_(tol) {
  if (mcg_.nrows != mmix_.nrows)
    throw DimensionMismatch("SvPressureRestrict: mass matrices disagree on the cg dimension");
  AmgConfig cfg;
  amg_ = build_scalar_hierarchy(mcg_, cfg);
}

std::vector<double> SvPressureRestrict::apply(const std::vector<double>& p_dg) const {
  if (static_cast<int>(p_dg.size()) != mmix_.ncols)
    throw DimensionMismatch("SvPressureRestrict: dg vector size mismatch");
  const std::vector<double> b = spmv(mmix_, p_dg);
  std::vector<double> x(mcg_.nrows, 0.0);
  FgmresOptions opt;
  opt.tol = tol_;
  opt.max_iters = 200;
  opt.restart = 20;
  auto prec = [this](const std::vector<double>& r, std::vector<double>& z) {
    z.assign(r.size(), 0.0);
    scalar_vcycle(amg_, r, z);
  };
  auto rep = fgmres(matrix_operator(mcg_), b, x, prec, opt);
  if (!rep.converged)
    throw SolverStagnation("SvPressureRestrict: mass projection did not reach tolerance in 200 "
                           "iterations");
  iterations_.push_back(rep.iterations);
  return x;
}

std::shared_ptr<SvPressureRestrict> build_sv_pressure_restrict(const SparseMatrix& mcg,
                                                               const SparseMatrix& mmix,
                                                               double tol) {
  return std::make_shared<SvPressureRestrict>(mcg, mmix, tol);
}

SparseMatrix build_sv_pressure_interp(const std::vector<std::array<int, 3>>& sv_pressure_vertices,
                                      int n_cg) {
  std::vector<Triplet> trips;
  trips.reserve(sv_pressure_vertices.size() * 3);
  for (size_t t = 0; t < sv_pressure_vertices.size(); ++t)
    for (int k = 0; k < 3; ++k)
      trips.push_back({static_cast<int>(3 * t + k), sv_pressure_vertices[t][k], 1.0});
  return from_triplets(static_cast<int>(3 * sv_pressure_vertices.size()), n_cg, std::move(trips));
}

namespace {

void check_colocated(const std::vector<std::array<double, 2>>& a,
                     const std::vector<std::array<double, 2>>& b, const char* what) {
  if (a.size() != b.size())
    throw DimensionMismatch(std::string("transfer: ") + what + " DoF counts differ");
  for (size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a[i][0] - b[i][0]) > 1e-14 || std::abs(a[i][1] - b[i][1]) > 1e-14)
      throw CompatibilityError(std::string("transfer: ") + what + " DoF " + std::to_string(i) +
                               " is not co-located");
  }
}

}  // namespace

TransferPair build_th_transfer(const SaddleSystem& sys0, const SaddleSystem& sys1) {
  check_colocated(sys0.velocity_coords, sys1.velocity_coords, "velocity");
  check_colocated(sys0.pressure_coords, sys1.pressure_coords, "pressure");
  TransferPair t;
  t.mode = TransferMode::TH_injection;
  t.n_u0 = sys0.n_u();
  t.n_p0 = sys0.n_p;
  t.n_u1 = sys1.n_u();
  t.n_p1 = sys1.n_p;
  return t;
}

TransferPair build_sv_transfer(const SaddleSystem& sys0, const SaddleSystem& sys1) {
  if (sys0.disc != Discretization::SV)
    throw UnsupportedDiscretization("build_sv_transfer: high-order system is not SV");
  check_colocated(sys0.velocity_coords, sys1.velocity_coords, "velocity");
  TransferPair t;
  t.mode = TransferMode::SV_projection;
  t.n_u0 = sys0.n_u();
  t.n_p0 = sys0.n_p;
  t.n_u1 = sys1.n_u();
  t.n_p1 = sys1.n_p;
  t.p0_pressure = build_sv_pressure_interp(sys0.sv_pressure_vertices, sys1.n_p);
  t.r0_pressure = build_sv_pressure_restrict(sys0.Mp_cg, sys0.M_mix);
  return t;
}

std::vector<double> TransferPair::prolong(const std::vector<double>& x1) const {
  if (static_cast<int>(x1.size()) != n_u1 + n_p1)
    throw DimensionMismatch("TransferPair::prolong: size mismatch");
  std::vector<double> x0(n_u0 + n_p0, 0.0);
  for (int i = 0; i < n_u0; ++i) x0[i] = x1[i];
  if (mode == TransferMode::TH_injection) {
    for (int i = 0; i < n_p0; ++i) x0[n_u0 + i] = x1[n_u1 + i];
  } else {
    const std::vector<double> p_cg(x1.begin() + n_u1, x1.end());
    const std::vector<double> p_dg = spmv(p0_pressure, p_cg);
    for (int i = 0; i < n_p0; ++i) x0[n_u0 + i] = p_dg[i];
  }
  return x0;
}

std::vector<double> TransferPair::restrict_(const std::vector<double>& r0) const {
  if (static_cast<int>(r0.size()) != n_u0 + n_p0)
    throw DimensionMismatch("TransferPair::restrict: size mismatch");
  std::vector<double> r1(n_u1 + n_p1, 0.0);
  for (int i = 0; i < n_u1; ++i) r1[i] = r0[i];
  if (mode == TransferMode::TH_injection) {
    for (int i = 0; i < n_p1; ++i) r1[n_u1 + i] = r0[n_u0 + i];
  } else {
    const std::vector<double> p_dg(r0.begin() + n_u0, r0.end());
    const std::vector<double> p_cg = r0_pressure->apply(p_dg);
    for (int i = 0; i < n_p1; ++i) r1[n_u1 + i] = p_cg[i];
  }
  return r1;
}

std::vector<double> apply_eta_weighting(const std::vector<double>& r, double eta_u, double eta_p,
                                        int n_u, int n_p) {
  if (static_cast<int>(r.size()) != n_u + n_p)
    throw DimensionMismatch("apply_eta_weighting: size mismatch");
  std::vector<double> out(r.size());
  for (int i = 0; i < n_u; ++i) out[i] = eta_u * r[i];
  for (int i = 0; i < n_p; ++i) out[n_u + i] = eta_p * r[n_u + i];
  return out;
}

}  // namespace stokesamg
