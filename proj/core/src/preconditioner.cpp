#include "stokesamg/preconditioner.hpp"

#include <algorithm>
#include <cmath>

#include "stokesamg/errors.hpp"

namespace stokesamg {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::DCall: return "dc-all";
    case Variant::DCLO: return "dc-lo";
    case Variant::DCHO: return "dc-ho";
    case Variant::HOAMG: return "ho-amg";
    case Variant::Uzawa: return "uzawa";
  }
  return "?";
}

Variant variant_from_string(const std::string& s) {
  if (s == "dc-all") return Variant::DCall;
  if (s == "dc-lo") return Variant::DCLO;
  if (s == "dc-ho") return Variant::DCHO;
  if (s == "ho-amg") return Variant::HOAMG;
  if (s == "uzawa") return Variant::Uzawa;
  throw ConfigError("unknown solver variant: " + s);
}

void SolverConfig::check() const {
  if (!(eta_u > 0.0) || !(eta_p > 0.0)) throw ConfigError("eta_u and eta_p must be positive");
  if (!(omega0 > 0.0 && omega0 < 2.0)) throw ConfigError("omega0 must lie in (0, 2)");
  if (nu1 < 0 || nu2 < 0) throw ConfigError("nu1 and nu2 must be non-negative");
  if (gamma < 1) throw ConfigError("gamma must be at least 1");
  if (restart < 1) throw ConfigError("restart must be at least 1");
  if (!(tol > 0.0)) throw ConfigError("tol must be positive");
  if (max_iters < 1) throw ConfigError("max_iters must be at least 1");
}

MonolithicSolver::MonolithicSolver(MonolithicHierarchy h, const SolverConfig& cfg)
    : h_(std::move(h)) {
  for (int l = 0; l + 1 < h_.num_levels(); ++l) {
    const auto& lev = h_.levels[l];
    auto patches = build_patches(lev.k, lev.n_x, lev.n_y, lev.n_p);
    vanka_.push_back(factor_patches(lev.k, patches, lev.n_x + lev.n_y));
  }
  const auto& bottom = h_.levels.back();
  DenseMatrix kd = to_dense(bottom.k);
  if (cfg.enclosed_flow) {
    // pin the constant-pressure mode on the coarsest grid
    const int row = bottom.n_x + bottom.n_y;
    kd(row, row) += 1e-12 * norm_inf(h_.levels.front().k);
  }
  coarse_lu_ = dense_lu_factor(kd);
}

void MonolithicSolver::cycle_level(int level, const std::vector<double>& b,
                                   std::vector<double>& x, int nu1, int nu2,
                                   bool skip_finest_relax, long* finest_units) const {
  if (level == h_.num_levels() - 1) {
    x = dense_lu_solve(coarse_lu_, b);
    return;
  }
  const auto& lev = h_.levels[level];
  const bool relax_here = !(level == 0 && skip_finest_relax);
  if (relax_here && nu1 > 0) {
    vanka_relax(lev.k, vanka_[level], x, b, RelaxMode::KrylovWrapped, nu1);
    if (level == 0 && finest_units) *finest_units += nu1;
  }
  std::vector<double> r = spmv(lev.k, x);
  for (size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
  std::vector<double> rc = spmv(transpose(lev.p), r);
  std::vector<double> xc(rc.size(), 0.0);
  cycle_level(level + 1, rc, xc, nu1, nu2, skip_finest_relax, finest_units);
  std::vector<double> corr = spmv(lev.p, xc);
  for (size_t i = 0; i < x.size(); ++i) x[i] += corr[i];
  if (relax_here && nu2 > 0) {
    vanka_relax(lev.k, vanka_[level], x, b, RelaxMode::KrylovWrapped, nu2);
    if (level == 0 && finest_units) *finest_units += nu2;
  }
}

std::vector<double> MonolithicSolver::vcycle(const std::vector<double>& b, int nu1, int nu2,
                                             bool skip_finest_relax, long* finest_units) const {
  std::vector<double> x(b.size(), 0.0);
  cycle_level(0, b, x, nu1, nu2, skip_finest_relax, finest_units);
  return x;
}

DCPreconditioner::DCPreconditioner(const SaddleSystem& sys0, const SaddleSystem& sys1,
                                   TransferPair transfer, SolverConfig cfg)
    : cfg_(std::move(cfg)), transfer_(std::move(transfer)) {
  if (cfg_.validate) cfg_.check();
  k0_ = assemble_saddle_matrix(sys0);
  n_u0_ = sys0.n_u();
  n_p0_ = sys0.n_p;
  if (transfer_.n_u0 != n_u0_ || transfer_.n_p0 != n_p0_)
    throw DimensionMismatch("DCPreconditioner: transfer does not match the high-order system");
  stationary_fine_ = sys0.disc == Discretization::SV;
  auto patches = build_patches(k0_, sys0.n_x, sys0.n_y, sys0.n_p, stationary_fine_);
  fine_vanka_ = factor_patches(k0_, patches, n_u0_);
  mono_ = std::make_unique<MonolithicSolver>(build_monolithic_hierarchy(sys1, cfg_.amg), cfg_);
  if (transfer_.n_u1 + transfer_.n_p1 != mono_->hierarchy().levels.front().total())
    throw DimensionMismatch("DCPreconditioner: transfer does not match the low-order system");
}

void DCPreconditioner::set_parameters(double eta_u, double eta_p, double omega0) {
  cfg_.eta_u = eta_u;
  cfg_.eta_p = eta_p;
  cfg_.omega0 = omega0;
  if (cfg_.validate) cfg_.check();
}

std::vector<double> DCPreconditioner::apply(const std::vector<double>& r) const {
  const int n = k0_.nrows;
  std::vector<double> x(n, 0.0);
  const bool relax_fine = cfg_.variant != Variant::DCLO;
  const RelaxMode mode = stationary_fine_ ? RelaxMode::Stationary : RelaxMode::KrylovWrapped;
  if (relax_fine && cfg_.nu1 > 0) {
    vanka_relax(k0_, fine_vanka_, x, r, mode, cfg_.nu1, cfg_.omega0);
    fine_relax_units += cfg_.nu1;
  }
  std::vector<double> r1;
  if (relax_fine && cfg_.nu1 > 0) {
    r1 = spmv(k0_, x);
    for (int i = 0; i < n; ++i) r1[i] = r[i] - r1[i];
  } else {
    r1 = r;
  }
  const std::vector<double> rw = apply_eta_weighting(r1, cfg_.eta_u, cfg_.eta_p, n_u0_, n_p0_);
  const std::vector<double> rc = transfer_.restrict_(rw);

  const SparseMatrix& k1 = mono_->hierarchy().levels.front().k;
  std::vector<double> e(rc.size(), 0.0);
  const bool skip_finest = cfg_.variant == Variant::DCHO;
  for (int g = 0; g < cfg_.gamma; ++g) {
    std::vector<double> res = rc;
    if (g > 0) {
      const std::vector<double> ke = spmv(k1, e);
      for (size_t i = 0; i < res.size(); ++i) res[i] -= ke[i];
    }
    const std::vector<double> de =
        mono_->vcycle(res, cfg_.nu1, cfg_.nu2, skip_finest, &level1_relax_units);
    for (size_t i = 0; i < e.size(); ++i) e[i] += de[i];
  }
  const std::vector<double> up = transfer_.prolong(e);
  for (int i = 0; i < n; ++i) x[i] += up[i];
  if (relax_fine && cfg_.nu2 > 0) {
    vanka_relax(k0_, fine_vanka_, x, r, mode, cfg_.nu2, cfg_.omega0);
    fine_relax_units += cfg_.nu2;
  }
  return x;
}

HoAmgPreconditioner::HoAmgPreconditioner(const SaddleSystem& sys0, SolverConfig cfg)
    : cfg_(std::move(cfg)) {
  if (cfg_.validate) cfg_.check();
  if (sys0.disc == Discretization::SV && !cfg_.allow_sv_hoamg)
    throw UnsupportedDiscretization(
        "HO-AMG on Scott-Vogelius is refused by default (known poorly convergent); set the "
        "override to force it");
  n_ = sys0.total_dofs();
  n_p_ = sys0.n_p;
  if (sys0.disc == Discretization::SV) {
    // the continuous-pressure auxiliary operator does not exist on the dg
    // space; guide pressure coarsening with the dg mass matrix instead
    SaddleSystem tmp = sys0;
    tmp.Ap = sys0.Mp;
    mono_ = std::make_unique<MonolithicSolver>(build_monolithic_hierarchy(tmp, cfg_.amg), cfg_);
  } else {
    mono_ = std::make_unique<MonolithicSolver>(build_monolithic_hierarchy(sys0, cfg_.amg), cfg_);
  }
}

std::vector<double> HoAmgPreconditioner::apply(const std::vector<double>& r) const {
  return mono_->vcycle(r, cfg_.nu1, cfg_.nu2, false, &fine_relax_units);
}

UzawaPreconditioner::UzawaPreconditioner(const SaddleSystem& sys, SolverConfig cfg)
    : cfg_(std::move(cfg)) {
  if (cfg_.validate) cfg_.check();
  n_x_ = sys.n_x;
  n_u_ = sys.n_u();
  n_p_ = sys.n_p;
  b_ = sys.B;
  amg_x_ = build_scalar_hierarchy(extract_block(sys.A, 0, n_x_, 0, n_x_), cfg_.amg);
  amg_y_ = build_scalar_hierarchy(extract_block(sys.A, n_x_, n_u_, n_x_, n_u_), cfg_.amg);
  if (sys.disc == Discretization::SV) {
    sv_exact_mass_ = true;
    sv_element_areas_ = sys.sv_element_areas;
  } else {
    amg_mp_ = build_scalar_hierarchy(sys.Mp, cfg_.amg);
  }
}

std::vector<double> UzawaPreconditioner::apply(const std::vector<double>& r) const {
  std::vector<double> du(n_u_, 0.0);
  {
    std::vector<double> rx(r.begin(), r.begin() + n_x_);
    std::vector<double> ry(r.begin() + n_x_, r.begin() + n_u_);
    std::vector<double> dx(n_x_, 0.0), dy(n_u_ - n_x_, 0.0);
    scalar_vcycle(amg_x_, rx, dx);
    scalar_vcycle(amg_y_, ry, dy);
    std::copy(dx.begin(), dx.end(), du.begin());
    std::copy(dy.begin(), dy.end(), du.begin() + n_x_);
  }
  std::vector<double> t = spmv(b_, du);
  for (int i = 0; i < n_p_; ++i) t[i] -= r[n_u_ + i];
  std::vector<double> dp(n_p_, 0.0);
  if (sv_exact_mass_) {
    // element mass block (a/12)[[2,1,1],[1,2,1],[1,1,2]] has the closed-form
    // inverse (3/a)[[3,-1,-1],[-1,3,-1],[-1,-1,3]]
    for (size_t e = 0; e < sv_element_areas_.size(); ++e) {
      const double c = 3.0 / sv_element_areas_[e];
      const double t0 = t[3 * e], t1 = t[3 * e + 1], t2 = t[3 * e + 2];
      dp[3 * e] = c * (3 * t0 - t1 - t2);
      dp[3 * e + 1] = c * (-t0 + 3 * t1 - t2);
      dp[3 * e + 2] = c * (-t0 - t1 + 3 * t2);
    }
  } else {
    scalar_vcycle(amg_mp_, t, dp);
  }
  std::vector<double> out(n_u_ + n_p_);
  std::copy(du.begin(), du.end(), out.begin());
  std::copy(dp.begin(), dp.end(), out.begin() + n_u_);
  return out;
}

SolveResult solve_stokes(const SparseMatrix& k0, const std::vector<double>& rhs,
                         const StokesPreconditioner& prec, const SolverConfig& cfg) {
  if (cfg.validate) cfg.check();
  const int n = k0.nrows;
  const int n_p = prec.pressure_size();
  const int n_u = n - n_p;
  auto project_pressure = [&](std::vector<double>& v) {
    double mean = 0.0;
    for (int i = 0; i < n_p; ++i) mean += v[n_u + i];
    mean /= n_p;
    for (int i = 0; i < n_p; ++i) v[n_u + i] -= mean;
  };
  auto apply_prec = [&](const std::vector<double>& r, std::vector<double>& z) {
    if (cfg.enclosed_flow) {
      std::vector<double> rp = r;
      project_pressure(rp);
      z = prec.apply(rp);
      project_pressure(z);
    } else {
      z = prec.apply(r);
    }
  };
  FgmresOptions opt;
  opt.tol = cfg.tol;
  opt.restart = cfg.restart;
  opt.max_iters = cfg.max_iters;
  SolveResult res;
  res.x.assign(n, 0.0);
  res.report = fgmres(matrix_operator(k0), rhs, res.x, apply_prec, opt);
  return res;
}

ScanResult parameter_scan(DCPreconditioner& prec, const std::vector<double>& rhs,
                          const std::vector<double>& omega0_values,
                          const std::vector<double>& eta_values, bool couple_eta,
                          double fixed_eta_u, double tol, int max_iters) {
  ScanResult out;
  SolverConfig solve_cfg = prec.config();
  solve_cfg.tol = tol;
  solve_cfg.max_iters = max_iters;
  for (double w0 : omega0_values) {
    for (double eta : eta_values) {
      ScanPoint pt;
      pt.omega0 = w0;
      pt.eta_p = eta;
      pt.eta_u = couple_eta ? eta : fixed_eta_u;
      prec.set_parameters(pt.eta_u, pt.eta_p, pt.omega0);
      auto res = solve_stokes(prec.k0(), rhs, prec, solve_cfg);
      pt.iterations = res.report.iterations;
      pt.converged = res.report.converged;
      const auto& h = res.report.residual_history;
      if (h.size() >= 2) {
        const size_t back = std::min<size_t>(10, h.size() - 1);
        const double num = h.back();
        const double den = h[h.size() - 1 - back];
        pt.last10_factor = den > 0.0 ? std::pow(num / den, 1.0 / back) : 1.0;
      }
      out.points.push_back(pt);
    }
  }
  // optimum: fewest iterations; prefer eta = 1 when it ties; then the
  // smallest trailing convergence factor; then first occurrence
  int best_iters = max_iters + 1;
  for (const auto& pt : out.points) best_iters = std::min(best_iters, pt.iterations);
  for (size_t i = 0; i < out.points.size(); ++i) {
    const auto& pt = out.points[i];
    if (pt.iterations != best_iters) continue;
    if (out.best < 0) {
      out.best = static_cast<int>(i);
      continue;
    }
    const auto& cur = out.points[out.best];
    const bool pt_unit = couple_eta && pt.eta_p == 1.0;
    const bool cur_unit = couple_eta && cur.eta_p == 1.0;
    if (pt_unit && !cur_unit) {
      out.best = static_cast<int>(i);
    } else if (pt_unit == cur_unit && pt.last10_factor < cur.last10_factor) {
      out.best = static_cast<int>(i);
    }
  }
  return out;
}

}  // namespace stokesamg
