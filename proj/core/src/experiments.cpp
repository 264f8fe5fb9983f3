#include "stokesamg/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include <json.hpp>

#include "stokesamg/errors.hpp"

namespace stokesamg {

namespace {

using nlohmann::json;

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

Discretization disc_from_string(const std::string& s) {
  if (s == "th" || s == "TH") return Discretization::TH;
  if (s == "sv" || s == "SV") return Discretization::SV;
  throw ConfigError("experiment spec: unknown discretization: " + s);
}

std::string disc_to_string(Discretization d) {
  return d == Discretization::SV ? "sv" : "th";
}

SolverConfig solver_config_from_json(const json& j, const SolverConfig& defaults) {
  SolverConfig c = defaults;
  if (j.contains("variant")) c.variant = variant_from_string(j.at("variant").get<std::string>());
  if (j.contains("eta_u")) c.eta_u = j.at("eta_u").get<double>();
  if (j.contains("eta_p")) c.eta_p = j.at("eta_p").get<double>();
  if (j.contains("eta")) c.eta_u = c.eta_p = j.at("eta").get<double>();
  if (j.contains("omega0")) c.omega0 = j.at("omega0").get<double>();
  if (j.contains("nu1")) c.nu1 = j.at("nu1").get<int>();
  if (j.contains("nu2")) c.nu2 = j.at("nu2").get<int>();
  if (j.contains("gamma")) c.gamma = j.at("gamma").get<int>();
  if (j.contains("restart")) c.restart = j.at("restart").get<int>();
  if (j.contains("tol")) c.tol = j.at("tol").get<double>();
  if (j.contains("max_iters")) c.max_iters = j.at("max_iters").get<int>();
  if (j.contains("allow_sv_hoamg")) c.allow_sv_hoamg = j.at("allow_sv_hoamg").get<bool>();
  if (j.contains("coarse_size")) c.amg.coarse_size = j.at("coarse_size").get<int>();
  if (j.contains("evolution_soc")) c.amg.use_evolution_soc = j.at("evolution_soc").get<bool>();
  return c;
}

ProblemData problem_data_for(const ExperimentSpec& spec) {
  if (spec.problem == "bfs") return bfs_problem();
  if (spec.problem == "channel") return channel_problem();
  if (spec.problem == "manufactured") return manufactured_unit_square().problem;
  if (spec.problem == "cavity") {
    ProblemData p = zero_problem();
    p.dirichlet = [](BoundaryTag, double, double y) {
      return std::array<double, 2>{y > 1 - 1e-12 ? 1.0 : 0.0, 0.0};
    };
    p.check_compatibility = false;
    return p;
  }
  if (spec.problem == "forced") {
    ProblemData p = zero_problem();
    p.force = [](double x, double y) {
      return std::array<double, 2>{std::sin(3.0 * y) + 1.0, std::cos(2.0 * x)};
    };
    return p;
  }
  throw ConfigError("experiment spec: unknown problem: " + spec.problem);
}

EdgeTagger tagger_for(const ExperimentSpec& spec, const RectDomain& dom) {
  if (spec.problem == "cavity")
    return [](double, double) { return BoundaryTag::DirichletZero; };
  if (spec.problem == "channel")
    return [dom](double x, double) {
      if (x < dom.x0 + 1e-12) return BoundaryTag::DirichletInflow;
      if (x > dom.x1 - 1e-12) return BoundaryTag::Neumann;
      return BoundaryTag::DirichletZero;
    };
  // forced / manufactured: Neumann outflow on the right side
  return [dom](double x, double) {
    return x > dom.x1 - 1e-12 ? BoundaryTag::Neumann : BoundaryTag::DirichletZero;
  };
}

SimplicialMesh2D base_mesh(const ExperimentSpec& spec, int refinement) {
  if (spec.mesh.kind == "bfs") return structured_bfs_mesh(spec.mesh.n << refinement);
  if (spec.mesh.kind == "structured") {
    RectDomain dom{0, 0, 1, 1};
    const int n = spec.mesh.n << refinement;
    return structured_tri_mesh(n, n, dom, tagger_for(spec, dom));
  }
  if (spec.mesh.kind == "file") {
    SimplicialMesh2D m = read_mesh(spec.mesh.path);
    for (int r = 0; r < refinement; ++r) m = quadrisect(m).first;
    return m;
  }
  throw ConfigError("experiment spec: unknown mesh kind: " + spec.mesh.kind);
}

std::unique_ptr<StokesPreconditioner> make_preconditioner(const AssembledCase& c,
                                                          const SolverConfig& cfg,
                                                          std::vector<LevelStat>* levels) {
  auto fill = [&](const MonolithicHierarchy& h) {
    if (!levels) return;
    for (int l = 0; l < h.num_levels(); ++l) {
      const auto& lev = h.levels[l];
      levels->push_back({l, lev.n_x, lev.n_y, lev.n_p, lev.k.nnz(),
                         lev.n_p > 0 ? double(lev.n_x + lev.n_y) / lev.n_p : 0.0});
    }
  };
  switch (cfg.variant) {
    case Variant::DCall:
    case Variant::DCLO:
    case Variant::DCHO: {
      auto p = std::make_unique<DCPreconditioner>(c.sys0, c.sys1, c.transfer, cfg);
      fill(p->low_order().hierarchy());
      return p;
    }
    case Variant::HOAMG: {
      auto p = std::make_unique<HoAmgPreconditioner>(c.sys0, cfg);
      fill(p->solver().hierarchy());
      return p;
    }
    case Variant::Uzawa:
      return std::make_unique<UzawaPreconditioner>(c.sys0, cfg);
  }
  throw ConfigError("unknown solver variant");
}

}  // namespace

void ExperimentSpec::check() const {
  if (refinements.empty()) throw ConfigError("experiment spec: empty refinement list");
  for (int r : refinements)
    if (r < 0 || r > 12) throw ConfigError("experiment spec: refinement out of range");
  if (mesh.kind != "structured" && mesh.kind != "bfs" && mesh.kind != "file")
    throw ConfigError("experiment spec: unknown mesh kind: " + mesh.kind);
  if (mesh.kind != "file" && mesh.n < 1)
    throw ConfigError("experiment spec: mesh.n must be positive");
  if (mesh.kind == "file" && mesh.path.empty())
    throw ConfigError("experiment spec: mesh.path required for kind=file");
  if (scan_omega0.empty() || scan_eta.empty())
    throw ConfigError("experiment spec: scan grids must be non-empty");
  for (const auto& s : solvers) s.config.check();
}

ExperimentSpec parse_experiment_spec_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("experiment spec: invalid JSON: ") + e.what());
  }
  try {
    ExperimentSpec spec;
    if (j.contains("problem")) spec.problem = j.at("problem").get<std::string>();
    if (j.contains("discretization"))
      spec.disc = disc_from_string(j.at("discretization").get<std::string>());
    if (j.contains("mesh")) {
      const auto& m = j.at("mesh");
      if (m.contains("kind")) spec.mesh.kind = m.at("kind").get<std::string>();
      if (m.contains("n")) spec.mesh.n = m.at("n").get<int>();
      if (m.contains("path")) spec.mesh.path = m.at("path").get<std::string>();
    }
    if (j.contains("refinements")) spec.refinements = j.at("refinements").get<std::vector<int>>();
    SolverConfig defaults;
    if (j.contains("tol")) defaults.tol = j.at("tol").get<double>();
    if (j.contains("max_iters")) defaults.max_iters = j.at("max_iters").get<int>();
    if (spec.problem == "cavity") defaults.enclosed_flow = true;
    if (j.contains("solvers")) {
      for (const auto& s : j.at("solvers")) {
        SolverSpec ss;
        ss.config = solver_config_from_json(s, defaults);
        ss.name = s.contains("name") ? s.at("name").get<std::string>()
                                     : to_string(ss.config.variant);
        spec.solvers.push_back(std::move(ss));
      }
    }
    if (j.contains("scan")) {
      const auto& s = j.at("scan");
      if (s.contains("omega0")) spec.scan_omega0 = s.at("omega0").get<std::vector<double>>();
      if (s.contains("eta")) spec.scan_eta = s.at("eta").get<std::vector<double>>();
      if (s.contains("couple_eta")) spec.couple_eta = s.at("couple_eta").get<bool>();
      if (s.contains("fixed_eta_u")) spec.fixed_eta_u = s.at("fixed_eta_u").get<double>();
    }
    if (j.contains("seed")) spec.seed = j.at("seed").get<unsigned>();
    spec.check();
    return spec;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("experiment spec: ") + e.what());
  }
}

ExperimentSpec parse_experiment_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("experiment spec: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment_spec_text(ss.str());
}

AssembledCase build_case(const ExperimentSpec& spec, int refinement) {
  const ProblemData prob = problem_data_for(spec);
  AssembledCase c;
  c.enclosed = spec.problem == "cavity";
  SimplicialMesh2D m = base_mesh(spec, refinement);
  if (spec.disc == Discretization::SV) {
    auto [mb, bmap] = barycentric_refine(m);
    c.mesh = std::move(mb);
    c.sys0 = assemble_scott_vogelius(c.mesh, prob);
    auto [mf, qmap] = quadrisect(c.mesh);
    c.sys1 = assemble_iso(c.mesh, mf, qmap, prob);
    c.transfer = build_sv_transfer(c.sys0, c.sys1);
  } else {
    c.mesh = std::move(m);
    c.sys0 = assemble_taylor_hood(c.mesh, prob);
    auto [mf, qmap] = quadrisect(c.mesh);
    c.sys1 = assemble_iso(c.mesh, mf, qmap, prob);
    c.transfer = build_th_transfer(c.sys0, c.sys1);
  }
  return c;
}

std::vector<RunRecord> cmd_solve(const ExperimentSpec& spec, int repeats) {
  spec.check();
  if (repeats < 1) throw ConfigError("repeats must be positive");
  std::vector<RunRecord> out;
  for (int r : spec.refinements) {
    bool assembled = false;
    AssembledCase c;
    std::string assembly_error;
    try {
      c = build_case(spec, r);
      assembled = true;
    } catch (const Error& e) {
      assembly_error = e.what();
    }
    for (const auto& solver : spec.solvers) {
      RunRecord rec;
      rec.problem = spec.problem + "/" + disc_to_string(spec.disc);
      rec.solver = solver.name;
      rec.refinement = r;
      if (!assembled) {
        rec.error = assembly_error;
        out.push_back(std::move(rec));
        continue;
      }
      rec.n_x = c.sys0.n_x;
      rec.n_y = c.sys0.n_y;
      rec.n_p = c.sys0.n_p;
      try {
        SolverConfig cfg = solver.config;
        cfg.enclosed_flow = cfg.enclosed_flow || c.enclosed;
        const double t0 = now_seconds();
        auto prec = make_preconditioner(c, cfg, &rec.levels);
        const SparseMatrix k0 = assemble_saddle_matrix(c.sys0);
        rec.setup_seconds = now_seconds() - t0;
        SolveResult res;
        double best = 0.0;
        for (int rep = 0; rep < repeats; ++rep) {
          const double s0 = now_seconds();
          res = solve_stokes(k0, c.sys0.rhs, *prec, cfg);
          const double dt = now_seconds() - s0;
          if (rep == 0 || dt < best) best = dt;
        }
        rec.solve_seconds = best;
        rec.iterations = res.report.iterations;
        rec.converged = res.report.converged;
        rec.residual_history = res.report.residual_history;
        const auto ax = spmv(k0, res.x);
        double rn = 0.0, bn = 0.0;
        for (size_t i = 0; i < ax.size(); ++i) {
          const double d = c.sys0.rhs[i] - ax[i];
          rn += d * d;
          bn += c.sys0.rhs[i] * c.sys0.rhs[i];
        }
        rec.true_final_relative_residual = bn > 0 ? std::sqrt(rn / bn) : std::sqrt(rn);
      } catch (const Error& e) {
        rec.error = e.what();
        rec.converged = false;
      }
      out.push_back(std::move(rec));
    }
  }
  return out;
}

std::vector<ScanTable> cmd_scan(const ExperimentSpec& spec) {
  spec.check();
  SolverConfig cfg = spec.solvers.empty() ? SolverConfig{} : spec.solvers.front().config;
  if (cfg.variant == Variant::HOAMG || cfg.variant == Variant::Uzawa)
    throw ConfigError("parameter scans apply to the defect-correction variants");
  std::vector<ScanTable> out;
  for (int r : spec.refinements) {
    AssembledCase c = build_case(spec, r);
    cfg.enclosed_flow = cfg.enclosed_flow || c.enclosed;
    DCPreconditioner prec(c.sys0, c.sys1, c.transfer, cfg);
    ScanTable t;
    t.refinement = r;
    t.result = parameter_scan(prec, c.sys0.rhs, spec.scan_omega0, spec.scan_eta,
                              spec.couple_eta, spec.fixed_eta_u);
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<StatsRecord> cmd_stats(const ExperimentSpec& spec) {
  spec.check();
  const AmgConfig amg =
      spec.solvers.empty() ? AmgConfig{} : spec.solvers.front().config.amg;
  std::vector<StatsRecord> out;
  for (int r : spec.refinements) {
    AssembledCase c = build_case(spec, r);
    MonolithicHierarchy h = build_monolithic_hierarchy(c.sys1, amg);
    StatsRecord rec;
    rec.refinement = r;
    rec.truncated = h.truncated;
    for (int l = 0; l < h.num_levels(); ++l) {
      const auto& lev = h.levels[l];
      rec.levels.push_back({l, lev.n_x, lev.n_y, lev.n_p, lev.k.nnz(),
                            lev.n_p > 0 ? double(lev.n_x + lev.n_y) / lev.n_p : 0.0});
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<MmsRow> cmd_mms(const ExperimentSpec& spec) {
  spec.check();
  ExperimentSpec ms = spec;
  ms.problem = "manufactured";
  ms.mesh.kind = "structured";
  const ManufacturedCase mc = manufactured_unit_square();
  SolverConfig cfg = spec.solvers.empty() ? SolverConfig{} : spec.solvers.front().config;
  std::vector<MmsRow> out;
  for (int r : ms.refinements) {
    AssembledCase c = build_case(ms, r);
    DCPreconditioner prec(c.sys0, c.sys1, c.transfer, cfg);
    const SparseMatrix k0 = assemble_saddle_matrix(c.sys0);
    auto res = solve_stokes(k0, c.sys0.rhs, prec, cfg);
    if (!res.report.converged)
      throw SolverStagnation("cmd_mms: solve did not converge at refinement " +
                             std::to_string(r));
    const MMSErrors err = mms_errors(c.sys0, c.mesh, res.x, mc.u_exact, mc.p_exact);
    MmsRow row;
    row.refinement = r;
    row.h = 1.0 / (ms.mesh.n << r);
    row.velocity_error = err.velocity_l2 / err.velocity_norm;
    row.pressure_error = err.pressure_l2 / err.pressure_norm;
    row.iterations = res.report.iterations;
    if (ms.disc == Discretization::SV) {
      const DivergenceReport div = sv_divergence(c.sys0, c.mesh, res.x);
      double d2 = 0.0;
      for (double v : div.element_div2) d2 += v;
      row.sv_divergence_rel = std::sqrt(d2) / std::sqrt(div.grad_norm2);
    }
    if (!out.empty()) {
      const MmsRow& prev = out.back();
      const double lh = std::log(prev.h / row.h);
      row.velocity_order = std::log(prev.velocity_error / row.velocity_error) / lh;
      row.pressure_order = std::log(prev.pressure_error / row.pressure_error) / lh;
    }
    out.push_back(row);
  }
  return out;
}

std::string solve_csv(const std::vector<RunRecord>& records) {
  std::ostringstream os;
  os << "problem,solver,refinement,n_x,n_y,n_p,dofs,iterations,converged,"
        "setup_seconds,solve_seconds,relative_time,error\n";
  for (const auto& r : records) {
    // normalize against the Uzawa run at the same refinement, when present
    double uzawa_time = -1.0;
    for (const auto& u : records)
      if (u.refinement == r.refinement && u.solver == "uzawa" && u.converged)
        uzawa_time = u.setup_seconds + u.solve_seconds;
    os << r.problem << ',' << r.solver << ',' << r.refinement << ',' << r.n_x << ','
       << r.n_y << ',' << r.n_p << ',' << r.dofs() << ',' << r.iterations << ','
       << (r.converged ? 1 : 0) << ',' << fmt(r.setup_seconds) << ','
       << fmt(r.solve_seconds) << ',';
    if (uzawa_time > 0.0) os << fmt((r.setup_seconds + r.solve_seconds) / uzawa_time);
    os << ',' << r.error << '\n';
  }
  return os.str();
}

std::string solve_json(const std::vector<RunRecord>& records) {
  json out = json::array();
  for (const auto& r : records) {
    json levels = json::array();
    for (const auto& l : r.levels)
      levels.push_back({{"level", l.level},
                        {"n_x", l.n_x},
                        {"n_y", l.n_y},
                        {"n_p", l.n_p},
                        {"nnz", l.nnz},
                        {"vp_ratio", l.vp_ratio}});
    out.push_back({{"problem", r.problem},
                   {"solver", r.solver},
                   {"refinement", r.refinement},
                   {"n_x", r.n_x},
                   {"n_y", r.n_y},
                   {"n_p", r.n_p},
                   {"iterations", r.iterations},
                   {"converged", r.converged},
                   {"error", r.error},
                   {"setup_seconds", r.setup_seconds},
                   {"solve_seconds", r.solve_seconds},
                   {"levels", levels},
                   {"residual_history", r.residual_history},
                   {"true_final_relative_residual", r.true_final_relative_residual}});
  }
  return out.dump(2) + "\n";
}

std::string scan_csv(const std::vector<ScanTable>& tables) {
  std::ostringstream os;
  os << "refinement,omega0,eta_u,eta_p,iterations,converged,last10_factor,selected\n";
  for (const auto& t : tables) {
    for (size_t i = 0; i < t.result.points.size(); ++i) {
      const auto& p = t.result.points[i];
      os << t.refinement << ',' << fmt(p.omega0) << ',' << fmt(p.eta_u) << ','
         << fmt(p.eta_p) << ',' << p.iterations << ',' << (p.converged ? 1 : 0) << ','
         << fmt(p.last10_factor) << ',' << (static_cast<int>(i) == t.result.best ? 1 : 0)
         << '\n';
    }
  }
  return os.str();
}

std::string stats_csv(const std::vector<StatsRecord>& records) {
  std::ostringstream os;
  os << "refinement,level,n_x,n_y,n_p,nnz,vp_ratio,ratio_drift,truncated\n";
  for (const auto& r : records) {
    const double fine = r.levels.empty() ? 1.0 : r.levels.front().vp_ratio;
    for (const auto& l : r.levels)
      os << r.refinement << ',' << l.level << ',' << l.n_x << ',' << l.n_y << ','
         << l.n_p << ',' << l.nnz << ',' << fmt(l.vp_ratio) << ','
         << fmt(fine > 0 ? l.vp_ratio / fine : 0.0) << ',' << (r.truncated ? 1 : 0)
         << '\n';
  }
  return os.str();
}

std::string stats_json(const std::vector<StatsRecord>& records) {
  json out = json::array();
  for (const auto& r : records) {
    json levels = json::array();
    const double fine = r.levels.empty() ? 1.0 : r.levels.front().vp_ratio;
    for (const auto& l : r.levels)
      levels.push_back({{"level", l.level},
                        {"n_x", l.n_x},
                        {"n_y", l.n_y},
                        {"n_p", l.n_p},
                        {"nnz", l.nnz},
                        {"vp_ratio", l.vp_ratio},
                        {"ratio_drift", fine > 0 ? l.vp_ratio / fine : 0.0}});
    out.push_back({{"refinement", r.refinement},
                   {"truncated", r.truncated},
                   {"levels", levels}});
  }
  return out.dump(2) + "\n";
}

std::string mms_csv(const std::vector<MmsRow>& rows) {
  std::ostringstream os;
  os << "refinement,h,velocity_error,velocity_order,pressure_error,pressure_order,"
        "sv_divergence_rel,iterations\n";
  for (const auto& r : rows)
    os << r.refinement << ',' << fmt(r.h) << ',' << fmt(r.velocity_error) << ','
       << fmt(r.velocity_order) << ',' << fmt(r.pressure_error) << ','
       << fmt(r.pressure_order) << ',' << fmt(r.sv_divergence_rel) << ','
       << r.iterations << '\n';
  return os.str();
}

}  // namespace stokesamg
