#pragma once

#include <string>
#include <vector>

#include "stokesamg/preconditioner.hpp"

namespace stokesamg {

/// Base mesh selection: generated structured meshes or a JSON mesh file.
struct MeshSpec {
  std::string kind = "structured";  // structured | bfs | file
  int n = 4;                        // base resolution of generated meshes
  std::string path;                 // kind == file
};

struct SolverSpec {
  std::string name;  // defaults to the variant string
  SolverConfig config;
};

/// One experiment batch: a problem, a discretization, a refinement ladder,
/// and the solvers to compare on it.
struct ExperimentSpec {
  std::string problem = "forced";  // forced | bfs | channel | cavity | manufactured
  Discretization disc = Discretization::TH;
  MeshSpec mesh;
  std::vector<int> refinements = {0};
  std::vector<SolverSpec> solvers;
  // parameter-scan grid
  std::vector<double> scan_omega0 = {1.0};
  std::vector<double> scan_eta = {1.0};
  bool couple_eta = true;
  double fixed_eta_u = 1.0;
  unsigned seed = 0;

  void check() const;  // throws ConfigError
};

ExperimentSpec parse_experiment_spec(const std::string& path);
ExperimentSpec parse_experiment_spec_text(const std::string& text);

struct LevelStat {
  int level = 0;
  int n_x = 0, n_y = 0, n_p = 0;
  long long nnz = 0;
  double vp_ratio = 0.0;  // (n_x + n_y) / n_p
};

struct RunRecord {
  std::string problem, solver;
  int refinement = 0;
  int n_x = 0, n_y = 0, n_p = 0;
  int iterations = 0;
  bool converged = false;
  std::string error;  // non-empty when the run was refused or failed
  double setup_seconds = 0.0, solve_seconds = 0.0;  // minimum over repeats
  std::vector<LevelStat> levels;
  std::vector<double> residual_history;
  double true_final_relative_residual = 0.0;

  int dofs() const { return n_x + n_y + n_p; }
};

/// A fully assembled problem instance at one refinement: the high-order
/// system, its low-order surrogate, and the transfer between them.
struct AssembledCase {
  SimplicialMesh2D mesh;  // the high-order mesh (barycentric for SV)
  SaddleSystem sys0, sys1;
  TransferPair transfer;
  bool enclosed = false;
};

AssembledCase build_case(const ExperimentSpec& spec, int refinement);

/// Assemble + solve every refinement x solver combination. Assembly or solver
/// errors are recorded on the RunRecord, not thrown. Solve timing takes the
/// minimum over `repeats` identical solves.
std::vector<RunRecord> cmd_solve(const ExperimentSpec& spec, int repeats = 5);

struct ScanTable {
  int refinement = 0;
  ScanResult result;
};
std::vector<ScanTable> cmd_scan(const ExperimentSpec& spec);

struct StatsRecord {
  int refinement = 0;
  bool truncated = false;
  std::vector<LevelStat> levels;
};
std::vector<StatsRecord> cmd_stats(const ExperimentSpec& spec);

struct MmsRow {
  int refinement = 0;
  double h = 0.0;
  double velocity_error = 0.0, pressure_error = 0.0;
  double velocity_order = 0.0, pressure_order = 0.0;  // 0 on the first row
  double sv_divergence_rel = 0.0;                     // SV only
  int iterations = 0;
};
std::vector<MmsRow> cmd_mms(const ExperimentSpec& spec);

/// Report serialization. Relative time normalizes each run against the Uzawa
/// run at the same refinement when one converged; the column is empty
/// otherwise. Absolute times are always retained.
std::string solve_csv(const std::vector<RunRecord>& records);
std::string solve_json(const std::vector<RunRecord>& records);
std::string scan_csv(const std::vector<ScanTable>& tables);
std::string stats_csv(const std::vector<StatsRecord>& records);
std::string stats_json(const std::vector<StatsRecord>& records);
std::string mms_csv(const std::vector<MmsRow>& rows);

}  // namespace stokesamg
