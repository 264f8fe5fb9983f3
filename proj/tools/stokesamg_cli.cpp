// Command-line driver for the experiment matrix: refinement studies, solver
// comparisons, parameter scans, hierarchy statistics, and manufactured-solution
// convergence tables. Reports are written as CSV (tables) and JSON (records).
//
// Exit codes: 0 all runs converged, 2 some runs failed or diverged,
// 1 configuration error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "stokesamg/errors.hpp"
#include "stokesamg/experiments.hpp"

namespace {

struct CommonOpts {
  std::string spec_path;
  std::string out_dir = ".";
  int repeats = 5;
  bool deterministic = false;
  int threads = 0;  // 0 = use STOKESAMG_THREADS or 1
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--spec", o.spec_path, "experiment spec JSON file")->required();
  cmd->add_option("--out", o.out_dir, "output directory (created if missing)");
  cmd->add_option("--repeats", o.repeats, "timing repetitions, minimum reported");
  cmd->add_flag("--deterministic", o.deterministic,
                "force sequential batch order for byte-identical reports");
  cmd->add_option("--threads", o.threads, "worker count (default STOKESAMG_THREADS or 1)");
}

int resolve_threads(const CommonOpts& o) {
  if (o.deterministic) return 1;
  if (o.threads > 0) return o.threads;
  if (const char* env = std::getenv("STOKESAMG_THREADS")) return std::max(1, std::atoi(env));
  return 1;
}

void write_file(const std::string& dir, const std::string& name, const std::string& content) {
  std::filesystem::create_directories(dir);
  const std::string path = dir + "/" + name;
  std::ofstream out(path);
  if (!out) throw stokesamg::ConfigError("cannot write " + path);
  out << content;
  std::cout << "wrote " << path << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  using namespace stokesamg;
  CLI::App app{"monolithic AMG Stokes solver experiments"};
  app.require_subcommand(1);

  CommonOpts solve_o, scan_o, stats_o, mms_o;
  auto* cmd_solve_ = app.add_subcommand("solve", "refinement x solver comparison");
  add_common(cmd_solve_, solve_o);
  auto* cmd_scan_ = app.add_subcommand("scan", "brute-force parameter scan");
  add_common(cmd_scan_, scan_o);
  auto* cmd_stats_ = app.add_subcommand("stats", "hierarchy statistics (no solves)");
  add_common(cmd_stats_, stats_o);
  auto* cmd_mms_ = app.add_subcommand("mms", "manufactured-solution convergence orders");
  add_common(cmd_mms_, mms_o);

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_solve_->parsed()) {
      (void)resolve_threads(solve_o);  // batches currently run sequentially
      auto spec = parse_experiment_spec(solve_o.spec_path);
      auto records = cmd_solve(spec, solve_o.repeats);
      write_file(solve_o.out_dir, "solve.csv", solve_csv(records));
      write_file(solve_o.out_dir, "solve.json", solve_json(records));
      bool any_failed = false;
      for (const auto& r : records)
        if (!r.converged || !r.error.empty()) any_failed = true;
      return any_failed ? 2 : 0;
    }
    if (cmd_scan_->parsed()) {
      auto spec = parse_experiment_spec(scan_o.spec_path);
      auto tables = cmd_scan(spec);
      write_file(scan_o.out_dir, "scan.csv", scan_csv(tables));
      bool any_failed = false;
      for (const auto& t : tables) {
        if (t.result.best < 0) any_failed = true;
        for (const auto& p : t.result.points)
          if (!p.converged) any_failed = true;
      }
      return any_failed ? 2 : 0;
    }
    if (cmd_stats_->parsed()) {
      auto spec = parse_experiment_spec(stats_o.spec_path);
      auto records = cmd_stats(spec);
      write_file(stats_o.out_dir, "stats.csv", stats_csv(records));
      write_file(stats_o.out_dir, "stats.json", stats_json(records));
      bool truncated = false;
      for (const auto& r : records) truncated |= r.truncated;
      if (truncated) std::cerr << "warning: coarsening stagnated on some hierarchies\n";
      return 0;
    }
    if (cmd_mms_->parsed()) {
      auto spec = parse_experiment_spec(mms_o.spec_path);
      auto rows = cmd_mms(spec);
      write_file(mms_o.out_dir, "mms.csv", mms_csv(rows));
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
