#pragma once

#include <vector>

#include "stokesamg/fem.hpp"
#include "stokesamg/sparse.hpp"

namespace stokesamg {

/// Strong off-diagonal connections per node, with the strength value that
/// selected each edge (used for tie-breaking during aggregation).
struct StrengthGraph {
  int n = 0;
  std::vector<int> offsets;    // length n+1
  std::vector<int> neighbors;  // sorted within each node
  std::vector<double> weights;

  int degree(int i) const { return offsets[i + 1] - offsets[i]; }
};

/// Smoothed-delta approximation of the evolution measure: column j keeps edge
/// (i,j) iff |z_i|/|z_j| >= theta * max_m |z_m|/|z_j| with
/// z = (I - omega D^-1 A)^k delta_j. Symmetrized by union.
StrengthGraph evolution_soc(const SparseMatrix& a, double theta = 0.5, int k = 2);

/// Classical symmetric measure: keep iff |a_ij| >= theta*sqrt(|a_ii a_jj|).
StrengthGraph symmetric_soc(const SparseMatrix& a, double theta = 0.25);

struct Aggregation {
  std::vector<int> node_to_agg;  // one entry per node
  int num_aggregates = 0;
};

/// Greedy three-pass aggregation: seed where the strong neighborhood is fully
/// unaggregated, attach stragglers to the strongest neighboring aggregate
/// (lowest index on ties), sweep leftovers into new aggregates.
Aggregation aggregate(const StrengthGraph& g);

SparseMatrix tentative_prolongator(const Aggregation& agg, const std::vector<double>& nullvec);

/// Returns the coarse-level near-kernel vector alongside the prolongator.
struct TentativeResult {
  SparseMatrix t;
  std::vector<double> coarse_nullvec;
};
TentativeResult tentative_prolongator_with_nullvec(const Aggregation& agg,
                                                   const std::vector<double>& nullvec);

/// P = (I - omega D^-1 A) T with omega = omega_frac / rho(D^-1 A), the spectral
/// radius estimated by 10 power iterations.
SparseMatrix smooth_prolongator(const SparseMatrix& a, const SparseMatrix& t,
                                double omega_frac = 4.0 / 3.0);

struct AmgConfig {
  bool use_evolution_soc = true;
  double theta = 0.5;       // smoothed-delta threshold
  double sym_theta = 0.25;  // symmetric-measure threshold
  int soc_k = 2;
  int coarse_size = 600;  // monolithic (or scalar) DoF stop
  int max_levels = 25;
  double omega_frac = 4.0 / 3.0;
};

struct ScalarHierarchy {
  std::vector<SparseMatrix> matrices;             // one per level
  std::vector<SparseMatrix> prolongators;         // levels-1 entries
  std::vector<std::vector<double>> d_inv;         // Jacobi diagonals per level
  LUFactors coarse_lu;
  bool truncated = false;  // coarsening stagnated before reaching coarse_size

  int levels() const { return static_cast<int>(matrices.size()); }
};

ScalarHierarchy build_scalar_hierarchy(const SparseMatrix& a, const AmgConfig& cfg);

/// One V(2,2) cycle; relaxation is two FGMRES iterations preconditioned by a
/// single Jacobi sweep; coarsest level solved by dense LU.
void scalar_vcycle(const ScalarHierarchy& h, const std::vector<double>& b,
                   std::vector<double>& x);

struct MonolithicLevel {
  SparseMatrix k;
  int n_x = 0, n_y = 0, n_p = 0;
  SparseMatrix p;  // to the next (coarser) level; absent on the coarsest
  int total() const { return n_x + n_y + n_p; }
};

struct MonolithicHierarchy {
  std::vector<MonolithicLevel> levels;
  bool truncated = false;

  int num_levels() const { return static_cast<int>(levels.size()); }
};

/// Algorithm: independent scalar SA hierarchies on A_x, A_y, and Ap (constant
/// near-kernel per field), combined into block-diagonal monolithic
/// prolongators with Galerkin coarse operators. Stops once the monolithic
/// system is at or below cfg.coarse_size DoFs, or on stagnation.
MonolithicHierarchy build_monolithic_hierarchy(const SaddleSystem& sys, const AmgConfig& cfg);

}  // namespace stokesamg
