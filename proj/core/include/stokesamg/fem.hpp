#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "stokesamg/mesh.hpp"
#include "stokesamg/sparse.hpp"

namespace stokesamg {

enum class Discretization { TH, SV, ISO };

/// Velocity boundary data and volume forcing for one problem. Dirichlet values
/// are interpolated nodally on every Dirichlet-tagged edge; Neumann data enters
/// the load vector through edge quadrature.
struct ProblemData {
  // (tag, x, y) -> velocity value on Dirichlet boundaries
  std::function<std::array<double, 2>(BoundaryTag, double, double)> dirichlet =
      [](BoundaryTag, double, double) { return std::array<double, 2>{0.0, 0.0}; };
  // body force
  std::function<std::array<double, 2>(double, double)> force = [](double, double) {
    return std::array<double, 2>{0.0, 0.0};
  };
  // Neumann data g_N on Neumann-tagged edges; nullopt means homogeneous
  std::optional<std::function<std::array<double, 2>(double, double)>> neumann;
  // skip the compatibility check for enclosed flows (used by tests)
  bool check_compatibility = true;
};

/// Standard test problems.
ProblemData bfs_problem();          // parabolic inflow 4y(1-y) at x=-1
ProblemData channel_problem();      // parabolic inflow at x=x0 of a unit-height channel
ProblemData zero_problem();         // homogeneous everywhere

struct DirichletData {
  std::vector<int> constrained;       // scalar velocity DoF indices, sorted
  std::vector<double> values_x;       // per constrained DoF
  std::vector<double> values_y;
};

struct SaddleSystem {
  Discretization disc = Discretization::TH;
  SparseMatrix A;    // (n_x+n_y) x (n_x+n_y), block-diagonal per component
  SparseMatrix B;    // n_p x (n_x+n_y)
  SparseMatrix Ap;   // pressure Laplacian on the continuous P1 space
  SparseMatrix Mp;   // pressure mass matrix (on the native pressure space)
  std::vector<double> rhs;  // length n_x+n_y+n_p
  int n_x = 0, n_y = 0, n_p = 0;

  // coordinates of retained scalar velocity DoFs (shared by both components)
  std::vector<std::array<double, 2>> velocity_coords;
  std::vector<std::array<double, 2>> pressure_coords;
  DirichletData bc;

  // SV extras: element e owns pressure DoFs 3e..3e+2; pressure DoF 3e+k sits at
  // vertex triangles[e][k]. Empty for TH/ISO.
  std::vector<std::array<int, 3>> sv_pressure_vertices;
  SparseMatrix Mp_cg;   // continuous P1 mass on the SV mesh
  SparseMatrix M_mix;   // <dg_j, cg_i> mixed mass, cg rows x dg cols
  std::vector<double> sv_element_areas;

  int total_dofs() const { return n_x + n_y + n_p; }
  int n_u() const { return n_x + n_y; }
};

/// Assembles K = [[A, B^T],[B, 0]] as one CSR matrix.
SparseMatrix assemble_saddle_matrix(const SaddleSystem& sys);

SaddleSystem assemble_taylor_hood(const SimplicialMesh2D& m, const ProblemData& prob);

SaddleSystem assemble_scott_vogelius(const SimplicialMesh2D& m_bary, const ProblemData& prob,
                                     bool force_unrefined = false);

SaddleSystem assemble_iso(const SimplicialMesh2D& m, const SimplicialMesh2D& m_fine,
                          const RefinementMap& map, const ProblemData& prob);

/// Scalar P1 operators used by auxiliary solves and tests.
SparseMatrix assemble_p1_stiffness(const SimplicialMesh2D& m);
SparseMatrix assemble_p1_mass(const SimplicialMesh2D& m);

/// Geometric P1(coarse)->P1(fine) interpolation for a quadrisected mesh pair.
SparseMatrix p1_interpolation(const SimplicialMesh2D& m, const SimplicialMesh2D& m_fine,
                              const RefinementMap& map);

/// L2 errors against an exact solution, measured with a degree-4 rule.
struct MMSErrors {
  double velocity_l2 = 0.0;
  double pressure_l2 = 0.0;
  double velocity_norm = 0.0;
  double pressure_norm = 0.0;
};

using ExactVelocity = std::function<std::array<double, 2>(double, double)>;
using ExactPressure = std::function<double(double, double)>;

MMSErrors mms_errors(const SaddleSystem& sys, const SimplicialMesh2D& m,
                     const std::vector<double>& solution, const ExactVelocity& u_exact,
                     const ExactPressure& p_exact);

/// Per-element integral of |div u_h|^2 for an SV solution, plus ||grad u_h||^2.
struct DivergenceReport {
  std::vector<double> element_div2;  // one per element
  double grad_norm2 = 0.0;
};
DivergenceReport sv_divergence(const SaddleSystem& sys, const SimplicialMesh2D& m_bary,
                               const std::vector<double>& solution);

/// Manufactured solution on the unit square: divergence-free velocity pair with
/// p = sin(pi x), Dirichlet on three sides and Neumann data on x=1.
struct ManufacturedCase {
  ProblemData problem;
  ExactVelocity u_exact;
  ExactPressure p_exact;
};
ManufacturedCase manufactured_unit_square();

}  // namespace stokesamg
