#pragma once

#include <array>
#include <functional>
#include <string>
#include <variant>
#include <vector>

namespace stokesamg {

enum class BoundaryTag { DirichletInflow, DirichletZero, Neumann };

std::string to_string(BoundaryTag t);
BoundaryTag boundary_tag_from_string(const std::string& s);

struct BoundaryEdge {
  int a = 0;
  int b = 0;
  BoundaryTag tag = BoundaryTag::DirichletZero;
};

/// 2D triangle mesh with a deterministic edge table (edges sorted as
/// lexicographic vertex pairs). All triangles positively oriented.
struct SimplicialMesh2D {
  std::vector<std::array<double, 2>> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<BoundaryEdge> boundary_edges;

  // Unique undirected edges (a < b), lexicographic order.
  std::vector<std::array<int, 2>> edges;
  // tri_edges[t][k] = edge opposite local vertex k, i.e. edge (t[k+1], t[k+2]).
  std::vector<std::array<int, 3>> tri_edges;

  bool barycentric = false;  // produced by barycentric_refine

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_triangles() const { return static_cast<int>(triangles.size()); }
  int num_edges() const { return static_cast<int>(edges.size()); }

  double signed_area(int t) const;
  double total_area() const;
  int edge_index(int a, int b) const;  // -1 if absent
};

/// Rebuilds the edge table from the triangle list.
void build_edge_table(SimplicialMesh2D& m);

struct CoarseVertex {
  int index;
};
struct EdgeMidpoint {
  int a, b;
};
struct BarycenterOf {
  int tri;
};
using VertexOrigin = std::variant<CoarseVertex, EdgeMidpoint, BarycenterOf>;

struct RefinementMap {
  std::vector<VertexOrigin> vertex_origin;  // one per child vertex
};

struct RectDomain {
  double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;
};

using EdgeTagger = std::function<BoundaryTag(double x, double y)>;  // edge midpoint

/// nx-by-ny cells, each split into two triangles along the lower-left to
/// upper-right diagonal. Default tag: DirichletZero everywhere.
SimplicialMesh2D structured_tri_mesh(int nx, int ny, const RectDomain& dom,
                                     const EdgeTagger& tagger = nullptr);

/// Backward-facing step on [-1,5]x[-1,1] minus [-1,0]x[-1,0]; n cells per unit
/// length. Inflow at x=-1, Neumann outflow at x=5, zero Dirichlet walls.
SimplicialMesh2D structured_bfs_mesh(int n);

std::pair<SimplicialMesh2D, RefinementMap> quadrisect(const SimplicialMesh2D& m);
std::pair<SimplicialMesh2D, RefinementMap> barycentric_refine(const SimplicialMesh2D& m);

/// JSON schema: {"vertices": [[x,y],...], "triangles": [[i,j,k],...],
/// "boundary": [[i,j,"tag"],...]}, 0-based indices.
SimplicialMesh2D read_mesh(const std::string& path);
void write_mesh(const SimplicialMesh2D& m, const std::string& path);

}  // namespace stokesamg
