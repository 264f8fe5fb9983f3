#include "stokesamg/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <json.hpp>

#include "stokesamg/errors.hpp"

namespace stokesamg {

std::string to_string(BoundaryTag t) {
  switch (t) {
    case BoundaryTag::DirichletInflow:
      return "DirichletInflow";
    case BoundaryTag::DirichletZero:
      return "DirichletZero";
    case BoundaryTag::Neumann:
      return "Neumann";
  }
  return "?";
}

BoundaryTag boundary_tag_from_string(const std::string& s) {
  if (s == "DirichletInflow") return BoundaryTag::DirichletInflow;
  if (s == "DirichletZero") return BoundaryTag::DirichletZero;
  if (s == "Neumann") return BoundaryTag::Neumann;
  throw MalformedFile("unknown boundary tag: " + s);
}

double SimplicialMesh2D::signed_area(int t) const {
  const auto& tri = triangles[t];
  const auto& a = vertices[tri[0]];
  const auto& b = vertices[tri[1]];
  const auto& c = vertices[tri[2]];
  return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]));
}

double SimplicialMesh2D::total_area() const {
  double s = 0.0;
  for (int t = 0; t < num_triangles(); ++t) s += signed_area(t);
  return s;
}

int SimplicialMesh2D::edge_index(int a, int b) const {
  if (a > b) std::swap(a, b);
  std::array<int, 2> key{a, b};
  auto it = std::lower_bound(edges.begin(), edges.end(), key);
  if (it != edges.end() && *it == key) return static_cast<int>(it - edges.begin());
  return -1;
}

void build_edge_table(SimplicialMesh2D& m) {
  m.edges.clear();
  m.edges.reserve(m.triangles.size() * 3);
  for (const auto& t : m.triangles) {
    for (int k = 0; k < 3; ++k) {
      int a = t[(k + 1) % 3], b = t[(k + 2) % 3];
      if (a > b) std::swap(a, b);
      m.edges.push_back({a, b});
    }
  }
  std::sort(m.edges.begin(), m.edges.end());
  m.edges.erase(std::unique(m.edges.begin(), m.edges.end()), m.edges.end());
  m.tri_edges.resize(m.triangles.size());
  for (size_t t = 0; t < m.triangles.size(); ++t) {
    for (int k = 0; k < 3; ++k) {
      m.tri_edges[t][k] = m.edge_index(m.triangles[t][(k + 1) % 3], m.triangles[t][(k + 2) % 3]);
    }
  }
}

SimplicialMesh2D structured_tri_mesh(int nx, int ny, const RectDomain& dom,
                                     const EdgeTagger& tagger) {
  if (nx < 1 || ny < 1) throw ConfigError("structured_tri_mesh: nx, ny must be >= 1");
  SimplicialMesh2D m;
  const double hx = (dom.x1 - dom.x0) / nx;
  const double hy = (dom.y1 - dom.y0) / ny;
  auto vid = [&](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      m.vertices.push_back({dom.x0 + i * hx, dom.y0 + j * hy});
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int p00 = vid(i, j), p10 = vid(i + 1, j), p01 = vid(i, j + 1), p11 = vid(i + 1, j + 1);
      m.triangles.push_back({p00, p10, p11});
      m.triangles.push_back({p00, p11, p01});
    }
  }
  build_edge_table(m);
  // boundary = edges with one incident triangle
  std::map<std::array<int, 2>, int> edge_count;
  for (const auto& t : m.triangles) {
    for (int k = 0; k < 3; ++k) {
      int a = t[(k + 1) % 3], b = t[(k + 2) % 3];
      if (a > b) std::swap(a, b);
      edge_count[{a, b}]++;
    }
  }
  for (const auto& [e, cnt] : edge_count) {
    if (cnt == 1) {
      const double mx = 0.5 * (m.vertices[e[0]][0] + m.vertices[e[1]][0]);
      const double my = 0.5 * (m.vertices[e[0]][1] + m.vertices[e[1]][1]);
      BoundaryTag tag = tagger ? tagger(mx, my) : BoundaryTag::DirichletZero;
      m.boundary_edges.push_back({e[0], e[1], tag});
    }
  }
  return m;
}

SimplicialMesh2D structured_bfs_mesh(int n) {
  if (n < 1) throw ConfigError("structured_bfs_mesh: n must be >= 1");
  const int nx = 6 * n, ny = 2 * n;
  const double h = 1.0 / n;
  // Keep only cells outside the masked corner [-1,0]x[-1,0].
  std::vector<std::array<double, 2>> grid_pts((nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) grid_pts[j * (nx + 1) + i] = {-1.0 + i * h, -1.0 + j * h};
  std::vector<int> remap((nx + 1) * (ny + 1), -1);
  SimplicialMesh2D m;
  auto cell_kept = [&](int i, int j) {
    const double cx = -1.0 + (i + 0.5) * h;
    const double cy = -1.0 + (j + 0.5) * h;
    return !(cx < 0.0 && cy < 0.0);
  };
  auto use_vertex = [&](int i, int j) {
    const int g = j * (nx + 1) + i;
    if (remap[g] < 0) {
      remap[g] = m.num_vertices();
      m.vertices.push_back(grid_pts[g]);
    }
    return remap[g];
  };
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      if (!cell_kept(i, j)) continue;
      const int p00 = use_vertex(i, j), p10 = use_vertex(i + 1, j);
      const int p01 = use_vertex(i, j + 1), p11 = use_vertex(i + 1, j + 1);
      m.triangles.push_back({p00, p10, p11});
      m.triangles.push_back({p00, p11, p01});
    }
  }
  build_edge_table(m);
  std::map<std::array<int, 2>, int> edge_count;
  for (const auto& t : m.triangles) {
    for (int k = 0; k < 3; ++k) {
      int a = t[(k + 1) % 3], b = t[(k + 2) % 3];
      if (a > b) std::swap(a, b);
      edge_count[{a, b}]++;
    }
  }
  const double eps = 1e-12;
  for (const auto& [e, cnt] : edge_count) {
    if (cnt != 1) continue;
    const double mx = 0.5 * (m.vertices[e[0]][0] + m.vertices[e[1]][0]);
    const double my = 0.5 * (m.vertices[e[0]][1] + m.vertices[e[1]][1]);
    BoundaryTag tag = BoundaryTag::DirichletZero;
    if (std::abs(mx - (-1.0)) < eps && my > 0.0) {
      tag = BoundaryTag::DirichletInflow;
    } else if (std::abs(mx - 5.0) < eps) {
      tag = BoundaryTag::Neumann;
    }
    m.boundary_edges.push_back({e[0], e[1], tag});
  }
  return m;
}

std::pair<SimplicialMesh2D, RefinementMap> quadrisect(const SimplicialMesh2D& m) {
  SimplicialMesh2D out;
  RefinementMap map;
  const int nv = m.num_vertices();
  out.vertices = m.vertices;
  map.vertex_origin.reserve(nv + m.num_edges());
  for (int i = 0; i < nv; ++i) map.vertex_origin.push_back(CoarseVertex{i});
  for (const auto& e : m.edges) {
    out.vertices.push_back({0.5 * (m.vertices[e[0]][0] + m.vertices[e[1]][0]),
                            0.5 * (m.vertices[e[0]][1] + m.vertices[e[1]][1])});
    map.vertex_origin.push_back(EdgeMidpoint{e[0], e[1]});
  }
  out.triangles.reserve(m.num_triangles() * 4);
  for (int t = 0; t < m.num_triangles(); ++t) {
    const auto& tri = m.triangles[t];
    const int a = tri[0], b = tri[1], c = tri[2];
    const int ma = nv + m.tri_edges[t][0];  // mid(b,c)
    const int mb = nv + m.tri_edges[t][1];  // mid(c,a)
    const int mc = nv + m.tri_edges[t][2];  // mid(a,b)
    out.triangles.push_back({a, mc, mb});
    out.triangles.push_back({b, ma, mc});
    out.triangles.push_back({c, mb, ma});
    out.triangles.push_back({ma, mb, mc});
  }
  for (const auto& be : m.boundary_edges) {
    const int mid = nv + m.edge_index(be.a, be.b);
    out.boundary_edges.push_back({be.a, mid, be.tag});
    out.boundary_edges.push_back({mid, be.b, be.tag});
  }
  build_edge_table(out);
  return {std::move(out), std::move(map)};
}

std::pair<SimplicialMesh2D, RefinementMap> barycentric_refine(const SimplicialMesh2D& m) {
  SimplicialMesh2D out;
  RefinementMap map;
  const int nv = m.num_vertices();
  out.vertices = m.vertices;
  for (int i = 0; i < nv; ++i) map.vertex_origin.push_back(CoarseVertex{i});
  for (int t = 0; t < m.num_triangles(); ++t) {
    const auto& tri = m.triangles[t];
    out.vertices.push_back(
        {(m.vertices[tri[0]][0] + m.vertices[tri[1]][0] + m.vertices[tri[2]][0]) / 3.0,
         (m.vertices[tri[0]][1] + m.vertices[tri[1]][1] + m.vertices[tri[2]][1]) / 3.0});
    map.vertex_origin.push_back(BarycenterOf{t});
  }
  out.triangles.reserve(m.num_triangles() * 3);
  for (int t = 0; t < m.num_triangles(); ++t) {
    const auto& tri = m.triangles[t];
    const int z = nv + t;
    out.triangles.push_back({tri[0], tri[1], z});
    out.triangles.push_back({tri[1], tri[2], z});
    out.triangles.push_back({tri[2], tri[0], z});
  }
  out.boundary_edges = m.boundary_edges;
  out.barycentric = true;
  build_edge_table(out);
  return {std::move(out), std::move(map)};
}

SimplicialMesh2D read_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MalformedFile("read_mesh: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw MalformedFile(std::string("read_mesh: invalid JSON: ") + e.what());
  }
  if (!j.contains("vertices") || !j.contains("triangles") || !j.contains("boundary"))
    throw MalformedFile("read_mesh: missing vertices/triangles/boundary");
  SimplicialMesh2D m;
  for (const auto& v : j["vertices"]) {
    if (!v.is_array() || v.size() != 2) throw MalformedFile("read_mesh: bad vertex entry");
    m.vertices.push_back({v[0].get<double>(), v[1].get<double>()});
  }
  const int nv = m.num_vertices();
  for (const auto& t : j["triangles"]) {
    if (!t.is_array() || t.size() != 3) throw MalformedFile("read_mesh: bad triangle entry");
    std::array<int, 3> tri{t[0].get<int>(), t[1].get<int>(), t[2].get<int>()};
    for (int v : tri)
      if (v < 0 || v >= nv) throw MalformedFile("read_mesh: triangle vertex out of range");
    m.triangles.push_back(tri);
  }
  // fix orientation
  for (int t = 0; t < m.num_triangles(); ++t) {
    const double a = m.signed_area(t);
    if (a == 0.0) throw MalformedFile("read_mesh: degenerate triangle " + std::to_string(t));
    if (a < 0.0) std::swap(m.triangles[t][1], m.triangles[t][2]);
  }
  // manifold check and boundary detection
  std::map<std::array<int, 2>, int> edge_count;
  for (const auto& t : m.triangles) {
    for (int k = 0; k < 3; ++k) {
      int a = t[(k + 1) % 3], b = t[(k + 2) % 3];
      if (a > b) std::swap(a, b);
      if (++edge_count[{a, b}] > 2)
        throw NonManifold("read_mesh: edge shared by more than two triangles");
    }
  }
  std::map<std::array<int, 2>, BoundaryTag> tags;
  for (const auto& b : j["boundary"]) {
    if (!b.is_array() || b.size() != 3) throw MalformedFile("read_mesh: bad boundary entry");
    int p = b[0].get<int>(), q = b[1].get<int>();
    if (p > q) std::swap(p, q);
    tags[{p, q}] = boundary_tag_from_string(b[2].get<std::string>());
  }
  for (const auto& [e, cnt] : edge_count) {
    if (cnt == 1) {
      auto it = tags.find(e);
      if (it == tags.end())
        throw UntaggedBoundary("read_mesh: untagged boundary edge (" + std::to_string(e[0]) + "," +
                               std::to_string(e[1]) + ")");
      m.boundary_edges.push_back({e[0], e[1], it->second});
    }
  }
  if (j.contains("barycentric")) m.barycentric = j["barycentric"].get<bool>();
  build_edge_table(m);
  return m;
}

void write_mesh(const SimplicialMesh2D& m, const std::string& path) {
  nlohmann::json j;
  j["vertices"] = nlohmann::json::array();
  for (const auto& v : m.vertices) j["vertices"].push_back({v[0], v[1]});
  j["triangles"] = nlohmann::json::array();
  for (const auto& t : m.triangles) j["triangles"].push_back({t[0], t[1], t[2]});
  j["boundary"] = nlohmann::json::array();
  for (const auto& b : m.boundary_edges) j["boundary"].push_back({b.a, b.b, to_string(b.tag)});
  if (m.barycentric) j["barycentric"] = true;
  std::ofstream out(path);
  if (!out) throw MalformedFile("write_mesh: cannot open " + path);
  out << j.dump(1) << "\n";
}

}  // namespace stokesamg
