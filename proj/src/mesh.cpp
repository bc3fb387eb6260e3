#include "stokeslab/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

namespace stokeslab {

namespace {

double signed_area(const std::array<double, 2>& a, const std::array<double, 2>& b,
                   const std::array<double, 2>& c) {
  return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]));
}

}  // namespace

int EdgeTable::find(int a, int b) const {
  if (a > b) std::swap(a, b);
  for (std::size_t e = 0; e < edges.size(); ++e)
    if (edges[e][0] == a && edges[e][1] == b) return static_cast<int>(e);
  return -1;
}

EdgeTable build_edge_table(const Mesh& mesh) {
  EdgeTable table;
  std::map<std::pair<int, int>, int> lookup;
  table.triangle_edges.resize(mesh.triangles.size());
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    for (int e = 0; e < 3; ++e) {
      int a = tri[e], b = tri[(e + 1) % 3];
      if (a > b) std::swap(a, b);
      auto [it, inserted] = lookup.try_emplace({a, b}, static_cast<int>(table.edges.size()));
      if (inserted) table.edges.push_back({a, b});
      table.triangle_edges[t][e] = it->second;
    }
  }
  return table;
}

double triangle_area(const Mesh& mesh, int t) {
  const auto& tri = mesh.triangles[t];
  return signed_area(mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]);
}

double mesh_total_area(const Mesh& mesh) {
  double s = 0.0;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
    s += triangle_area(mesh, static_cast<int>(t));
  return s;
}

void check_mesh(const Mesh& mesh) {
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    for (int v : mesh.triangles[t])
      if (v < 0 || v >= static_cast<int>(mesh.vertices.size()))
        throw std::runtime_error("mesh: vertex index out of range");
    if (triangle_area(mesh, static_cast<int>(t)) <= 0.0)
      throw std::runtime_error("mesh: non-positive triangle area");
  }
  // every edge belongs to one triangle (boundary) or two (interior)
  std::map<std::pair<int, int>, int> count;
  for (const auto& tri : mesh.triangles) {
    for (int e = 0; e < 3; ++e) {
      int a = tri[e], b = tri[(e + 1) % 3];
      if (a > b) std::swap(a, b);
      ++count[{a, b}];
    }
  }
  std::set<std::pair<int, int>> boundary;
  for (const auto& be : mesh.boundary_edges) {
    int a = be.a, b = be.b;
    if (a > b) std::swap(a, b);
    boundary.insert({a, b});
  }
  for (const auto& [edge, c] : count) {
    if (c > 2) throw std::runtime_error("mesh: edge shared by more than two triangles");
    const bool on_boundary = boundary.count(edge) > 0;
    if (c == 1 && !on_boundary) throw std::runtime_error("mesh: untagged boundary edge");
    if (c == 2 && on_boundary) throw std::runtime_error("mesh: interior edge tagged as boundary");
  }
  for (const auto& edge : boundary)
    if (!count.count(edge)) throw std::runtime_error("mesh: boundary edge not in any triangle");
}

Mesh build_unit_square_mesh(int n, double perturbation, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("build_unit_square_mesh: n must be >= 2");
  if (perturbation < 0.0 || perturbation > 0.3)
    throw std::invalid_argument("build_unit_square_mesh: perturbation must lie in [0, 0.3]");

  Mesh mesh;
  const int np = n + 1;
  mesh.vertices.resize(static_cast<std::size_t>(np) * np);
  auto vid = [np](int i, int j) { return j * np + i; };
  for (int j = 0; j < np; ++j)
    for (int i = 0; i < np; ++i)
      mesh.vertices[vid(i, j)] = {static_cast<double>(i) / n, static_cast<double>(j) / n};

  // per-square diagonal direction alternates in a checkerboard pattern
  mesh.triangles.reserve(static_cast<std::size_t>(2) * n * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int v00 = vid(i, j), v10 = vid(i + 1, j);
      const int v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
      if ((i + j) % 2 == 0) {
        mesh.triangles.push_back({v00, v10, v11});
        mesh.triangles.push_back({v00, v11, v01});
      } else {
        mesh.triangles.push_back({v00, v10, v01});
        mesh.triangles.push_back({v10, v11, v01});
      }
    }
  }

  for (int i = 0; i < n; ++i) {
    mesh.boundary_edges.push_back({vid(i, 0), vid(i + 1, 0), kDirichletTag});
    mesh.boundary_edges.push_back({vid(i, n), vid(i + 1, n), kDirichletTag});
    mesh.boundary_edges.push_back({vid(0, i), vid(0, i + 1), kDirichletTag});
    mesh.boundary_edges.push_back({vid(n, i), vid(n, i + 1), kDirichletTag});
  }

  if (perturbation > 0.0) {
    // draw unit offsets once so retries with a reduced amplitude stay
    // deterministic
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::vector<std::array<double, 2>> offsets(mesh.vertices.size(), {0.0, 0.0});
    for (int j = 1; j < n; ++j)
      for (int i = 1; i < n; ++i) {
        offsets[vid(i, j)][0] = unit(rng);
        offsets[vid(i, j)][1] = unit(rng);
      }
    const auto base = mesh.vertices;
    const double h = 1.0 / n;
    double amp = 0.5 * perturbation * h;
    bool ok = false;
    for (int attempt = 0; attempt < 4 && !ok; ++attempt) {
      for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
        mesh.vertices[v][0] = base[v][0] + amp * offsets[v][0];
        mesh.vertices[v][1] = base[v][1] + amp * offsets[v][1];
      }
      ok = true;
      for (std::size_t t = 0; t < mesh.triangles.size() && ok; ++t)
        if (triangle_area(mesh, static_cast<int>(t)) <= 1e-12) ok = false;
      if (!ok) amp *= 0.5;
    }
    if (!ok) throw std::runtime_error("build_unit_square_mesh: perturbation inverts a triangle");
  }
  return mesh;
}

Mesh refine(const Mesh& mesh) {
  check_mesh(mesh);
  const EdgeTable table = build_edge_table(mesh);
  Mesh fine;
  fine.level = mesh.level + 1;
  fine.vertices = mesh.vertices;
  const int nv = static_cast<int>(mesh.vertices.size());
  fine.vertices.resize(mesh.vertices.size() + table.edges.size());
  for (std::size_t e = 0; e < table.edges.size(); ++e) {
    const auto& a = mesh.vertices[table.edges[e][0]];
    const auto& b = mesh.vertices[table.edges[e][1]];
    fine.vertices[nv + e] = {0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])};
  }
  fine.triangles.reserve(4 * mesh.triangles.size());
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const int m01 = nv + table.triangle_edges[t][0];
    const int m12 = nv + table.triangle_edges[t][1];
    const int m20 = nv + table.triangle_edges[t][2];
    fine.triangles.push_back({tri[0], m01, m20});
    fine.triangles.push_back({m01, tri[1], m12});
    fine.triangles.push_back({m20, m12, tri[2]});
    fine.triangles.push_back({m01, m12, m20});
  }
  for (const auto& be : mesh.boundary_edges) {
    const int e = table.find(be.a, be.b);
    if (e < 0) throw std::runtime_error("refine: boundary edge not found");
    fine.boundary_edges.push_back({be.a, nv + e, be.tag});
    fine.boundary_edges.push_back({nv + e, be.b, be.tag});
  }
  return fine;
}

void tag_boundary_side(Mesh& mesh, int side, int tag) {
  if (side < 0 || side > 3) throw std::invalid_argument("tag_boundary_side: side must be 0..3");
  const int axis = side < 2 ? 0 : 1;
  const double value = (side == 1 || side == 3) ? 1.0 : 0.0;
  for (auto& be : mesh.boundary_edges) {
    const auto& a = mesh.vertices[be.a];
    const auto& b = mesh.vertices[be.b];
    if (std::abs(a[axis] - value) < 1e-12 && std::abs(b[axis] - value) < 1e-12) be.tag = tag;
  }
}

void save_mesh(const Mesh& mesh, std::ostream& out) {
  out.precision(17);
  out << mesh.vertices.size() << ' ' << mesh.triangles.size() << ' '
      << mesh.boundary_edges.size() << '\n';
  for (const auto& v : mesh.vertices) out << v[0] << ' ' << v[1] << '\n';
  for (const auto& t : mesh.triangles) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  for (const auto& e : mesh.boundary_edges) out << e.a << ' ' << e.b << ' ' << e.tag << '\n';
}

void save_mesh(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_mesh: cannot open " + path);
  save_mesh(mesh, out);
}

Mesh load_mesh(std::istream& in) {
  Mesh mesh;
  std::size_t nv = 0, nt = 0, ne = 0;
  if (!(in >> nv >> nt >> ne)) throw std::runtime_error("load_mesh: bad header");
  mesh.vertices.resize(nv);
  for (auto& v : mesh.vertices)
    if (!(in >> v[0] >> v[1])) throw std::runtime_error("load_mesh: bad vertex line");
  mesh.triangles.resize(nt);
  for (auto& t : mesh.triangles)
    if (!(in >> t[0] >> t[1] >> t[2])) throw std::runtime_error("load_mesh: bad triangle line");
  mesh.boundary_edges.resize(ne);
  for (auto& e : mesh.boundary_edges)
    if (!(in >> e.a >> e.b >> e.tag)) throw std::runtime_error("load_mesh: bad edge line");
  return mesh;
}

Mesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_mesh: cannot open " + path);
  return load_mesh(in);
}

std::vector<std::array<double, 2>> reference_nodes(int degree) {
  switch (degree) {
    case 1:
      return {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};
    case 2:
      return {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0},
              {0.5, 0.0}, {0.5, 0.5}, {0.0, 0.5}};
    case 3:
      return {{0.0, 0.0},       {1.0, 0.0},       {0.0, 1.0},
              {1.0 / 3, 0.0},   {2.0 / 3, 0.0},             // edge (v0,v1)
              {2.0 / 3, 1.0 / 3}, {1.0 / 3, 2.0 / 3},       // edge (v1,v2)
              {0.0, 2.0 / 3},   {0.0, 1.0 / 3},             // edge (v2,v0)
              {1.0 / 3, 1.0 / 3}};
    default:
      throw std::invalid_argument("reference_nodes: unsupported degree");
  }
}

DofMap lagrange_dof_layout(const Mesh& mesh, int degree) {
  if (degree < 1 || degree > 3)
    throw std::invalid_argument("lagrange_dof_layout: degree must be 1, 2 or 3");

  const EdgeTable table = build_edge_table(mesh);
  const int nv = static_cast<int>(mesh.vertices.size());
  const int ne = static_cast<int>(table.edges.size());
  const int nt = static_cast<int>(mesh.triangles.size());
  const int per_edge = degree - 1;

  DofMap dofs;
  dofs.degree = degree;
  dofs.nodes_per_cell = (degree + 1) * (degree + 2) / 2;
  dofs.n_nodes = nv + per_edge * ne + (degree == 3 ? nt : 0);
  dofs.node_coords.resize(dofs.n_nodes);
  for (int v = 0; v < nv; ++v) dofs.node_coords[v] = mesh.vertices[v];
  // edge nodes stored from the lower vertex index toward the higher one
  for (int e = 0; e < ne; ++e) {
    const auto& a = mesh.vertices[table.edges[e][0]];
    const auto& b = mesh.vertices[table.edges[e][1]];
    for (int t = 0; t < per_edge; ++t) {
      const double s = static_cast<double>(t + 1) / degree;
      dofs.node_coords[nv + per_edge * e + t] = {a[0] + s * (b[0] - a[0]),
                                                 a[1] + s * (b[1] - a[1])};
    }
  }
  if (degree == 3) {
    for (int t = 0; t < nt; ++t) {
      const auto& tri = mesh.triangles[t];
      const auto& a = mesh.vertices[tri[0]];
      const auto& b = mesh.vertices[tri[1]];
      const auto& c = mesh.vertices[tri[2]];
      dofs.node_coords[nv + per_edge * ne + t] = {(a[0] + b[0] + c[0]) / 3.0,
                                                  (a[1] + b[1] + c[1]) / 3.0};
    }
  }

  dofs.cell_to_nodes.resize(static_cast<std::size_t>(nt) * dofs.nodes_per_cell);
  for (int t = 0; t < nt; ++t) {
    int* cell = dofs.cell_to_nodes.data() + static_cast<std::size_t>(t) * dofs.nodes_per_cell;
    const auto& tri = mesh.triangles[t];
    cell[0] = tri[0];
    cell[1] = tri[1];
    cell[2] = tri[2];
    int slot = 3;
    for (int le = 0; le < 3 && degree >= 2; ++le) {
      const int p = tri[le], q = tri[(le + 1) % 3];
      const int e = table.triangle_edges[t][le];
      for (int s = 0; s < per_edge; ++s) {
        // local node s sits at (s+1)/k from p; stored nodes run from min(p,q)
        const int stored = (p < q) ? s : (per_edge - 1 - s);
        cell[slot++] = nv + per_edge * e + stored;
      }
    }
    if (degree == 3) cell[slot++] = nv + per_edge * ne + t;
  }

  std::set<int> boundary;
  for (const auto& be : mesh.boundary_edges) {
    boundary.insert(be.a);
    boundary.insert(be.b);
    const int e = table.find(be.a, be.b);
    if (e < 0) throw std::runtime_error("lagrange_dof_layout: boundary edge not in mesh");
    for (int s = 0; s < per_edge; ++s) boundary.insert(nv + per_edge * e + s);
  }
  dofs.boundary_nodes.assign(boundary.begin(), boundary.end());
  return dofs;
}

std::vector<int> boundary_nodes_with_tag(const Mesh& mesh, const DofMap& dofs, int tag) {
  const EdgeTable table = build_edge_table(mesh);
  const int nv = static_cast<int>(mesh.vertices.size());
  const int per_edge = dofs.degree - 1;
  std::set<int> nodes;
  for (const auto& be : mesh.boundary_edges) {
    if (be.tag != tag) continue;
    nodes.insert(be.a);
    nodes.insert(be.b);
    const int e = table.find(be.a, be.b);
    for (int s = 0; s < per_edge; ++s) nodes.insert(nv + per_edge * e + s);
  }
  return {nodes.begin(), nodes.end()};
}

}  // namespace stokeslab
