#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace stokeslab {

// Boundary tags. Everything is Dirichlet by default; a side can be re-tagged
// open so the divergence operator gets full row rank (needed by the dense
// spectrum checks).
constexpr int kDirichletTag = 0;
constexpr int kOpenTag = 1;

struct BoundaryEdge {
  int a = 0, b = 0;
  int tag = kDirichletTag;
};

struct Mesh {
  std::vector<std::array<double, 2>> vertices;
  std::vector<std::array<int, 3>> triangles;  // positively oriented
  std::vector<BoundaryEdge> boundary_edges;
  int level = 0;  // refinement depth
};

// Unique undirected edges of a mesh plus the per-triangle edge indices.
struct EdgeTable {
  std::vector<std::array<int, 2>> edges;               // (min, max) vertex pairs
  std::vector<std::array<int, 3>> triangle_edges;      // local edges (v0,v1),(v1,v2),(v2,v0)
  int find(int a, int b) const;                        // -1 if absent
};

EdgeTable build_edge_table(const Mesh& mesh);

double triangle_area(const Mesh& mesh, int t);
double mesh_total_area(const Mesh& mesh);
void check_mesh(const Mesh& mesh);  // throws on violated invariants

// Structured triangulation of the unit square with 2*n^2 triangles; interior
// vertices jittered by up to perturbation*h/2 per coordinate. Deterministic
// for a fixed seed. perturbation must lie in [0, 0.3].
Mesh build_unit_square_mesh(int n, double perturbation, std::uint64_t seed);

// Uniform red refinement: each triangle splits into 4 via edge midpoints.
Mesh refine(const Mesh& mesh);

// Re-tags the boundary edges on one side of the unit square.
// side: 0 -> x=0, 1 -> x=1, 2 -> y=0, 3 -> y=1.
void tag_boundary_side(Mesh& mesh, int side, int tag);

void save_mesh(const Mesh& mesh, std::ostream& out);
void save_mesh(const Mesh& mesh, const std::string& path);
Mesh load_mesh(std::istream& in);
Mesh load_mesh(const std::string& path);

// Global Lagrange node numbering for one scalar field of degree k.
struct DofMap {
  int degree = 1;
  int n_nodes = 0;
  int nodes_per_cell = 3;
  std::vector<std::array<double, 2>> node_coords;
  std::vector<int> cell_to_nodes;  // nodes_per_cell entries per triangle
  std::vector<int> boundary_nodes;  // sorted, unique

  const int* cell_nodes(int t) const { return cell_to_nodes.data() + static_cast<std::size_t>(t) * nodes_per_cell; }
};

// Reference coordinates of the local nodes for degree k, matching the
// ordering used in DofMap::cell_to_nodes: vertices, then edge nodes, then
// the interior node (k = 3 only).
std::vector<std::array<double, 2>> reference_nodes(int degree);

DofMap lagrange_dof_layout(const Mesh& mesh, int degree);

// Node indices lying on boundary edges with the given tag.
std::vector<int> boundary_nodes_with_tag(const Mesh& mesh, const DofMap& dofs, int tag);

}  // namespace stokeslab
