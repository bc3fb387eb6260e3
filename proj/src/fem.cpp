#include "stokeslab/fem.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace stokeslab {

namespace {

struct CellGeometry {
  double j[2][2];     // affine map Jacobian, x = v0 + J xi
  double jinv_t[2][2];  // inverse transpose, maps reference gradients
  double det;
  std::array<double, 2> v0;
};

CellGeometry cell_geometry(const Mesh& mesh, int t) {
  const auto& tri = mesh.triangles[t];
  const auto& a = mesh.vertices[tri[0]];
  const auto& b = mesh.vertices[tri[1]];
  const auto& c = mesh.vertices[tri[2]];
  CellGeometry g;
  g.v0 = a;
  g.j[0][0] = b[0] - a[0];
  g.j[0][1] = c[0] - a[0];
  g.j[1][0] = b[1] - a[1];
  g.j[1][1] = c[1] - a[1];
  g.det = g.j[0][0] * g.j[1][1] - g.j[0][1] * g.j[1][0];
  const double inv = 1.0 / g.det;
  // J^{-T} = (1/det) [[ j11, -j10], [-j01, j00]]
  g.jinv_t[0][0] = g.j[1][1] * inv;
  g.jinv_t[0][1] = -g.j[1][0] * inv;
  g.jinv_t[1][0] = -g.j[0][1] * inv;
  g.jinv_t[1][1] = g.j[0][0] * inv;
  return g;
}

std::array<double, 2> map_point(const CellGeometry& g, double x, double y) {
  return {g.v0[0] + g.j[0][0] * x + g.j[0][1] * y, g.v0[1] + g.j[1][0] * x + g.j[1][1] * y};
}

// Physical gradients of all basis functions at one quadrature point.
void physical_gradients(const CellGeometry& g, const TabulatedBasis& tab, int q,
                        std::vector<double>& gx, std::vector<double>& gy) {
  const double* dx = tab.dx.data() + static_cast<std::size_t>(q) * tab.size;
  const double* dy = tab.dy.data() + static_cast<std::size_t>(q) * tab.size;
  for (int j = 0; j < tab.size; ++j) {
    gx[j] = g.jinv_t[0][0] * dx[j] + g.jinv_t[0][1] * dy[j];
    gy[j] = g.jinv_t[1][0] * dx[j] + g.jinv_t[1][1] * dy[j];
  }
}

enum class ScalarForm { Mass, Laplacian };

SparseMatrix assemble_scalar(const MixedSpace& space, const DofMap& dofs, ScalarForm form) {
  const QuadRule& rule = triangle_rule(space.quadrature_degree());
  const TabulatedBasis tab = tabulate(lagrange_reference_basis(dofs.degree), rule);
  CooBuilder builder(dofs.n_nodes, dofs.n_nodes);
  const int nt = static_cast<int>(space.mesh.triangles.size());
  std::vector<double> gx(tab.size), gy(tab.size);
  std::vector<double> local(static_cast<std::size_t>(tab.size) * tab.size);
  for (int t = 0; t < nt; ++t) {
    const CellGeometry g = cell_geometry(space.mesh, t);
    std::fill(local.begin(), local.end(), 0.0);
    for (int q = 0; q < tab.n_points; ++q) {
      const double w = rule.weights[q] * std::abs(g.det);
      if (form == ScalarForm::Mass) {
        const double* val = tab.values.data() + static_cast<std::size_t>(q) * tab.size;
        for (int i = 0; i < tab.size; ++i)
          for (int j = 0; j < tab.size; ++j)
            local[static_cast<std::size_t>(i) * tab.size + j] += w * val[i] * val[j];
      } else {
        physical_gradients(g, tab, q, gx, gy);
        for (int i = 0; i < tab.size; ++i)
          for (int j = 0; j < tab.size; ++j)
            local[static_cast<std::size_t>(i) * tab.size + j] +=
                w * (gx[i] * gx[j] + gy[i] * gy[j]);
      }
    }
    const int* cell = dofs.cell_nodes(t);
    for (int i = 0; i < tab.size; ++i)
      for (int j = 0; j < tab.size; ++j)
        builder.add(cell[i], cell[j], local[static_cast<std::size_t>(i) * tab.size + j]);
  }
  return builder.compress();
}

enum class VectorForm { Mass, Strain, Laplacian, GradDiv };

SparseMatrix assemble_vector(const MixedSpace& space, VectorForm form) {
  const DofMap& dofs = space.velocity_dofs;
  const QuadRule& rule = triangle_rule(space.quadrature_degree());
  const TabulatedBasis tab = tabulate(lagrange_reference_basis(dofs.degree), rule);
  const int ns = tab.size;
  CooBuilder builder(2 * dofs.n_nodes, 2 * dofs.n_nodes);
  std::vector<double> gx(ns), gy(ns);
  // 2x2 component blocks per scalar basis pair
  std::vector<double> local(static_cast<std::size_t>(2 * ns) * 2 * ns);
  const int nt = static_cast<int>(space.mesh.triangles.size());
  auto at = [&](int i, int a, int j, int b) -> double& {
    return local[(static_cast<std::size_t>(2 * i + a)) * (2 * ns) + (2 * j + b)];
  };
  for (int t = 0; t < nt; ++t) {
    const CellGeometry g = cell_geometry(space.mesh, t);
    std::fill(local.begin(), local.end(), 0.0);
    for (int q = 0; q < tab.n_points; ++q) {
      const double w = rule.weights[q] * std::abs(g.det);
      const double* val = tab.values.data() + static_cast<std::size_t>(q) * ns;
      physical_gradients(g, tab, q, gx, gy);
      const double* grad[2] = {gx.data(), gy.data()};
      for (int i = 0; i < ns; ++i) {
        for (int j = 0; j < ns; ++j) {
          switch (form) {
            case VectorForm::Mass: {
              const double m = w * val[i] * val[j];
              at(i, 0, j, 0) += m;
              at(i, 1, j, 1) += m;
              break;
            }
            case VectorForm::Laplacian: {
              const double l = w * (gx[i] * gx[j] + gy[i] * gy[j]);
              at(i, 0, j, 0) += l;
              at(i, 1, j, 1) += l;
              break;
            }
            case VectorForm::GradDiv: {
              // div(e_a N_i) = d_a N_i
              for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) at(i, a, j, b) += w * grad[a][i] * grad[b][j];
              break;
            }
            case VectorForm::Strain: {
              // 2 e(u):e(v) = grad u : grad v + (grad u)^T : grad v
              const double l = w * (gx[i] * gx[j] + gy[i] * gy[j]);
              for (int a = 0; a < 2; ++a) {
                at(i, a, j, a) += l;
                for (int b = 0; b < 2; ++b) at(i, a, j, b) += w * grad[b][i] * grad[a][j];
              }
              break;
            }
          }
        }
      }
    }
    const int* cell = dofs.cell_nodes(t);
    for (int i = 0; i < ns; ++i)
      for (int a = 0; a < 2; ++a)
        for (int j = 0; j < ns; ++j)
          for (int b = 0; b < 2; ++b) {
            const double v = at(i, a, j, b);
            if (v != 0.0) builder.add(2 * cell[i] + a, 2 * cell[j] + b, v);
          }
  }
  return builder.compress();
}

SparseMatrix assemble_divergence(const MixedSpace& space) {
  const DofMap& vdofs = space.velocity_dofs;
  const DofMap& pdofs = space.pressure_dofs;
  const QuadRule& rule = triangle_rule(space.quadrature_degree());
  const TabulatedBasis vtab = tabulate(lagrange_reference_basis(vdofs.degree), rule);
  const TabulatedBasis ptab = tabulate(lagrange_reference_basis(pdofs.degree), rule);
  CooBuilder builder(pdofs.n_nodes, 2 * vdofs.n_nodes);
  std::vector<double> gx(vtab.size), gy(vtab.size);
  std::vector<double> local(static_cast<std::size_t>(ptab.size) * 2 * vtab.size);
  const int nt = static_cast<int>(space.mesh.triangles.size());
  for (int t = 0; t < nt; ++t) {
    const CellGeometry g = cell_geometry(space.mesh, t);
    std::fill(local.begin(), local.end(), 0.0);
    for (int q = 0; q < vtab.n_points; ++q) {
      const double w = rule.weights[q] * std::abs(g.det);
      const double* pval = ptab.values.data() + static_cast<std::size_t>(q) * ptab.size;
      physical_gradients(g, vtab, q, gx, gy);
      for (int k = 0; k < ptab.size; ++k)
        for (int j = 0; j < vtab.size; ++j) {
          local[(static_cast<std::size_t>(k) * 2 + 0) * vtab.size + j] += w * pval[k] * gx[j];
          local[(static_cast<std::size_t>(k) * 2 + 1) * vtab.size + j] += w * pval[k] * gy[j];
        }
    }
    const int* pcell = pdofs.cell_nodes(t);
    const int* vcell = vdofs.cell_nodes(t);
    for (int k = 0; k < ptab.size; ++k)
      for (int j = 0; j < vtab.size; ++j)
        for (int b = 0; b < 2; ++b)
          builder.add(pcell[k], 2 * vcell[j] + b,
                      local[(static_cast<std::size_t>(k) * 2 + b) * vtab.size + j]);
  }
  return builder.compress();
}

}  // namespace

MixedSpace make_mixed_space(const Mesh& mesh, int pressure_degree) {
  if (pressure_degree < 1 || pressure_degree > 2)
    throw std::invalid_argument("make_mixed_space: pressure degree must be 1 or 2");
  MixedSpace space;
  space.mesh = mesh;
  space.pressure_degree = pressure_degree;
  space.velocity_degree = pressure_degree + 1;
  space.velocity_dofs = lagrange_dof_layout(mesh, space.velocity_degree);
  space.pressure_dofs = lagrange_dof_layout(mesh, pressure_degree);
  return space;
}

BoundaryCondition make_velocity_dirichlet(const MixedSpace& space, const VectorField& values,
                                          int dirichlet_tag) {
  const auto nodes = boundary_nodes_with_tag(space.mesh, space.velocity_dofs, dirichlet_tag);
  BoundaryCondition bc;
  bc.constrained_dofs.reserve(2 * nodes.size());
  bc.values.reserve(2 * nodes.size());
  for (int n : nodes) {
    const auto& x = space.velocity_dofs.node_coords[n];
    const std::array<double, 2> v = values ? values(x[0], x[1]) : std::array<double, 2>{0.0, 0.0};
    bc.constrained_dofs.push_back(2 * n);
    bc.values.push_back(v[0]);
    bc.constrained_dofs.push_back(2 * n + 1);
    bc.values.push_back(v[1]);
  }
  return bc;
}

SparseMatrix assemble(MatrixKind kind, const MixedSpace& space) {
  switch (kind) {
    case MatrixKind::MassVelocity:
      return assemble_vector(space, VectorForm::Mass);
    case MatrixKind::MassPressure:
      return assemble_scalar(space, space.pressure_dofs, ScalarForm::Mass);
    case MatrixKind::StrainStiffness:
      return assemble_vector(space, VectorForm::Strain);
    case MatrixKind::VectorLaplacian:
      return assemble_vector(space, VectorForm::Laplacian);
    case MatrixKind::GradDiv:
      return assemble_vector(space, VectorForm::GradDiv);
    case MatrixKind::Divergence:
      return assemble_divergence(space);
    case MatrixKind::PressureLaplacian:
      return assemble_scalar(space, space.pressure_dofs, ScalarForm::Laplacian);
  }
  throw std::invalid_argument("assemble: unknown matrix kind");
}

SparseMatrix assemble_velocity_system(const MixedSpace& space, double tau, double mu) {
  if (tau <= 0.0) throw std::invalid_argument("assemble_velocity_system: tau must be positive");
  if (mu < 0.0) throw std::invalid_argument("assemble_velocity_system: mu must be nonnegative");
  const SparseMatrix mass = assemble(MatrixKind::MassVelocity, space);
  const SparseMatrix strain = assemble(MatrixKind::StrainStiffness, space);
  return add_scaled(1.0 / tau, mass, mu, strain);
}

SparseMatrix lump_velocity_mass(const MixedSpace& space) {
  const DofMap& dofs = space.velocity_dofs;
  const QuadRule& rule = triangle_rule(space.quadrature_degree());
  const TabulatedBasis tab = tabulate(lagrange_reference_basis(dofs.degree), rule);
  Vector diag(2 * dofs.n_nodes, 0.0);
  const int nt = static_cast<int>(space.mesh.triangles.size());
  for (int t = 0; t < nt; ++t) {
    const CellGeometry g = cell_geometry(space.mesh, t);
    const int* cell = dofs.cell_nodes(t);
    for (int q = 0; q < tab.n_points; ++q) {
      const double w = rule.weights[q] * std::abs(g.det);
      const double* val = tab.values.data() + static_cast<std::size_t>(q) * tab.size;
      for (int i = 0; i < tab.size; ++i) {
        const double v = w * std::abs(val[i]);
        diag[2 * cell[i]] += v;
        diag[2 * cell[i] + 1] += v;
      }
    }
  }
  return diagonal_matrix(diag);
}

Vector assemble_load(const MixedSpace& space, const VectorField& f) {
  const DofMap& dofs = space.velocity_dofs;
  const QuadRule& rule = triangle_rule(space.quadrature_degree());
  const TabulatedBasis tab = tabulate(lagrange_reference_basis(dofs.degree), rule);
  Vector load(2 * dofs.n_nodes, 0.0);
  const int nt = static_cast<int>(space.mesh.triangles.size());
  for (int t = 0; t < nt; ++t) {
    const CellGeometry g = cell_geometry(space.mesh, t);
    const int* cell = dofs.cell_nodes(t);
    for (int q = 0; q < tab.n_points; ++q) {
      const double w = rule.weights[q] * std::abs(g.det);
      const auto x = map_point(g, rule.points[q][0], rule.points[q][1]);
      const auto fv = f(x[0], x[1]);
      const double* val = tab.values.data() + static_cast<std::size_t>(q) * tab.size;
      for (int i = 0; i < tab.size; ++i) {
        load[2 * cell[i]] += w * fv[0] * val[i];
        load[2 * cell[i] + 1] += w * fv[1] * val[i];
      }
    }
  }
  return load;
}

Vector dirichlet_vector(int n, const BoundaryCondition& bc) {
  Vector g(n, 0.0);
  for (std::size_t k = 0; k < bc.constrained_dofs.size(); ++k)
    g[bc.constrained_dofs[k]] = bc.values[k];
  return g;
}

SparseMatrix eliminate_dirichlet(const SparseMatrix& K, const BoundaryCondition& bc) {
  std::vector<char> constrained(K.n_rows, 0);
  for (int d : bc.constrained_dofs) constrained[d] = 1;
  SparseMatrix out = K;
  for (int i = 0; i < out.n_rows; ++i) {
    const bool row_con = constrained[i];
    for (int k = out.row_offsets[i]; k < out.row_offsets[i + 1]; ++k) {
      const int j = out.col_indices[k];
      if (row_con || constrained[j]) out.values[k] = (i == j) ? 1.0 : 0.0;
    }
  }
  return out;
}

Vector lift_dirichlet_rhs(const SparseMatrix& K_original, const Vector& rhs,
                          const BoundaryCondition& bc) {
  const Vector ug = dirichlet_vector(K_original.n_cols, bc);
  Vector lifted = rhs;
  const Vector kug = spmv(K_original, ug);
  for (int i = 0; i < K_original.n_rows; ++i) lifted[i] -= kug[i];
  for (std::size_t k = 0; k < bc.constrained_dofs.size(); ++k)
    lifted[bc.constrained_dofs[k]] = bc.values[k];
  return lifted;
}

void apply_dirichlet(SparseMatrix& K, Vector& rhs, const BoundaryCondition& bc) {
  rhs = lift_dirichlet_rhs(K, rhs, bc);
  K = eliminate_dirichlet(K, bc);
}

SparseMatrix zero_columns(const SparseMatrix& B, const std::vector<int>& cols) {
  std::vector<char> zero(B.n_cols, 0);
  for (int c : cols) zero[c] = 1;
  SparseMatrix out = B;
  for (int k = 0; k < out.nnz(); ++k)
    if (zero[out.col_indices[k]]) out.values[k] = 0.0;
  return out;
}

Vector interpolate(const ScalarField& f, const DofMap& dofs) {
  Vector v(dofs.n_nodes);
  for (int n = 0; n < dofs.n_nodes; ++n)
    v[n] = f(dofs.node_coords[n][0], dofs.node_coords[n][1]);
  return v;
}

Vector interpolate(const VectorField& f, const DofMap& dofs) {
  Vector v(static_cast<std::size_t>(2) * dofs.n_nodes);
  for (int n = 0; n < dofs.n_nodes; ++n) {
    const auto val = f(dofs.node_coords[n][0], dofs.node_coords[n][1]);
    v[2 * n] = val[0];
    v[2 * n + 1] = val[1];
  }
  return v;
}

namespace {

struct L2Accumulator {
  double err2 = 0.0;
  double base2 = 0.0;
};

template <typename EvalDiff>
L2Accumulator accumulate_l2(const Mesh& mesh, const DofMap& dofs, int quad_degree,
                            EvalDiff&& eval) {
  const QuadRule& rule = triangle_rule(quad_degree);
  const TabulatedBasis tab = tabulate(lagrange_reference_basis(dofs.degree), rule);
  L2Accumulator acc;
  const int nt = static_cast<int>(mesh.triangles.size());
  for (int t = 0; t < nt; ++t) {
    const CellGeometry g = cell_geometry(mesh, t);
    const int* cell = dofs.cell_nodes(t);
    for (int q = 0; q < tab.n_points; ++q) {
      const double w = rule.weights[q] * std::abs(g.det);
      const auto x = map_point(g, rule.points[q][0], rule.points[q][1]);
      const double* val = tab.values.data() + static_cast<std::size_t>(q) * tab.size;
      eval(cell, val, tab.size, x, w, acc);
    }
  }
  return acc;
}

}  // namespace

double relative_l2_error(const Mesh& mesh, const DofMap& dofs, const Vector& coeffs,
                         const ScalarField& exact, int quad_degree, bool align_means) {
  double shift = 0.0;
  if (align_means) {
    // quadrature means of both fields over the whole domain
    double mesh_area = 0.0, coeff_mean = 0.0, exact_mean = 0.0;
    accumulate_l2(mesh, dofs, quad_degree,
                  [&](const int* cell, const double* val, int ns, const std::array<double, 2>& x,
                      double w, L2Accumulator&) {
                    double uh = 0.0;
                    for (int j = 0; j < ns; ++j) uh += coeffs[cell[j]] * val[j];
                    coeff_mean += w * uh;
                    exact_mean += w * exact(x[0], x[1]);
                    mesh_area += w;
                  });
    shift = (coeff_mean - exact_mean) / mesh_area;
  }
  const L2Accumulator acc = accumulate_l2(
      mesh, dofs, quad_degree,
      [&](const int* cell, const double* val, int ns, const std::array<double, 2>& x, double w,
          L2Accumulator& a) {
        double uh = 0.0;
        for (int j = 0; j < ns; ++j) uh += coeffs[cell[j]] * val[j];
        const double u = exact(x[0], x[1]);
        const double d = (uh - shift) - u;
        a.err2 += w * d * d;
        a.base2 += w * u * u;
      });
  if (acc.base2 <= 0.0) throw std::invalid_argument("relative_l2_error: exact field has zero norm");
  return std::sqrt(acc.err2 / acc.base2);
}

double relative_l2_error(const Mesh& mesh, const DofMap& dofs, const Vector& coeffs,
                         const VectorField& exact, int quad_degree) {
  const L2Accumulator acc = accumulate_l2(
      mesh, dofs, quad_degree,
      [&](const int* cell, const double* val, int ns, const std::array<double, 2>& x, double w,
          L2Accumulator& a) {
        double u0 = 0.0, u1 = 0.0;
        for (int j = 0; j < ns; ++j) {
          u0 += coeffs[2 * cell[j]] * val[j];
          u1 += coeffs[2 * cell[j] + 1] * val[j];
        }
        const auto u = exact(x[0], x[1]);
        a.err2 += w * ((u0 - u[0]) * (u0 - u[0]) + (u1 - u[1]) * (u1 - u[1]));
        a.base2 += w * (u[0] * u[0] + u[1] * u[1]);
      });
  if (acc.base2 <= 0.0) throw std::invalid_argument("relative_l2_error: exact field has zero norm");
  return std::sqrt(acc.err2 / acc.base2);
}

double field_mean(const Mesh& mesh, const DofMap& dofs, const Vector& coeffs, int quad_degree) {
  double area = 0.0, integral = 0.0;
  accumulate_l2(mesh, dofs, quad_degree,
                [&](const int* cell, const double* val, int ns, const std::array<double, 2>&,
                    double w, L2Accumulator&) {
                  double uh = 0.0;
                  for (int j = 0; j < ns; ++j) uh += coeffs[cell[j]] * val[j];
                  integral += w * uh;
                  area += w;
                });
  return integral / area;
}

}  // namespace stokeslab
