#pragma once

#include <functional>

#include "stokeslab/mesh.hpp"
#include "stokeslab/quadrature.hpp"
#include "stokeslab/sparse.hpp"

namespace stokeslab {

using ScalarField = std::function<double(double, double)>;
using VectorField = std::function<std::array<double, 2>(double, double)>;

enum class MatrixKind {
  MassVelocity,       // \int phi_i . phi_j (vector)
  MassPressure,       // \int psi_i psi_j
  StrainStiffness,    // \int 2 e(phi_i) : e(phi_j)
  VectorLaplacian,    // \int grad phi_i : grad phi_j
  GradDiv,            // \int div phi_i div phi_j
  Divergence,         // \int psi_k div phi_j  (pressure rows x velocity cols)
  PressureLaplacian,  // \int grad psi_i . grad psi_j
};

// Hood-Taylor pairing: continuous P_{k+1} velocity / P_k pressure.
// Velocity dofs are node-major with interleaved components (2i, 2i+1).
struct MixedSpace {
  Mesh mesh;
  int velocity_degree = 2;
  int pressure_degree = 1;
  DofMap velocity_dofs;  // scalar layout, used twice
  DofMap pressure_dofs;

  int n_velocity_dofs() const { return 2 * velocity_dofs.n_nodes; }
  int n_pressure_dofs() const { return pressure_dofs.n_nodes; }
  int quadrature_degree() const { return 2 * velocity_degree + 2; }
};

MixedSpace make_mixed_space(const Mesh& mesh, int pressure_degree);

struct BoundaryCondition {
  std::vector<int> constrained_dofs;  // sorted
  std::vector<double> values;         // aligned with constrained_dofs
};

// Dirichlet data on every velocity dof living on a boundary edge carrying
// dirichlet_tag. Pass a null field for homogeneous data.
BoundaryCondition make_velocity_dirichlet(const MixedSpace& space, const VectorField& values,
                                          int dirichlet_tag = kDirichletTag);

SparseMatrix assemble(MatrixKind kind, const MixedSpace& space);

// A = tau^{-1} M_V + mu E_V. tau must be positive; mu may be zero (tests).
SparseMatrix assemble_velocity_system(const MixedSpace& space, double tau, double mu);

// Diagonal matrix with entries \int |phi_i|; strictly positive even for the
// higher-degree bases whose plain integrals vanish.
SparseMatrix lump_velocity_mass(const MixedSpace& space);

Vector assemble_load(const MixedSpace& space, const VectorField& f);

// Symmetric elimination with lifting: rhs -= K u_g, constrained rows/columns
// zeroed, unit diagonal, rhs entries set to the prescribed values.
void apply_dirichlet(SparseMatrix& K, Vector& rhs, const BoundaryCondition& bc);
SparseMatrix eliminate_dirichlet(const SparseMatrix& K, const BoundaryCondition& bc);
// Lifting only; needs the unmodified matrix.
Vector lift_dirichlet_rhs(const SparseMatrix& K_original, const Vector& rhs,
                          const BoundaryCondition& bc);
// Zero the columns of constrained velocity dofs (for the divergence matrix).
SparseMatrix zero_columns(const SparseMatrix& B, const std::vector<int>& cols);
// Full-length vector with the prescribed values at constrained dofs, 0 elsewhere.
Vector dirichlet_vector(int n, const BoundaryCondition& bc);

Vector interpolate(const ScalarField& f, const DofMap& dofs);
Vector interpolate(const VectorField& f, const DofMap& dofs);  // interleaved

double relative_l2_error(const Mesh& mesh, const DofMap& dofs, const Vector& coeffs,
                         const ScalarField& exact, int quad_degree,
                         bool align_means = false);
double relative_l2_error(const Mesh& mesh, const DofMap& dofs, const Vector& coeffs,
                         const VectorField& exact, int quad_degree);

// Quadrature means, used to compare pressures defined up to a constant.
double field_mean(const Mesh& mesh, const DofMap& dofs, const Vector& coeffs, int quad_degree);

}  // namespace stokeslab
