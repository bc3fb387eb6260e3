#pragma once

#include <array>
#include <vector>

namespace stokeslab {

// Symmetric quadrature on the reference triangle (0,0)-(1,0)-(0,1).
// Weights sum to the reference area 1/2.
struct QuadRule {
  int exactness = 0;
  std::vector<std::array<double, 2>> points;
  std::vector<double> weights;
};

// Smallest tabulated rule exact for polynomials of the given degree (<= 8).
const QuadRule& triangle_rule(int min_degree);

// Lagrange basis on the reference triangle, degree 1..3, expressed in the
// monomial basis. Node ordering matches reference_nodes() in mesh.hpp.
struct ReferenceBasis {
  int degree = 1;
  int size = 3;
  std::vector<std::array<int, 2>> monomials;  // exponents (a, b) for x^a y^b
  std::vector<double> coeffs;                 // coeffs[j*size + m] for basis j

  void eval(double x, double y, double* values) const;
  void eval_grad(double x, double y, double* dx, double* dy) const;
};

const ReferenceBasis& lagrange_reference_basis(int degree);

// Basis values and gradients pre-tabulated at the points of a rule.
struct TabulatedBasis {
  int size = 0;
  int n_points = 0;
  std::vector<double> values;  // [q * size + j]
  std::vector<double> dx;
  std::vector<double> dy;
};

TabulatedBasis tabulate(const ReferenceBasis& basis, const QuadRule& rule);

}  // namespace stokeslab
