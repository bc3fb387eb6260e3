#pragma once

#include "stokeslab/sparse.hpp"

namespace stokeslab {

// Row-major dense matrix. This is the brute-force side of the house: direct
// solves, symmetric eigenvalues and pseudoinverses used to cross-check the
// iterative machinery on small problems. Hard limit of 2000 rows.
struct DenseMatrix {
  int n_rows = 0;
  int n_cols = 0;
  std::vector<double> a;

  DenseMatrix() = default;
  DenseMatrix(int r, int c) : n_rows(r), n_cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}
  double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * n_cols + j]; }
  double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * n_cols + j]; }
};

struct SingularMatrixError : std::runtime_error {
  explicit SingularMatrixError(const std::string& what) : std::runtime_error(what) {}
};

DenseMatrix densify(const SparseMatrix& m);
SparseMatrix sparsify(const DenseMatrix& m);

Vector dense_matvec(const DenseMatrix& m, const Vector& x);
DenseMatrix dense_matmul(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix dense_transpose(const DenseMatrix& m);
DenseMatrix dense_add_scaled(double a, const DenseMatrix& A, double b, const DenseMatrix& B);
double dense_frobenius(const DenseMatrix& m);
double dense_max_abs(const DenseMatrix& m);

// LU with partial pivoting; pivots below 1e-13 * max|M| count as singular.
Vector dense_solve(const DenseMatrix& m, const Vector& b);
DenseMatrix dense_inverse(const DenseMatrix& m);

// Eigenvalues of a symmetric matrix (cyclic Jacobi), sorted ascending.
// Rejects inputs with relative asymmetry above 1e-10.
Vector dense_eigs_sym(const DenseMatrix& m);
void dense_eigs_sym_full(const DenseMatrix& m, Vector& values, DenseMatrix& vectors);

// Moore-Penrose pseudoinverse. Symmetric inputs go through the eigensolver;
// general inputs through normal equations (oracle-scale accuracy only).
DenseMatrix dense_pinv(const DenseMatrix& m, double rel_tol = 1e-11);

// Lower-triangular Cholesky factor of an SPD matrix.
DenseMatrix dense_cholesky(const DenseMatrix& m);

// Eigenvalues of the pencil A x = lambda B x with A symmetric, B SPD.
Vector generalized_eigs_sym(const DenseMatrix& A, const DenseMatrix& B);

}  // namespace stokeslab
