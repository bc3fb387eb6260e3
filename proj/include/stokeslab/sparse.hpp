#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace stokeslab {

using Vector = std::vector<double>;

// dense-vector kernels; all loops are sequential so results are reproducible
double dot(const Vector& a, const Vector& b);
double norm2(const Vector& a);
double norm1(const Vector& a);
void axpy(double alpha, const Vector& x, Vector& y);  // y += alpha*x
void scal(double alpha, Vector& x);
Vector zeros(int n);
double mean(const Vector& a);
void subtract_mean(Vector& a);

// Compressed-row sparse matrix. Column indices are strictly increasing within
// each row; duplicate insertions are summed at compress time.
struct SparseMatrix {
  int n_rows = 0;
  int n_cols = 0;
  std::vector<int> row_offsets;  // size n_rows + 1
  std::vector<int> col_indices;
  std::vector<double> values;

  int nnz() const { return static_cast<int>(values.size()); }
  double coeff(int i, int j) const;  // 0 when the entry is not stored
};

class CooBuilder {
 public:
  CooBuilder(int n_rows, int n_cols) : n_rows_(n_rows), n_cols_(n_cols) {}
  void add(int i, int j, double v);
  SparseMatrix compress() const;

 private:
  int n_rows_, n_cols_;
  std::vector<int> rows_, cols_;
  std::vector<double> vals_;
};

void check_sparse(const SparseMatrix& m);  // throws on violated invariants

void spmv(const SparseMatrix& m, const Vector& x, Vector& y);
Vector spmv(const SparseMatrix& m, const Vector& x);
void spmv_transpose(const SparseMatrix& m, const Vector& x, Vector& y);
Vector spmv_transpose(const SparseMatrix& m, const Vector& x);

SparseMatrix transpose(const SparseMatrix& m);
SparseMatrix matmul(const SparseMatrix& a, const SparseMatrix& b);
// a*A + b*B on the union pattern
SparseMatrix add_scaled(double a, const SparseMatrix& A, double b, const SparseMatrix& B);
SparseMatrix identity_matrix(int n);
SparseMatrix diagonal_matrix(const Vector& d);
Vector diagonal_of(const SparseMatrix& m);
double max_abs(const SparseMatrix& m);
// max |M - M^T| over stored entries, for symmetry checks
double max_asymmetry(const SparseMatrix& m);

}  // namespace stokeslab
