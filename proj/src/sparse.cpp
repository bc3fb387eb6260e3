#include "stokeslab/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace stokeslab {

double dot(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const Vector& a) { return std::sqrt(dot(a, a)); }

double norm1(const Vector& a) {
  double s = 0.0;
  for (double v : a) s += std::abs(v);
  return s;
}

void axpy(double alpha, const Vector& x, Vector& y) {
  if (x.size() != y.size()) throw std::invalid_argument("axpy: length mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void scal(double alpha, Vector& x) {
  for (double& v : x) v *= alpha;
}

Vector zeros(int n) { return Vector(static_cast<std::size_t>(n), 0.0); }

double mean(const Vector& a) {
  if (a.empty()) return 0.0;
  double s = std::accumulate(a.begin(), a.end(), 0.0);
  return s / static_cast<double>(a.size());
}

void subtract_mean(Vector& a) {
  double m = mean(a);
  for (double& v : a) v -= m;
}

double SparseMatrix::coeff(int i, int j) const {
  auto first = col_indices.begin() + row_offsets[i];
  auto last = col_indices.begin() + row_offsets[i + 1];
  auto it = std::lower_bound(first, last, j);
  if (it != last && *it == j) return values[it - col_indices.begin()];
  return 0.0;
}

void CooBuilder::add(int i, int j, double v) {
  if (i < 0 || i >= n_rows_ || j < 0 || j >= n_cols_)
    throw std::out_of_range("CooBuilder::add: index out of range");
  rows_.push_back(i);
  cols_.push_back(j);
  vals_.push_back(v);
}

SparseMatrix CooBuilder::compress() const {
  const std::size_t n = vals_.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (rows_[a] != rows_[b]) return rows_[a] < rows_[b];
    return cols_[a] < cols_[b];
  });

  SparseMatrix m;
  m.n_rows = n_rows_;
  m.n_cols = n_cols_;
  m.row_offsets.assign(n_rows_ + 1, 0);
  m.col_indices.reserve(n);
  m.values.reserve(n);
  int prev_i = -1, prev_j = -1;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t s = order[k];
    if (rows_[s] == prev_i && cols_[s] == prev_j) {
      m.values.back() += vals_[s];
    } else {
      m.col_indices.push_back(cols_[s]);
      m.values.push_back(vals_[s]);
      prev_i = rows_[s];
      prev_j = cols_[s];
      ++m.row_offsets[prev_i + 1];
    }
  }
  for (int i = 0; i < n_rows_; ++i) m.row_offsets[i + 1] += m.row_offsets[i];
  return m;
}

void check_sparse(const SparseMatrix& m) {
  if (static_cast<int>(m.row_offsets.size()) != m.n_rows + 1)
    throw std::runtime_error("sparse: bad row_offsets size");
  if (m.row_offsets.front() != 0 || m.row_offsets.back() != m.nnz())
    throw std::runtime_error("sparse: bad row_offsets ends");
  for (int i = 0; i < m.n_rows; ++i) {
    if (m.row_offsets[i] > m.row_offsets[i + 1])
      throw std::runtime_error("sparse: row_offsets not monotone");
    for (int k = m.row_offsets[i]; k < m.row_offsets[i + 1]; ++k) {
      if (m.col_indices[k] < 0 || m.col_indices[k] >= m.n_cols)
        throw std::runtime_error("sparse: column index out of range");
      if (k > m.row_offsets[i] && m.col_indices[k] <= m.col_indices[k - 1])
        throw std::runtime_error("sparse: columns not strictly increasing");
      if (std::isnan(m.values[k])) throw std::runtime_error("sparse: NaN value");
    }
  }
}

void spmv(const SparseMatrix& m, const Vector& x, Vector& y) {
  if (static_cast<int>(x.size()) != m.n_cols) throw std::invalid_argument("spmv: dimension mismatch");
  y.assign(m.n_rows, 0.0);
  for (int i = 0; i < m.n_rows; ++i) {
    double s = 0.0;
    for (int k = m.row_offsets[i]; k < m.row_offsets[i + 1]; ++k)
      s += m.values[k] * x[m.col_indices[k]];
    y[i] = s;
  }
}

Vector spmv(const SparseMatrix& m, const Vector& x) {
  Vector y;
  spmv(m, x, y);
  return y;
}

void spmv_transpose(const SparseMatrix& m, const Vector& x, Vector& y) {
  if (static_cast<int>(x.size()) != m.n_rows)
    throw std::invalid_argument("spmv_transpose: dimension mismatch");
  y.assign(m.n_cols, 0.0);
  for (int i = 0; i < m.n_rows; ++i) {
    const double xi = x[i];
    for (int k = m.row_offsets[i]; k < m.row_offsets[i + 1]; ++k)
      y[m.col_indices[k]] += m.values[k] * xi;
  }
}

Vector spmv_transpose(const SparseMatrix& m, const Vector& x) {
  Vector y;
  spmv_transpose(m, x, y);
  return y;
}

SparseMatrix transpose(const SparseMatrix& m) {
  SparseMatrix t;
  t.n_rows = m.n_cols;
  t.n_cols = m.n_rows;
  t.row_offsets.assign(t.n_rows + 1, 0);
  for (int k = 0; k < m.nnz(); ++k) ++t.row_offsets[m.col_indices[k] + 1];
  for (int i = 0; i < t.n_rows; ++i) t.row_offsets[i + 1] += t.row_offsets[i];
  t.col_indices.resize(m.nnz());
  t.values.resize(m.nnz());
  std::vector<int> next(t.row_offsets.begin(), t.row_offsets.end() - 1);
  for (int i = 0; i < m.n_rows; ++i) {
    for (int k = m.row_offsets[i]; k < m.row_offsets[i + 1]; ++k) {
      const int pos = next[m.col_indices[k]]++;
      t.col_indices[pos] = i;
      t.values[pos] = m.values[k];
    }
  }
  return t;  // columns per row come out sorted because m rows are scanned in order
}

SparseMatrix matmul(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.n_cols != b.n_rows) throw std::invalid_argument("matmul: dimension mismatch");
  SparseMatrix c;
  c.n_rows = a.n_rows;
  c.n_cols = b.n_cols;
  c.row_offsets.assign(a.n_rows + 1, 0);
  std::vector<double> acc(b.n_cols, 0.0);
  std::vector<int> marker(b.n_cols, -1);
  std::vector<int> touched;
  for (int i = 0; i < a.n_rows; ++i) {
    touched.clear();
    for (int ka = a.row_offsets[i]; ka < a.row_offsets[i + 1]; ++ka) {
      const int j = a.col_indices[ka];
      const double va = a.values[ka];
      for (int kb = b.row_offsets[j]; kb < b.row_offsets[j + 1]; ++kb) {
        const int col = b.col_indices[kb];
        if (marker[col] != i) {
          marker[col] = i;
          acc[col] = 0.0;
          touched.push_back(col);
        }
        acc[col] += va * b.values[kb];
      }
    }
    std::sort(touched.begin(), touched.end());
    for (int col : touched) {
      c.col_indices.push_back(col);
      c.values.push_back(acc[col]);
    }
    c.row_offsets[i + 1] = static_cast<int>(c.col_indices.size());
  }
  return c;
}

SparseMatrix add_scaled(double a, const SparseMatrix& A, double b, const SparseMatrix& B) {
  if (A.n_rows != B.n_rows || A.n_cols != B.n_cols)
    throw std::invalid_argument("add_scaled: dimension mismatch");
  SparseMatrix c;
  c.n_rows = A.n_rows;
  c.n_cols = A.n_cols;
  c.row_offsets.assign(A.n_rows + 1, 0);
  for (int i = 0; i < A.n_rows; ++i) {
    int ka = A.row_offsets[i], kb = B.row_offsets[i];
    const int ea = A.row_offsets[i + 1], eb = B.row_offsets[i + 1];
    while (ka < ea || kb < eb) {
      int col;
      double v;
      if (kb >= eb || (ka < ea && A.col_indices[ka] < B.col_indices[kb])) {
        col = A.col_indices[ka];
        v = a * A.values[ka++];
      } else if (ka >= ea || B.col_indices[kb] < A.col_indices[ka]) {
        col = B.col_indices[kb];
        v = b * B.values[kb++];
      } else {
        col = A.col_indices[ka];
        v = a * A.values[ka++] + b * B.values[kb++];
      }
      c.col_indices.push_back(col);
      c.values.push_back(v);
    }
    c.row_offsets[i + 1] = static_cast<int>(c.col_indices.size());
  }
  return c;
}

SparseMatrix identity_matrix(int n) {
  SparseMatrix m;
  m.n_rows = m.n_cols = n;
  m.row_offsets.resize(n + 1);
  m.col_indices.resize(n);
  m.values.assign(n, 1.0);
  for (int i = 0; i <= n; ++i) m.row_offsets[i] = i;
  for (int i = 0; i < n; ++i) m.col_indices[i] = i;
  return m;
}

SparseMatrix diagonal_matrix(const Vector& d) {
  SparseMatrix m = identity_matrix(static_cast<int>(d.size()));
  m.values = d;
  return m;
}

Vector diagonal_of(const SparseMatrix& m) {
  Vector d(m.n_rows, 0.0);
  for (int i = 0; i < m.n_rows; ++i) d[i] = m.coeff(i, i);
  return d;
}

double max_abs(const SparseMatrix& m) {
  double s = 0.0;
  for (double v : m.values) s = std::max(s, std::abs(v));
  return s;
}

double max_asymmetry(const SparseMatrix& m) {
  if (m.n_rows != m.n_cols) throw std::invalid_argument("max_asymmetry: not square");
  double s = 0.0;
  for (int i = 0; i < m.n_rows; ++i)
    for (int k = m.row_offsets[i]; k < m.row_offsets[i + 1]; ++k)
      s = std::max(s, std::abs(m.values[k] - m.coeff(m.col_indices[k], i)));
  return s;
}

}  // namespace stokeslab
