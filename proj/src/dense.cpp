#include "stokeslab/dense.hpp"

#include <algorithm>
#include <cmath>

namespace stokeslab {

namespace {

constexpr int kDenseLimit = 2000;

void check_size(const DenseMatrix& m, const char* who) {
  if (m.n_rows > kDenseLimit || m.n_cols > kDenseLimit)
    throw std::invalid_argument(std::string(who) + ": dense oracle limited to 2000 rows");
}

}  // namespace

DenseMatrix densify(const SparseMatrix& m) {
  DenseMatrix d(m.n_rows, m.n_cols);
  for (int i = 0; i < m.n_rows; ++i)
    for (int k = m.row_offsets[i]; k < m.row_offsets[i + 1]; ++k)
      d(i, m.col_indices[k]) = m.values[k];
  return d;
}

SparseMatrix sparsify(const DenseMatrix& m) {
  CooBuilder b(m.n_rows, m.n_cols);
  for (int i = 0; i < m.n_rows; ++i)
    for (int j = 0; j < m.n_cols; ++j)
      if (m(i, j) != 0.0) b.add(i, j, m(i, j));
  return b.compress();
}

Vector dense_matvec(const DenseMatrix& m, const Vector& x) {
  if (static_cast<int>(x.size()) != m.n_cols)
    throw std::invalid_argument("dense_matvec: dimension mismatch");
  Vector y(m.n_rows, 0.0);
  for (int i = 0; i < m.n_rows; ++i) {
    double s = 0.0;
    for (int j = 0; j < m.n_cols; ++j) s += m(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

DenseMatrix dense_matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.n_cols != b.n_rows) throw std::invalid_argument("dense_matmul: dimension mismatch");
  DenseMatrix c(a.n_rows, b.n_cols);
  for (int i = 0; i < a.n_rows; ++i)
    for (int k = 0; k < a.n_cols; ++k) {
      const double v = a(i, k);
      if (v == 0.0) continue;
      for (int j = 0; j < b.n_cols; ++j) c(i, j) += v * b(k, j);
    }
  return c;
}

DenseMatrix dense_transpose(const DenseMatrix& m) {
  DenseMatrix t(m.n_cols, m.n_rows);
  for (int i = 0; i < m.n_rows; ++i)
    for (int j = 0; j < m.n_cols; ++j) t(j, i) = m(i, j);
  return t;
}

DenseMatrix dense_add_scaled(double a, const DenseMatrix& A, double b, const DenseMatrix& B) {
  if (A.n_rows != B.n_rows || A.n_cols != B.n_cols)
    throw std::invalid_argument("dense_add_scaled: dimension mismatch");
  DenseMatrix c(A.n_rows, A.n_cols);
  for (std::size_t k = 0; k < c.a.size(); ++k) c.a[k] = a * A.a[k] + b * B.a[k];
  return c;
}

double dense_frobenius(const DenseMatrix& m) {
  double s = 0.0;
  for (double v : m.a) s += v * v;
  return std::sqrt(s);
}

double dense_max_abs(const DenseMatrix& m) {
  double s = 0.0;
  for (double v : m.a) s = std::max(s, std::abs(v));
  return s;
}

namespace {

// In-place LU with partial pivoting; returns the permutation.
std::vector<int> lu_factor(DenseMatrix& m) {
  if (m.n_rows != m.n_cols) throw std::invalid_argument("dense_solve: matrix not square");
  check_size(m, "dense_solve");
  const int n = m.n_rows;
  const double tol = 1e-13 * std::max(dense_max_abs(m), 1e-300);
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  for (int k = 0; k < n; ++k) {
    int piv = k;
    double best = std::abs(m(k, k));
    for (int i = k + 1; i < n; ++i) {
      if (std::abs(m(i, k)) > best) {
        best = std::abs(m(i, k));
        piv = i;
      }
    }
    if (best <= tol) throw SingularMatrixError("dense_solve: singular matrix");
    if (piv != k) {
      for (int j = 0; j < n; ++j) std::swap(m(k, j), m(piv, j));
      std::swap(perm[k], perm[piv]);
    }
    const double d = m(k, k);
    for (int i = k + 1; i < n; ++i) {
      const double f = m(i, k) / d;
      m(i, k) = f;
      for (int j = k + 1; j < n; ++j) m(i, j) -= f * m(k, j);
    }
  }
  return perm;
}

Vector lu_solve(const DenseMatrix& lu, const std::vector<int>& perm, const Vector& b) {
  const int n = lu.n_rows;
  Vector x(n);
  for (int i = 0; i < n; ++i) x[i] = b[perm[i]];
  for (int i = 1; i < n; ++i) {
    double s = x[i];
    for (int j = 0; j < i; ++j) s -= lu(i, j) * x[j];
    x[i] = s;
  }
  for (int i = n - 1; i >= 0; --i) {
    double s = x[i];
    for (int j = i + 1; j < n; ++j) s -= lu(i, j) * x[j];
    x[i] = s / lu(i, i);
  }
  return x;
}

}  // namespace

Vector dense_solve(const DenseMatrix& m, const Vector& b) {
  if (static_cast<int>(b.size()) != m.n_rows)
    throw std::invalid_argument("dense_solve: rhs length mismatch");
  DenseMatrix lu = m;
  const std::vector<int> perm = lu_factor(lu);
  return lu_solve(lu, perm, b);
}

DenseMatrix dense_inverse(const DenseMatrix& m) {
  DenseMatrix lu = m;
  const std::vector<int> perm = lu_factor(lu);
  const int n = m.n_rows;
  DenseMatrix inv(n, n);
  Vector e(n, 0.0);
  for (int j = 0; j < n; ++j) {
    e.assign(n, 0.0);
    e[j] = 1.0;
    Vector col = lu_solve(lu, perm, e);
    for (int i = 0; i < n; ++i) inv(i, j) = col[i];
  }
  return inv;
}

void dense_eigs_sym_full(const DenseMatrix& m, Vector& values, DenseMatrix& vectors) {
  if (m.n_rows != m.n_cols) throw std::invalid_argument("dense_eigs_sym: matrix not square");
  check_size(m, "dense_eigs_sym");
  const int n = m.n_rows;
  const double scale = std::max(dense_max_abs(m), 1e-300);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (std::abs(m(i, j) - m(j, i)) > 1e-10 * scale)
        throw std::invalid_argument("dense_eigs_sym: input not symmetric");

  DenseMatrix a = m;
  vectors = DenseMatrix(n, n);
  for (int i = 0; i < n; ++i) vectors(i, i) = 1.0;

  // cyclic Jacobi sweeps
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (std::sqrt(off) <= 1e-15 * scale * n) break;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= 1e-18 * scale) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = vectors(k, p), vkq = vectors(k, q);
          vectors(k, p) = c * vkp - s * vkq;
          vectors(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  values.resize(n);
  for (int i = 0; i < n; ++i) values[i] = a(i, i);
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int x, int y) { return values[x] < values[y]; });
  Vector sorted(n);
  DenseMatrix vsorted(n, n);
  for (int j = 0; j < n; ++j) {
    sorted[j] = values[order[j]];
    for (int i = 0; i < n; ++i) vsorted(i, j) = vectors(i, order[j]);
  }
  values = sorted;
  vectors = vsorted;
}

Vector dense_eigs_sym(const DenseMatrix& m) {
  Vector values;
  DenseMatrix vectors;
  dense_eigs_sym_full(m, values, vectors);
  return values;
}

DenseMatrix dense_pinv(const DenseMatrix& m, double rel_tol) {
  check_size(m, "dense_pinv");
  const double scale = std::max(dense_max_abs(m), 1e-300);
  bool symmetric = m.n_rows == m.n_cols;
  if (symmetric) {
    for (int i = 0; i < m.n_rows && symmetric; ++i)
      for (int j = i + 1; j < m.n_cols; ++j)
        if (std::abs(m(i, j) - m(j, i)) > 1e-10 * scale) {
          symmetric = false;
          break;
        }
  }
  if (symmetric) {
    Vector vals;
    DenseMatrix vecs;
    dense_eigs_sym_full(m, vals, vecs);
    double amax = 0.0;
    for (double v : vals) amax = std::max(amax, std::abs(v));
    const double cut = rel_tol * std::max(amax, 1e-300);
    DenseMatrix p(m.n_rows, m.n_cols);
    for (int k = 0; k < m.n_rows; ++k) {
      if (std::abs(vals[k]) <= cut) continue;
      const double inv = 1.0 / vals[k];
      for (int i = 0; i < m.n_rows; ++i) {
        const double vik = vecs(i, k) * inv;
        if (vik == 0.0) continue;
        for (int j = 0; j < m.n_cols; ++j) p(i, j) += vik * vecs(j, k);
      }
    }
    return p;
  }
  // general input: SVD-by-normal-equations, adequate at oracle scale
  const DenseMatrix mt = dense_transpose(m);
  const DenseMatrix mtm = dense_matmul(mt, m);
  Vector vals;
  DenseMatrix v;
  dense_eigs_sym_full(mtm, vals, v);
  double smax = 0.0;
  for (double w : vals) smax = std::max(smax, std::sqrt(std::max(w, 0.0)));
  const double cut = rel_tol * std::max(smax, 1e-300);
  DenseMatrix p(m.n_cols, m.n_rows);
  for (int k = 0; k < v.n_cols; ++k) {
    const double sigma = std::sqrt(std::max(vals[k], 0.0));
    if (sigma <= cut) continue;
    // u_k = M v_k / sigma; pinv += v_k u_k^T / sigma
    Vector vk(m.n_cols);
    for (int i = 0; i < m.n_cols; ++i) vk[i] = v(i, k);
    Vector uk = dense_matvec(m, vk);
    for (int i = 0; i < m.n_cols; ++i)
      for (int j = 0; j < m.n_rows; ++j) p(i, j) += vk[i] * uk[j] / (sigma * sigma);
  }
  return p;
}

DenseMatrix dense_cholesky(const DenseMatrix& m) {
  if (m.n_rows != m.n_cols) throw std::invalid_argument("dense_cholesky: matrix not square");
  check_size(m, "dense_cholesky");
  const int n = m.n_rows;
  DenseMatrix L(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = m(i, j);
      for (int k = 0; k < j; ++k) s -= L(i, k) * L(j, k);
      if (i == j) {
        if (s <= 0.0) throw SingularMatrixError("dense_cholesky: matrix not positive definite");
        L(i, i) = std::sqrt(s);
      } else {
        L(i, j) = s / L(j, j);
      }
    }
  }
  return L;
}

Vector generalized_eigs_sym(const DenseMatrix& A, const DenseMatrix& B) {
  if (A.n_rows != B.n_rows || A.n_cols != B.n_cols)
    throw std::invalid_argument("generalized_eigs_sym: dimension mismatch");
  const DenseMatrix L = dense_cholesky(B);
  const int n = A.n_rows;
  // C = L^{-1} A L^{-T}
  DenseMatrix C(n, n);
  // first W = L^{-1} A by forward substitution on rows
  DenseMatrix W = A;
  for (int col = 0; col < n; ++col) {
    for (int i = 0; i < n; ++i) {
      double s = W(i, col);
      for (int k = 0; k < i; ++k) s -= L(i, k) * W(k, col);
      W(i, col) = s / L(i, i);
    }
  }
  // then C = W L^{-T}: C^T = L^{-1} W^T
  DenseMatrix Wt = dense_transpose(W);
  for (int col = 0; col < n; ++col) {
    for (int i = 0; i < n; ++i) {
      double s = Wt(i, col);
      for (int k = 0; k < i; ++k) s -= L(i, k) * Wt(k, col);
      Wt(i, col) = s / L(i, i);
    }
  }
  C = dense_transpose(Wt);
  // enforce exact symmetry before the Jacobi sweep
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double v = 0.5 * (C(i, j) + C(j, i));
      C(i, j) = C(j, i) = v;
    }
  return dense_eigs_sym(C);
}

}  // namespace stokeslab
