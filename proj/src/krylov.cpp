#include "stokeslab/krylov.hpp"

#include <chrono>
#include <cmath>

namespace stokeslab {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double true_residual(const LinearOperator& op, const Vector& x, const Vector& b, double bn) {
  Vector r;
  op.apply(x, r);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
  return norm2(r) / bn;
}

}  // namespace

LinearOperator matrix_operator(const SparseMatrix& m) {
  LinearOperator op;
  op.dim = m.n_rows;
  op.symmetric = false;
  op.fixed_linear = true;
  op.apply_fn = [&m](const Vector& x, Vector& y) { spmv(m, x, y); };
  return op;
}

LinearOperator identity_operator(int n) {
  LinearOperator op;
  op.dim = n;
  op.symmetric = true;
  op.apply_fn = [](const Vector& x, Vector& y) { y = x; };
  return op;
}

KrylovResult cg(const LinearOperator& op, const LinearOperator& precond, const Vector& b,
                double rel_tol, int max_iter) {
  if (precond && !precond.fixed_linear)
    throw std::invalid_argument("cg: preconditioner must be a fixed linear operator");
  const auto start = Clock::now();
  const int n = op.dim;
  KrylovResult result;
  result.x.assign(n, 0.0);
  result.report.relative_residuals.push_back(1.0);
  const double bn = norm2(b);
  if (bn == 0.0) {
    result.report.converged = true;
    result.report.wall_time = seconds_since(start);
    return result;
  }

  Vector r = b;
  Vector z = precond ? precond(r) : r;
  Vector p = z;
  double rz = dot(r, z);
  Vector ap(n);
  int it = 0;
  bool converged = false;
  while (it < max_iter) {
    op.apply(p, ap);
    const double pap = dot(p, ap);
    if (pap <= 0.0) throw CgBreakdown("cg: non-positive curvature p^T A p");
    const double alpha = rz / pap;
    axpy(alpha, p, result.x);
    axpy(-alpha, ap, r);
    ++it;
    const double rel = norm2(r) / bn;
    result.report.relative_residuals.push_back(rel);
    if (rel <= rel_tol) {
      const double tr = true_residual(op, result.x, b, bn);
      if (tr <= rel_tol) {
        converged = true;
        break;
      }
      // recurrence drifted; refresh the residual and keep going
      op.apply(result.x, r);
      for (int i = 0; i < n; ++i) r[i] = b[i] - r[i];
      z = precond ? precond(r) : r;
      p = z;
      rz = dot(r, z);
      continue;
    }
    z = precond ? precond(r) : r;
    const double rz_next = dot(r, z);
    const double beta = rz_next / rz;
    for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    rz = rz_next;
  }
  result.report.iterations = it;
  result.report.converged = converged;
  result.report.true_final_residual = true_residual(op, result.x, b, bn);
  result.report.wall_time = seconds_since(start);
  return result;
}

KrylovResult gmres(const LinearOperator& op, const LinearOperator& precond, const Vector& b,
                   double rel_tol, int restart, int max_iter) {
  const auto start = Clock::now();
  const int n = op.dim;
  KrylovResult result;
  result.x.assign(n, 0.0);
  result.report.relative_residuals.push_back(1.0);
  const double bn = norm2(b);
  if (bn == 0.0) {
    result.report.converged = true;
    result.report.wall_time = seconds_since(start);
    return result;
  }

  int total = 0;
  bool converged = false;
  Vector r = b;  // residual at the current restart point (x = 0 initially)
  while (!converged && total < max_iter) {
    const double beta = norm2(r);
    if (beta / bn <= rel_tol) {
      converged = true;
      break;
    }
    std::vector<Vector> v, z;  // Arnoldi and preconditioned bases, grown lazily
    v.push_back(r);
    scal(1.0 / beta, v[0]);
    std::vector<std::vector<double>> h;  // h[j] holds column j (j+2 entries)
    std::vector<double> cs, sn, g;
    g.assign(1, beta);
    int j = 0;
    bool stagnated = false;
    for (; j < restart && total < max_iter; ++j) {
      ++total;
      z.push_back(precond ? precond(v[j]) : v[j]);
      Vector w;
      op.apply(z[j], w);
      h.emplace_back(j + 2, 0.0);
      for (int i = 0; i <= j; ++i) {
        h[j][i] = dot(w, v[i]);
        axpy(-h[j][i], v[i], w);
      }
      h[j][j + 1] = norm2(w);
      const bool happy = h[j][j + 1] <= 1e-14 * beta;
      if (!happy) {
        Vector vw = w;
        scal(1.0 / h[j][j + 1], vw);
        v.push_back(std::move(vw));
      }
      // apply stored rotations, then create the new one
      for (int i = 0; i < j; ++i) {
        const double t = cs[i] * h[j][i] + sn[i] * h[j][i + 1];
        h[j][i + 1] = -sn[i] * h[j][i] + cs[i] * h[j][i + 1];
        h[j][i] = t;
      }
      const double denom = std::hypot(h[j][j], h[j][j + 1]);
      cs.push_back(denom == 0.0 ? 1.0 : h[j][j] / denom);
      sn.push_back(denom == 0.0 ? 0.0 : h[j][j + 1] / denom);
      h[j][j] = denom;
      h[j][j + 1] = 0.0;
      g.push_back(-sn[j] * g[j]);
      g[j] = cs[j] * g[j];
      const double rel = std::abs(g[j + 1]) / bn;
      result.report.relative_residuals.push_back(rel);
      if (happy || rel <= rel_tol) {
        ++j;
        stagnated = happy;
        break;
      }
    }
    // back-substitute and update the iterate
    if (j > 0) {
      std::vector<double> y(j, 0.0);
      for (int i = j - 1; i >= 0; --i) {
        double s = g[i];
        for (int k = i + 1; k < j; ++k) s -= h[k][i] * y[k];
        y[i] = s / h[i][i];
      }
      for (int i = 0; i < j; ++i) axpy(y[i], z[i], result.x);
    }
    op.apply(result.x, r);
    for (int i = 0; i < n; ++i) r[i] = b[i] - r[i];
    const double tr = norm2(r) / bn;
    if (tr <= rel_tol) converged = true;
    else if (stagnated) break;  // exact breakdown but the true residual disagrees
  }
  result.report.iterations = total;
  result.report.converged = converged;
  result.report.true_final_residual = true_residual(op, result.x, b, bn);
  result.report.wall_time = seconds_since(start);
  return result;
}

}  // namespace stokeslab
