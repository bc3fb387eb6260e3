#pragma once

#include <functional>

#include "stokeslab/sparse.hpp"

namespace stokeslab {

// y = Op(x). fixed_linear marks operators whose action is one and the same
// linear map on every call; threshold-controlled inner solves are not.
struct LinearOperator {
  int dim = 0;
  bool symmetric = false;
  bool fixed_linear = true;
  std::function<void(const Vector&, Vector&)> apply_fn;

  void apply(const Vector& x, Vector& y) const { apply_fn(x, y); }
  Vector operator()(const Vector& x) const {
    Vector y;
    apply_fn(x, y);
    return y;
  }
  explicit operator bool() const { return static_cast<bool>(apply_fn); }
};

LinearOperator matrix_operator(const SparseMatrix& m);  // m must outlive the operator
LinearOperator identity_operator(int n);

struct KrylovReport {
  int iterations = 0;
  std::vector<double> relative_residuals;  // length iterations + 1, starts at 1.0
  bool converged = false;
  double wall_time = 0.0;        // seconds
  double true_final_residual = 0.0;  // recomputed ||b - Op x|| / ||b|| at exit
};

struct KrylovResult {
  Vector x;
  KrylovReport report;
};

struct CgBreakdown : std::runtime_error {
  explicit CgBreakdown(const std::string& what) : std::runtime_error(what) {}
};

// Preconditioned conjugate gradient. The preconditioner must be a fixed
// linear operator; threshold-mode inner solves are rejected. Convergence is
// declared on the true residual recomputed at exit.
KrylovResult cg(const LinearOperator& op, const LinearOperator& precond, const Vector& b,
                double rel_tol, int max_iter);

// Restarted GMRES with right preconditioning. The Krylov directions are kept
// in preconditioned form, so a non-fixed preconditioner (inner iterative
// solve) is handled as flexible GMRES automatically.
KrylovResult gmres(const LinearOperator& op, const LinearOperator& precond, const Vector& b,
                   double rel_tol, int restart, int max_iter);

}  // namespace stokeslab
