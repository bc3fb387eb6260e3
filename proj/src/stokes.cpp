#include "stokeslab/stokes.hpp"

#include <chrono>
#include <cmath>

namespace stokeslab {

namespace detail {

const AmgHierarchy& LazyAmg::get(const SparseMatrix& m, double theta, int block_size) {
  std::lock_guard<std::mutex> lock(mtx);
  if (!h) h = std::make_unique<AmgHierarchy>(amg_setup(m, theta, block_size));
  return *h;
}

}  // namespace detail

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Vector amg_mode_apply(const AmgHierarchy& h, AmgMode mode, const Vector& rhs) {
  if (mode.is_fixed()) {
    Vector x;
    amg_fixed_cycles(h, rhs, mode.cycles, x);
    return x;
  }
  return amg_apply(h, rhs, mode).x;
}

}  // namespace

StokesSystem make_stokes_system(const MixedSpace& space, const StokesOptions& options) {
  if (options.mu <= 0.0) throw std::invalid_argument("make_stokes_system: mu must be positive");
  if (options.lambda < 0.0)
    throw std::invalid_argument("make_stokes_system: lambda must be nonnegative");

  StokesSystem sys;
  sys.space = space;
  sys.mu = options.mu;
  sys.lambda = options.lambda;
  sys.tau = options.tau > 0.0 ? options.tau
                              : 1.0 / std::sqrt(static_cast<double>(space.velocity_dofs.n_nodes));
  sys.nullspace = options.nullspace;
  sys.inner_tol = options.inner_tol;
  sys.gmres_restart = options.gmres_restart;
  sys.max_outer = options.max_outer;
  sys.max_inner = options.max_inner;

  sys.bc = make_velocity_dirichlet(space, options.dirichlet_values, options.dirichlet_tag);
  sys.boundary_values = dirichlet_vector(space.n_velocity_dofs(), sys.bc);

  sys.mass_velocity0 = assemble(MatrixKind::MassVelocity, space);
  sys.strain0 = assemble(MatrixKind::StrainStiffness, space);
  sys.laplacian_v0 = assemble(MatrixKind::VectorLaplacian, space);
  sys.grad_div0 = assemble(MatrixKind::GradDiv, space);
  sys.divergence0 = assemble(MatrixKind::Divergence, space);
  sys.mass_pressure = assemble(MatrixKind::MassPressure, space);
  sys.pressure_laplacian = assemble(MatrixKind::PressureLaplacian, space);
  sys.mass_plus_laplacian_q = add_scaled(1.0, sys.mass_pressure, 1.0, sys.pressure_laplacian);
  sys.velocity_system0 = add_scaled(1.0 / sys.tau, sys.mass_velocity0, sys.mu, sys.strain0);

  const SparseMatrix lumped = lump_velocity_mass(space);
  sys.lumped_inv = diagonal_of(lumped);
  for (double& v : sys.lumped_inv) v = 1.0 / v;

  const SparseMatrix a3raw =
      add_scaled(1.0 / sys.tau, sys.mass_velocity0, sys.mu, sys.laplacian_v0);
  const SparseMatrix a1raw =
      add_scaled(1.0, a3raw, sys.mu * (1.0 + sys.lambda), sys.grad_div0);

  sys.A = eliminate_dirichlet(sys.velocity_system0, sys.bc);
  sys.A1t = eliminate_dirichlet(a1raw, sys.bc);
  sys.A3t = eliminate_dirichlet(a3raw, sys.bc);
  sys.mass_velocity = eliminate_dirichlet(sys.mass_velocity0, sys.bc);
  sys.B = zero_columns(sys.divergence0, sys.bc.constrained_dofs);

  sys.amg_a1 = std::make_unique<detail::LazyAmg>();
  sys.amg_a2 = std::make_unique<detail::LazyAmg>();
  sys.amg_a3 = std::make_unique<detail::LazyAmg>();
  sys.amg_mv = std::make_unique<detail::LazyAmg>();
  sys.amg_mq = std::make_unique<detail::LazyAmg>();
  sys.amg_mqlq = std::make_unique<detail::LazyAmg>();
  sys.amg_lq = std::make_unique<detail::LazyAmg>();
  return sys;
}

const AmgHierarchy& velocity_hierarchy(const StokesSystem& sys, VelocityMatrix m) {
  switch (m) {
    case VelocityMatrix::A1:
      return sys.amg_a1->get(sys.A1t, 0.7, 2);
    case VelocityMatrix::A2:
      return sys.amg_a2->get(sys.A, 0.7, 2);
    case VelocityMatrix::A3:
      return sys.amg_a3->get(sys.A3t, 0.1, 2);
  }
  throw std::invalid_argument("velocity_hierarchy: unknown matrix");
}

const AmgHierarchy& mass_q_hierarchy(const StokesSystem& sys) {
  return sys.amg_mq->get(sys.mass_pressure, 0.1, 1);
}

const AmgHierarchy& mass_v_hierarchy(const StokesSystem& sys) {
  return sys.amg_mv->get(sys.mass_velocity, 0.1, 2);
}

const AmgHierarchy& mass_plus_laplacian_hierarchy(const StokesSystem& sys) {
  return sys.amg_mqlq->get(sys.mass_plus_laplacian_q, 0.1, 1);
}

const AmgHierarchy& pressure_laplacian_hierarchy(const StokesSystem& sys) {
  return sys.amg_lq->get(sys.pressure_laplacian, 0.1, 1);
}

void apply_nullspace_projection(const StokesSystem& sys, Vector& p) {
  switch (sys.nullspace) {
    case NullspacePolicy::ProjectMeanZero:
      subtract_mean(p);
      break;
    case NullspacePolicy::Pinned:
      if (!p.empty()) p[0] = 0.0;
      break;
    case NullspacePolicy::OpenBoundary:
      break;
  }
}

Vector lift_velocity_rhs(const StokesSystem& sys, const Vector& rhs) {
  return lift_dirichlet_rhs(sys.velocity_system0, rhs, sys.bc);
}

Vector apply_A_lambda(const StokesSystem& sys, const Vector& x) {
  Vector y = spmv(sys.A, x);
  if (sys.lambda > 0.0) {
    const Vector w = spmv(sys.B, x);
    const Vector z = amg_apply(mass_q_hierarchy(sys), w, AmgMode::threshold(sys.inner_tol)).x;
    const Vector bt = spmv_transpose(sys.B, z);
    axpy(sys.lambda * sys.mu, bt, y);
  }
  return y;
}

LinearOperator a_lambda_operator(const StokesSystem& sys) {
  LinearOperator op;
  op.dim = sys.n_velocity();
  op.symmetric = true;
  op.fixed_linear = sys.lambda == 0.0;
  op.apply_fn = [&sys](const Vector& x, Vector& y) { y = apply_A_lambda(sys, x); };
  return op;
}

LinearOperator velocity_precond_operator(const StokesSystem& sys, VelocityPrecondKind kind) {
  const AmgHierarchy& h = velocity_hierarchy(sys, kind.matrix);
  LinearOperator op;
  op.dim = sys.n_velocity();
  op.symmetric = true;
  op.fixed_linear = kind.mode.is_fixed();
  const AmgMode mode = kind.mode;
  op.apply_fn = [&h, mode](const Vector& x, Vector& y) { y = amg_mode_apply(h, mode, x); };
  return op;
}

KrylovResult solve_velocity(const StokesSystem& sys, const Vector& rhs, VelocityPrecondKind kind,
                            double rel_tol) {
  if (sys.lambda > 0.0) mass_q_hierarchy(sys);
  const LinearOperator pre = velocity_precond_operator(sys, kind);
  const LinearOperator op = a_lambda_operator(sys);
  if (kind.mode.is_fixed()) return cg(op, pre, rhs, rel_tol, sys.max_inner);
  // threshold-mode preconditioning is an inner iterative solve; the flexible
  // GMRES path accepts it where cg may not
  return gmres(op, pre, rhs, rel_tol, sys.gmres_restart, sys.max_inner);
}

Vector apply_schur(const StokesSystem& sys, const Vector& p, double inner_tol, InnerStats* stats) {
  const Vector rhs = spmv_transpose(sys.B, p);
  const KrylovResult inner =
      solve_velocity(sys, rhs, {VelocityMatrix::A3, AmgMode::fixed(2)}, inner_tol);
  if (!inner.report.converged)
    throw std::runtime_error("apply_schur: inner velocity solve did not converge (residual " +
                             std::to_string(inner.report.true_final_residual) + ")");
  if (stats) stats->velocity_iterations += inner.report.iterations;
  Vector y = spmv(sys.B, inner.x);
  apply_nullspace_projection(sys, y);
  return y;
}

KrylovResult solve_BMBt(const StokesSystem& sys, const Vector& rhs, MassInverse mass,
                        double rel_tol, InnerStats* stats) {
  if (mass != MassInverse::Lumped) mass_v_hierarchy(sys);
  mass_plus_laplacian_hierarchy(sys);

  LinearOperator op;
  op.dim = sys.n_pressure();
  op.symmetric = true;
  op.fixed_linear = mass != MassInverse::ConsistentTh;
  op.apply_fn = [&sys, mass](const Vector& x, Vector& y) {
    const Vector w = spmv_transpose(sys.B, x);
    Vector z;
    switch (mass) {
      case MassInverse::Lumped:
        z.resize(w.size());
        for (std::size_t i = 0; i < w.size(); ++i) z[i] = sys.lumped_inv[i] * w[i];
        break;
      case MassInverse::ConsistentTh:
        z = amg_apply(mass_v_hierarchy(sys), w, AmgMode::threshold(sys.inner_tol)).x;
        break;
      case MassInverse::Consistent2Vc:
        amg_fixed_cycles(mass_v_hierarchy(sys), w, 2, z);
        break;
    }
    y = spmv(sys.B, z);
    apply_nullspace_projection(sys, y);
  };

  LinearOperator pre;
  pre.dim = sys.n_pressure();
  pre.symmetric = true;
  pre.fixed_linear = false;
  pre.apply_fn = [&sys](const Vector& r, Vector& z) {
    z = amg_apply(mass_plus_laplacian_hierarchy(sys), r, AmgMode::threshold(sys.inner_tol)).x;
    apply_nullspace_projection(sys, z);
  };

  Vector b = rhs;
  apply_nullspace_projection(sys, b);
  KrylovResult res = gmres(op, pre, b, rel_tol, sys.gmres_restart, 1000);
  if (stats) stats->bmbt_iterations += res.report.iterations;
  return res;
}

Vector schur_precond_mass_term(const StokesSystem& sys, const SchurPrecondKind& kind,
                               const Vector& r) {
  Vector rhs = r;
  apply_nullspace_projection(sys, rhs);
  Vector z = amg_mode_apply(mass_q_hierarchy(sys), kind.mass_mode, rhs);
  scal(sys.mu * (1.0 + sys.lambda), z);
  apply_nullspace_projection(sys, z);
  return z;
}

Vector schur_precond_second_term(const StokesSystem& sys, const SchurPrecondKind& kind,
                                 const Vector& r, InnerStats* stats) {
  Vector rhs = r;
  apply_nullspace_projection(sys, rhs);
  Vector z;
  switch (kind.kind) {
    case SchurKind::ConsistentMass: {
      const MassInverse mass =
          kind.second_mode.is_fixed() ? MassInverse::Consistent2Vc : MassInverse::ConsistentTh;
      KrylovResult res = solve_BMBt(sys, rhs, mass, sys.inner_tol, stats);
      if (!res.report.converged)
        throw std::runtime_error("schur preconditioner: inner mass-divergence solve failed");
      z = std::move(res.x);
      break;
    }
    case SchurKind::LumpedMass: {
      KrylovResult res = solve_BMBt(sys, rhs, MassInverse::Lumped, sys.inner_tol, stats);
      if (!res.report.converged)
        throw std::runtime_error("schur preconditioner: inner lumped-divergence solve failed");
      z = std::move(res.x);
      break;
    }
    case SchurKind::PressureLaplacian: {
      z = amg_mode_apply(pressure_laplacian_hierarchy(sys), kind.second_mode, rhs);
      break;
    }
  }
  scal(1.0 / sys.tau, z);
  apply_nullspace_projection(sys, z);
  return z;
}

Vector apply_schur_precond(const StokesSystem& sys, const SchurPrecondKind& kind, const Vector& r,
                           InnerStats* stats) {
  Vector out = schur_precond_mass_term(sys, kind, r);
  const Vector second = schur_precond_second_term(sys, kind, r, stats);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += second[i];
  return out;
}

Vector constraint_rhs(const StokesSystem& sys) {
  Vector g = spmv(sys.divergence0, sys.boundary_values);
  scal(-1.0, g);
  return g;
}

namespace {

void prewarm_schur(const StokesSystem& sys, const SchurPrecondKind& kind) {
  mass_q_hierarchy(sys);
  switch (kind.kind) {
    case SchurKind::ConsistentMass:
      mass_v_hierarchy(sys);
      mass_plus_laplacian_hierarchy(sys);
      break;
    case SchurKind::LumpedMass:
      mass_plus_laplacian_hierarchy(sys);
      break;
    case SchurKind::PressureLaplacian:
      pressure_laplacian_hierarchy(sys);
      break;
  }
}

bool is_zero(const Vector& v) {
  for (double x : v)
    if (x != 0.0) return false;
  return true;
}

// F_lambda = F + lambda*mu B^T M_Q^{-1} G keeps the augmented block
// consistent with a nonzero constraint rhs.
Vector augmented_rhs(const StokesSystem& sys, const Vector& F, const Vector& G) {
  if (sys.lambda == 0.0 || is_zero(G)) return F;
  const Vector z = amg_apply(mass_q_hierarchy(sys), G, AmgMode::threshold(sys.inner_tol)).x;
  Vector out = F;
  const Vector bt = spmv_transpose(sys.B, z);
  axpy(sys.lambda * sys.mu, bt, out);
  return out;
}

}  // namespace

Vector augmented_velocity_rhs(const StokesSystem& sys, const Vector& lifted) {
  return augmented_rhs(sys, lifted, constraint_rhs(sys));
}

StokesSolution method1_solve(const StokesSystem& sys, const Vector& F,
                             const SchurPrecondKind& schur, double rel_tol) {
  velocity_hierarchy(sys, VelocityMatrix::A3);
  if (sys.lambda > 0.0) mass_q_hierarchy(sys);
  prewarm_schur(sys, schur);

  const auto start = Clock::now();
  StokesSolution sol;
  InnerStats stats;

  const Vector G = constraint_rhs(sys);
  const Vector Flam = augmented_rhs(sys, F, G);

  const KrylovResult first =
      solve_velocity(sys, Flam, {VelocityMatrix::A3, AmgMode::fixed(2)}, sys.inner_tol);
  if (!first.report.converged)
    throw std::runtime_error("method1: initial velocity solve did not converge");
  stats.velocity_iterations += first.report.iterations;

  Vector rhs_p = G;
  const Vector bv = spmv(sys.B, first.x);
  axpy(-1.0, bv, rhs_p);
  apply_nullspace_projection(sys, rhs_p);

  LinearOperator sop;
  sop.dim = sys.n_pressure();
  sop.symmetric = true;
  sop.fixed_linear = false;
  sop.apply_fn = [&sys, &stats](const Vector& p, Vector& y) {
    y = apply_schur(sys, p, sys.inner_tol, &stats);
  };
  LinearOperator spre;
  spre.dim = sys.n_pressure();
  spre.symmetric = true;
  spre.fixed_linear = false;
  spre.apply_fn = [&sys, &schur, &stats](const Vector& r, Vector& z) {
    z = apply_schur_precond(sys, schur, r, &stats);
  };

  KrylovResult outer = gmres(sop, spre, rhs_p, rel_tol, sys.gmres_restart, sys.max_outer);
  sol.pressure = std::move(outer.x);
  sol.outer = outer.report;

  Vector rhs_u = F;
  const Vector btp = spmv_transpose(sys.B, sol.pressure);
  axpy(1.0, btp, rhs_u);
  const KrylovResult back =
      cg(matrix_operator(sys.A),
         velocity_precond_operator(sys, {VelocityMatrix::A3, AmgMode::fixed(2)}), rhs_u,
         sys.inner_tol, sys.max_inner);
  stats.velocity_iterations += back.report.iterations;
  sol.velocity = back.x;

  sol.inner_velocity_iterations = stats.velocity_iterations;
  sol.inner_bmbt_iterations = stats.bmbt_iterations;
  sol.converged = outer.report.converged && back.report.converged;
  sol.wall_seconds = seconds_since(start);
  return sol;
}

StokesSolution method2_solve(const StokesSystem& sys, const Vector& F,
                             const SchurPrecondKind& schur, VelocityPrecondKind vel,
                             double rel_tol) {
  velocity_hierarchy(sys, vel.matrix);
  if (sys.lambda > 0.0) mass_q_hierarchy(sys);
  prewarm_schur(sys, schur);

  const auto start = Clock::now();
  StokesSolution sol;
  InnerStats stats;
  const int nu = sys.n_velocity();
  const int np = sys.n_pressure();

  const Vector G = constraint_rhs(sys);
  const Vector Flam = augmented_rhs(sys, F, G);

  Vector b(static_cast<std::size_t>(nu) + np);
  std::copy(Flam.begin(), Flam.end(), b.begin());
  Vector gp = G;
  apply_nullspace_projection(sys, gp);
  std::copy(gp.begin(), gp.end(), b.begin() + nu);

  LinearOperator op;
  op.dim = nu + np;
  op.symmetric = false;  // coupled block is symmetric indefinite up to sign; treated general
  op.fixed_linear = sys.lambda == 0.0;
  op.apply_fn = [&sys, nu, np](const Vector& x, Vector& y) {
    const Vector xu(x.begin(), x.begin() + nu);
    const Vector xp(x.begin() + nu, x.end());
    Vector yu = apply_A_lambda(sys, xu);
    const Vector btp = spmv_transpose(sys.B, xp);
    axpy(-1.0, btp, yu);
    Vector yp = spmv(sys.B, xu);
    apply_nullspace_projection(sys, yp);
    y.resize(static_cast<std::size_t>(nu) + np);
    std::copy(yu.begin(), yu.end(), y.begin());
    std::copy(yp.begin(), yp.end(), y.begin() + nu);
  };

  const LinearOperator velpre = velocity_precond_operator(sys, vel);
  LinearOperator pre;
  pre.dim = nu + np;
  pre.fixed_linear = false;
  pre.apply_fn = [&sys, &schur, &stats, &velpre, nu, np](const Vector& r, Vector& z) {
    const Vector ru(r.begin(), r.begin() + nu);
    Vector rp(r.begin() + nu, r.end());
    const Vector w = velpre(ru);
    const Vector bw = spmv(sys.B, w);
    axpy(-1.0, bw, rp);
    apply_nullspace_projection(sys, rp);
    Vector q = apply_schur_precond(sys, schur, rp, &stats);
    const Vector btq = spmv_transpose(sys.B, q);
    Vector zu = velpre(btq);
    axpy(1.0, w, zu);
    apply_nullspace_projection(sys, q);
    z.resize(static_cast<std::size_t>(nu) + np);
    std::copy(zu.begin(), zu.end(), z.begin());
    std::copy(q.begin(), q.end(), z.begin() + nu);
  };

  KrylovResult res = gmres(op, pre, b, rel_tol, sys.gmres_restart, sys.max_outer);
  sol.velocity.assign(res.x.begin(), res.x.begin() + nu);
  sol.pressure.assign(res.x.begin() + nu, res.x.end());
  sol.outer = res.report;
  sol.inner_velocity_iterations = stats.velocity_iterations;
  sol.inner_bmbt_iterations = stats.bmbt_iterations;
  sol.converged = res.report.converged;
  sol.wall_seconds = seconds_since(start);
  return sol;
}

ProjectionResult projection_step(const StokesSystem& sys, const Vector& F) {
  velocity_hierarchy(sys, VelocityMatrix::A3);
  pressure_laplacian_hierarchy(sys);
  mass_q_hierarchy(sys);

  const auto start = Clock::now();
  ProjectionResult result;

  const KrylovResult vel =
      cg(matrix_operator(sys.A),
         velocity_precond_operator(sys, {VelocityMatrix::A3, AmgMode::fixed(2)}), F,
         sys.inner_tol, sys.max_inner);
  result.velocity = vel.x;
  result.velocity_report = vel.report;

  const Vector bu = spmv(sys.B, result.velocity);

  Vector rhs_lq = bu;
  scal(1.0 / sys.tau, rhs_lq);
  apply_nullspace_projection(sys, rhs_lq);
  LinearOperator lq_op;
  lq_op.dim = sys.n_pressure();
  lq_op.symmetric = true;
  lq_op.apply_fn = [&sys](const Vector& x, Vector& y) {
    y = spmv(sys.pressure_laplacian, x);
    apply_nullspace_projection(sys, y);
  };
  LinearOperator lq_pre;
  lq_pre.dim = sys.n_pressure();
  lq_pre.symmetric = true;
  lq_pre.apply_fn = [&sys](const Vector& r, Vector& z) {
    amg_fixed_cycles(pressure_laplacian_hierarchy(sys), r, 2, z);
    apply_nullspace_projection(sys, z);
  };
  const KrylovResult lap = cg(lq_op, lq_pre, rhs_lq, sys.inner_tol, sys.max_inner);
  result.pressure = lap.x;
  result.laplacian_report = lap.report;

  LinearOperator mq_pre;
  mq_pre.dim = sys.n_pressure();
  mq_pre.symmetric = true;
  mq_pre.apply_fn = [&sys](const Vector& r, Vector& z) {
    amg_fixed_cycles(mass_q_hierarchy(sys), r, 2, z);
  };
  const KrylovResult mass =
      cg(matrix_operator(sys.mass_pressure), mq_pre, bu, sys.inner_tol, sys.max_inner);
  result.mass_report = mass.report;

  result.converged = vel.report.converged && lap.report.converged && mass.report.converged;
  result.wall_seconds = seconds_since(start);
  return result;
}

}  // namespace stokeslab
