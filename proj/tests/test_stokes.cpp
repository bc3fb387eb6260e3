#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "stokeslab/bench.hpp"
#include "stokeslab/dense.hpp"
#include "stokeslab/stokes.hpp"

using namespace stokeslab;

namespace {

constexpr double kPi = 3.14159265358979323846;

Vector random_vector(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  Vector v(n);
  for (double& x : v) x = val(rng);
  return v;
}

StokesSystem tiny_dirichlet_system(double mu, double lambda, int n = 2, unsigned seed = 1) {
  const Mesh mesh = build_unit_square_mesh(n, 0.15, seed);
  const MixedSpace space = make_mixed_space(mesh, 1);
  StokesOptions opt;
  opt.mu = mu;
  opt.lambda = lambda;
  return make_stokes_system(space, opt);
}

StokesSystem tiny_open_system(double mu, double lambda, int n = 3, unsigned seed = 3) {
  Mesh mesh = build_unit_square_mesh(n, 0.15, seed);
  tag_boundary_side(mesh, 1, kOpenTag);
  const MixedSpace space = make_mixed_space(mesh, 1);
  StokesOptions opt;
  opt.mu = mu;
  opt.lambda = lambda;
  opt.nullspace = NullspacePolicy::OpenBoundary;
  return make_stokes_system(space, opt);
}

// dense augmented velocity block on the constrained full space
DenseMatrix dense_a_lambda(const StokesSystem& sys) {
  DenseMatrix a = densify(sys.A);
  if (sys.lambda > 0.0) {
    const DenseMatrix b = densify(sys.B);
    const DenseMatrix mq_inv = dense_inverse(densify(sys.mass_pressure));
    const DenseMatrix aug = dense_matmul(dense_transpose(b), dense_matmul(mq_inv, b));
    a = dense_add_scaled(1.0, a, sys.lambda * sys.mu, aug);
  }
  return a;
}

DenseMatrix dense_schur(const StokesSystem& sys) {
  const DenseMatrix b = densify(sys.B);
  return dense_matmul(b, dense_matmul(dense_inverse(dense_a_lambda(sys)), dense_transpose(b)));
}

DenseMatrix mean_zero_projector(int n) {
  DenseMatrix p(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) p(i, j) = (i == j ? 1.0 : 0.0) - 1.0 / n;
  return p;
}

}  // namespace

TEST_CASE("augmented operator reduces to the plain matrix at lambda = 0") {
  const StokesSystem sys = tiny_dirichlet_system(1.0, 0.0);
  const Vector x = random_vector(sys.n_velocity(), 5);
  const Vector ya = apply_A_lambda(sys, x);
  const Vector yb = spmv(sys.A, x);
  for (std::size_t i = 0; i < ya.size(); ++i) CHECK(ya[i] == yb[i]);
}

TEST_CASE("augmented operator is symmetric on random probes") {
  const StokesSystem sys = tiny_dirichlet_system(0.7, 2.0);
  const Vector x = random_vector(sys.n_velocity(), 7);
  const Vector y = random_vector(sys.n_velocity(), 9);
  const double xay = dot(x, apply_A_lambda(sys, y));
  const double yax = dot(y, apply_A_lambda(sys, x));
  CHECK(std::abs(xay - yax) <= 1e-9 * std::max(std::abs(xay), 1e-30));
}

TEST_CASE("augmented operator agrees with its dense counterpart") {
  const StokesSystem sys = tiny_dirichlet_system(0.5, 3.0);
  const DenseMatrix a = dense_a_lambda(sys);
  const Vector x = random_vector(sys.n_velocity(), 11);
  const Vector got = apply_A_lambda(sys, x);
  const Vector ref = dense_matvec(a, x);
  const double scale = norm2(ref);
  for (std::size_t i = 0; i < got.size(); ++i)
    CHECK(std::abs(got[i] - ref[i]) <= 1e-8 * scale);
}

TEST_CASE("velocity solve converges and matches the dense solution") {
  const StokesSystem sys = tiny_dirichlet_system(1.0, 1.0, 3, 5);
  const Vector b = random_vector(sys.n_velocity(), 13);
  for (AmgMode mode : {AmgMode::fixed(2), AmgMode::threshold(1e-10)}) {
    const KrylovResult res = solve_velocity(sys, b, {VelocityMatrix::A3, mode}, 1e-11);
    CHECK(res.report.converged);
    CHECK(res.report.true_final_residual <= 1e-11);
    const Vector ref = dense_solve(dense_a_lambda(sys), b);
    double diff = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i)
      diff = std::max(diff, std::abs(res.x[i] - ref[i]));
    CHECK(diff <= 1e-8 * std::max(1.0, norm2(ref)));
  }
}

TEST_CASE("schur operator kills constant pressures under full Dirichlet data") {
  const StokesSystem sys = tiny_dirichlet_system(1.0, 1.0);
  const Vector ones(sys.n_pressure(), 1.0);
  const Vector bt = spmv_transpose(sys.B, ones);
  CHECK(norm2(bt) <= 1e-13 * max_abs(sys.B));
  const Vector y = apply_schur(sys, ones, 1e-10);
  CHECK(norm2(y) <= 1e-12);
}

TEST_CASE("schur operator is symmetric on mean-zero probes") {
  const StokesSystem sys = tiny_dirichlet_system(1.0, 1.0, 3, 7);
  Vector x = random_vector(sys.n_pressure(), 15);
  Vector y = random_vector(sys.n_pressure(), 17);
  subtract_mean(x);
  subtract_mean(y);
  const double xsy = dot(x, apply_schur(sys, y, 1e-12));
  const double ysx = dot(y, apply_schur(sys, x, 1e-12));
  CHECK(std::abs(xsy - ysx) <= 1e-8 * std::max(std::abs(xsy), 1e-30));
}

TEST_CASE("schur operator agrees with the dense oracle on an open-boundary mesh") {
  const StokesSystem sys = tiny_open_system(1.0, 1.0);
  const DenseMatrix s = dense_schur(sys);
  const Vector p = random_vector(sys.n_pressure(), 19);
  const Vector got = apply_schur(sys, p, 1e-12);
  const Vector ref = dense_matvec(s, p);
  double diff = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) diff = std::max(diff, std::abs(got[i] - ref[i]));
  CHECK(diff <= 1e-7 * std::max(1.0, norm2(ref)));
}

TEST_CASE("divergence-mass solver recovers the pressure samples") {
  const Mesh mesh = refine(build_unit_square_mesh(4, 0.2, 11));
  const MixedSpace space = make_mixed_space(mesh, 1);
  StokesOptions opt;
  const StokesSystem sys = make_stokes_system(space, opt);
  const ScalarField field = [](double x, double y) { return std::sin(4.0 * kPi * (x - y)); };
  const Vector X = interpolate(field, space.pressure_dofs);

  long lumped_iters = 0, consistent_iters = 0;
  for (MassInverse mass : {MassInverse::Lumped, MassInverse::ConsistentTh}) {
    Vector w = spmv_transpose(sys.B, X);
    Vector z(w.size());
    if (mass == MassInverse::Lumped) {
      for (std::size_t i = 0; i < w.size(); ++i) z[i] = sys.lumped_inv[i] * w[i];
    } else {
      z = amg_apply(mass_v_hierarchy(sys), w, AmgMode::threshold(1e-10)).x;
    }
    const Vector Y = spmv(sys.B, z);
    const KrylovResult res = solve_BMBt(sys, Y, mass, 1e-10);
    CHECK(res.report.converged);
    Vector diff = res.x;
    axpy(-1.0, X, diff);
    subtract_mean(diff);
    Vector xz = X;
    subtract_mean(xz);
    CHECK(norm1(diff) / norm1(xz) <= 10.0 * 1e-10);
    (mass == MassInverse::Lumped ? lumped_iters : consistent_iters) = res.report.iterations;
  }
  CHECK(lumped_iters >= consistent_iters);
  CHECK(lumped_iters <= 25);
}

TEST_CASE("schur preconditioner is bit-exactly the sum of its two terms") {
  const StokesSystem sys = tiny_dirichlet_system(0.01, 1.0, 3, 13);
  const SchurPrecondKind kind{SchurKind::LumpedMass, AmgMode::fixed(2), AmgMode::fixed(2)};
  Vector r = random_vector(sys.n_pressure(), 21);
  const Vector mass = schur_precond_mass_term(sys, kind, r);
  const Vector second = schur_precond_second_term(sys, kind, r);
  const Vector sum = apply_schur_precond(sys, kind, r);
  for (std::size_t i = 0; i < sum.size(); ++i) CHECK(sum[i] == mass[i] + second[i]);
}

TEST_CASE("schur preconditioner shifts linearly in lambda") {
  const double mu = 0.3;
  const StokesSystem sys0 = tiny_dirichlet_system(mu, 0.0, 3, 19);
  const StokesSystem sys3 = tiny_dirichlet_system(mu, 3.0, 3, 19);
  const SchurPrecondKind kind{SchurKind::LumpedMass, AmgMode::fixed(2), AmgMode::fixed(2)};
  Vector r = random_vector(sys0.n_pressure(), 23);
  const Vector out0 = apply_schur_precond(sys0, kind, r);
  const Vector out3 = apply_schur_precond(sys3, kind, r);
  // the second terms coincide bit-for-bit, so the difference is the scaled
  // mass solve
  Vector rp = r;
  apply_nullspace_projection(sys0, rp);
  Vector mass;
  amg_fixed_cycles(mass_q_hierarchy(sys0), rp, 2, mass);
  apply_nullspace_projection(sys0, mass);
  double scale = 0.0;
  for (double v : out3) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double expected = 3.0 * mu * mass[i];
    CHECK(std::abs((out3[i] - out0[i]) - expected) <= 1e-13 * std::max(scale, 1.0));
  }
}

TEST_CASE("augmented Schur inverse identity on the mean-zero subspace (dense pinv)") {
  const double mu = 0.5, lambda = 2.0;
  const StokesSystem sys0 = tiny_dirichlet_system(mu, 0.0);
  const StokesSystem sysL = tiny_dirichlet_system(mu, lambda);
  const int np = sys0.n_pressure();
  const DenseMatrix s0 = dense_schur(sys0);
  const DenseMatrix sl = dense_schur(sysL);
  const DenseMatrix p = mean_zero_projector(np);
  const DenseMatrix sl_pinv = dense_pinv(sl);
  const DenseMatrix s0_pinv = dense_pinv(s0);
  const DenseMatrix mq_inv = dense_inverse(densify(sys0.mass_pressure));
  DenseMatrix inner = dense_add_scaled(lambda * mu, mq_inv, 1.0, s0_pinv);
  const DenseMatrix rhs = dense_matmul(p, dense_matmul(inner, p));
  const DenseMatrix diff = dense_add_scaled(1.0, sl_pinv, -1.0, rhs);
  CHECK(dense_frobenius(diff) <= 1e-7 * dense_frobenius(sl_pinv));
}

TEST_CASE("weighted spectrum of the augmented Schur complement sits in the predicted band") {
  const double mu = 1.0, lambda = 2.0;
  const StokesSystem sys0 = tiny_open_system(mu, 0.0);
  const StokesSystem sysL = tiny_open_system(mu, lambda);
  const double rho = lambda * mu;
  const DenseMatrix mq = densify(sys0.mass_pressure);
  const Vector base = generalized_eigs_sym(dense_schur(sys0), mq);
  const double s_flat = base.front(), s_sharp = base.back();
  const Vector shifted = generalized_eigs_sym(dense_schur(sysL), mq);
  const double lower = 1.0 / (rho + 1.0 / s_flat);
  const double upper = 1.0 / (rho + 1.0 / s_sharp);
  for (double t : shifted) {
    CHECK(t >= lower - 1e-8 * std::max(1.0, lower));
    CHECK(t <= upper + 1e-8 * std::max(1.0, upper));
  }
}

TEST_CASE("method1 solves the manufactured problem and satisfies its residual identity") {
  const Mesh mesh = refine(build_unit_square_mesh(4, 0.15, 17));
  const MixedSpace space = make_mixed_space(mesh, 1);
  const double tau = compute_tau(space.velocity_dofs.n_nodes);
  const ManufacturedCase mc =
      make_manufactured_case(ManufacturedKind::DivFree, 2.0 * kPi, 1.0, 0.0, tau, true);
  StokesOptions opt;
  opt.mu = 1.0;
  opt.lambda = 0.0;
  opt.tau = tau;
  opt.dirichlet_values = mc.velocity;
  const StokesSystem sys = make_stokes_system(space, opt);
  Vector F = assemble_load(space, mc.forcing);
  F = lift_velocity_rhs(sys, F);
  const SchurPrecondKind schur{SchurKind::LumpedMass, AmgMode::fixed(2), AmgMode::fixed(2)};
  const StokesSolution sol = method1_solve(sys, F, schur, 1e-10);
  REQUIRE(sol.converged);

  const double verr = relative_l2_error(space.mesh, space.velocity_dofs, sol.velocity,
                                        mc.velocity, space.quadrature_degree());
  CHECK(verr <= 0.05);
  const double perr = relative_l2_error(space.mesh, space.pressure_dofs, sol.pressure,
                                        mc.pressure, space.quadrature_degree(), true);
  CHECK(perr <= 0.2);

  // discrete incompressibility: B U = G up to the outer tolerance
  Vector bu = spmv(sys.B, sol.velocity);
  const Vector g = spmv(sys.divergence0, sys.boundary_values);
  axpy(1.0, g, bu);
  CHECK(norm2(bu) / norm2(F) <= 10.0 * 1e-10);

  CHECK(std::abs(mean(sol.pressure)) <= 1e-13 * std::max(norm2(sol.pressure), 1e-30));

  // recompute the outer residual with a fresh tighter inner solve
  const KrylovResult first =
      solve_velocity(sys, F, {VelocityMatrix::A3, AmgMode::fixed(2)}, 1e-12);
  Vector rhs_p = g;
  scal(-1.0, rhs_p);
  const Vector bv = spmv(sys.B, first.x);
  axpy(-1.0, bv, rhs_p);
  subtract_mean(rhs_p);
  Vector sp = apply_schur(sys, sol.pressure, 1e-12);
  axpy(-1.0, rhs_p, sp);
  const double recomputed = norm2(sp) / norm2(rhs_p);
  CHECK(recomputed <= 10.0 * std::max(sol.outer.true_final_residual, 1e-10));
}

TEST_CASE("method2 agrees with method1 on the same system") {
  const Mesh mesh = refine(build_unit_square_mesh(4, 0.15, 23));
  const MixedSpace space = make_mixed_space(mesh, 1);
  const double tau = compute_tau(space.velocity_dofs.n_nodes);
  const ManufacturedCase mc =
      make_manufactured_case(ManufacturedKind::DivFree, 2.0 * kPi, 1.0, 1.0, tau, true);
  StokesOptions opt;
  opt.mu = 1.0;
  opt.lambda = 1.0;
  opt.tau = tau;
  opt.dirichlet_values = mc.velocity;
  const StokesSystem sys = make_stokes_system(space, opt);
  Vector F = assemble_load(space, mc.forcing);
  F = lift_velocity_rhs(sys, F);
  const SchurPrecondKind schur{SchurKind::LumpedMass, AmgMode::fixed(2), AmgMode::fixed(2)};

  const StokesSolution m1 = method1_solve(sys, F, schur, 1e-10);
  const StokesSolution m2 =
      method2_solve(sys, F, schur, {VelocityMatrix::A3, AmgMode::fixed(2)}, 1e-10);
  REQUIRE(m1.converged);
  REQUIRE(m2.converged);

  Vector du = m1.velocity;
  axpy(-1.0, m2.velocity, du);
  CHECK(norm2(du) / norm2(m1.velocity) <= 1e-7);

  Vector dp = m1.pressure;
  axpy(-1.0, m2.pressure, dp);
  subtract_mean(dp);
  CHECK(norm2(dp) / norm2(m1.pressure) <= 1e-6);

  Vector bu = spmv(sys.B, m2.velocity);
  const Vector g = spmv(sys.divergence0, sys.boundary_values);
  axpy(1.0, g, bu);
  CHECK(norm2(bu) / norm2(F) <= 10.0 * 1e-10);
}

TEST_CASE("projection baseline runs its three solves at threshold") {
  const Mesh mesh = refine(build_unit_square_mesh(4, 0.15, 29));
  const MixedSpace space = make_mixed_space(mesh, 1);
  const double tau = compute_tau(space.velocity_dofs.n_nodes);
  const ManufacturedCase mc =
      make_manufactured_case(ManufacturedKind::DivFree, 2.0 * kPi, 1.0, 0.0, tau, true);
  StokesOptions opt;
  opt.tau = tau;
  opt.dirichlet_values = mc.velocity;
  const StokesSystem sys = make_stokes_system(space, opt);
  Vector F = assemble_load(space, mc.forcing);
  F = lift_velocity_rhs(sys, F);
  const ProjectionResult pr = projection_step(sys, F);
  REQUIRE(pr.converged);
  CHECK(pr.velocity_report.true_final_residual <= 1e-10);
  CHECK(pr.laplacian_report.true_final_residual <= 1e-10);
  CHECK(pr.mass_report.true_final_residual <= 1e-10);

  const SchurPrecondKind schur{SchurKind::LumpedMass, AmgMode::fixed(2), AmgMode::fixed(2)};
  const StokesSolution m1 = method1_solve(sys, F, schur, 1e-10);
  REQUIRE(m1.converged);
  CHECK(pr.wall_seconds < m1.wall_seconds);
}

TEST_CASE("pinned nullspace policy keeps the solve well posed") {
  const Mesh mesh = build_unit_square_mesh(4, 0.15, 31);
  const MixedSpace space = make_mixed_space(mesh, 1);
  StokesOptions opt;
  opt.nullspace = NullspacePolicy::Pinned;
  const StokesSystem sys = make_stokes_system(space, opt);
  Vector rhs = random_vector(sys.n_pressure(), 33);
  subtract_mean(rhs);
  rhs[0] = 0.0;
  const KrylovResult res = solve_BMBt(sys, rhs, MassInverse::Lumped, 1e-10);
  CHECK(res.report.converged);
  CHECK(res.x[0] == 0.0);
}
