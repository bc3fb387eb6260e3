#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "stokeslab/bench.hpp"
#include "stokeslab/dense.hpp"
#include "stokeslab/fem.hpp"

using namespace stokeslab;

namespace {

constexpr double kPi = 3.14159265358979323846;

Mesh single_right_triangle() {
  Mesh mesh;
  mesh.vertices = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};
  mesh.triangles = {{0, 1, 2}};
  mesh.boundary_edges = {{0, 1, 0}, {1, 2, 0}, {2, 0, 0}};
  return mesh;
}

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

// exact \int_T x^a y^b over the reference triangle
double monomial_integral(int a, int b) {
  return factorial(a) * factorial(b) / factorial(a + b + 2);
}

// oracle quadrature: recursive uniform subdivision + the degree-8 rule
double integrate_subdivided(const std::array<std::array<double, 2>, 3>& tri,
                            const std::function<double(double, double)>& f, int depth) {
  if (depth == 0) {
    const QuadRule& rule = triangle_rule(8);
    const double det = (tri[1][0] - tri[0][0]) * (tri[2][1] - tri[0][1]) -
                       (tri[2][0] - tri[0][0]) * (tri[1][1] - tri[0][1]);
    double s = 0.0;
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const double x = tri[0][0] + (tri[1][0] - tri[0][0]) * rule.points[q][0] +
                       (tri[2][0] - tri[0][0]) * rule.points[q][1];
      const double y = tri[0][1] + (tri[1][1] - tri[0][1]) * rule.points[q][0] +
                       (tri[2][1] - tri[0][1]) * rule.points[q][1];
      s += rule.weights[q] * f(x, y);
    }
    return s * std::abs(det);
  }
  auto mid = [](const std::array<double, 2>& a, const std::array<double, 2>& b) {
    return std::array<double, 2>{0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])};
  };
  const auto m01 = mid(tri[0], tri[1]), m12 = mid(tri[1], tri[2]), m02 = mid(tri[0], tri[2]);
  double s = 0.0;
  s += integrate_subdivided({tri[0], m01, m02}, f, depth - 1);
  s += integrate_subdivided({m01, tri[1], m12}, f, depth - 1);
  s += integrate_subdivided({m02, m12, tri[2]}, f, depth - 1);
  s += integrate_subdivided({m01, m12, m02}, f, depth - 1);
  return s;
}

DenseMatrix extract_dense(const SparseMatrix& m, const std::vector<int>& rows,
                          const std::vector<int>& cols) {
  const DenseMatrix full = densify(m);
  DenseMatrix out(static_cast<int>(rows.size()), static_cast<int>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = full(rows[i], cols[j]);
  return out;
}

std::vector<int> free_velocity_dofs(const MixedSpace& space, const BoundaryCondition& bc) {
  std::set<int> constrained(bc.constrained_dofs.begin(), bc.constrained_dofs.end());
  std::vector<int> free;
  for (int d = 0; d < space.n_velocity_dofs(); ++d)
    if (!constrained.count(d)) free.push_back(d);
  return free;
}

}  // namespace

TEST_CASE("triangle rules integrate monomials exactly up to their degree") {
  for (int deg : {2, 4, 6, 8}) {
    const QuadRule& rule = triangle_rule(deg);
    for (int a = 0; a <= deg; ++a)
      for (int b = 0; a + b <= deg; ++b) {
        double s = 0.0;
        for (std::size_t q = 0; q < rule.points.size(); ++q)
          s += rule.weights[q] * std::pow(rule.points[q][0], a) * std::pow(rule.points[q][1], b);
        CHECK(s == doctest::Approx(monomial_integral(a, b)).epsilon(1e-13));
      }
  }
}

TEST_CASE("pressure mass matrix on a single unit right triangle") {
  const MixedSpace space = make_mixed_space(single_right_triangle(), 1);
  const SparseMatrix mq = assemble(MatrixKind::MassPressure, space);
  const double expected[3][3] = {{2, 1, 1}, {1, 2, 1}, {1, 1, 2}};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(mq.coeff(i, j) == doctest::Approx(expected[i][j] / 24.0).epsilon(1e-13));
}

TEST_CASE("pressure Laplacian on a single unit right triangle") {
  const MixedSpace space = make_mixed_space(single_right_triangle(), 1);
  const SparseMatrix lq = assemble(MatrixKind::PressureLaplacian, space);
  const double expected[3][3] = {{2, -1, -1}, {-1, 1, 0}, {-1, 0, 1}};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(lq.coeff(i, j) == doctest::Approx(expected[i][j] / 2.0).epsilon(1e-13));
}

TEST_CASE("divergence of a constant velocity field vanishes") {
  const Mesh mesh = build_unit_square_mesh(3, 0.2, 2);
  const MixedSpace space = make_mixed_space(mesh, 1);
  const SparseMatrix b = assemble(MatrixKind::Divergence, space);
  const Vector c = interpolate(
      VectorField([](double, double) { return std::array<double, 2>{1.3, -0.7}; }),
      space.velocity_dofs);
  const Vector bc = spmv(b, c);
  const double scale = max_abs(b);
  for (double v : bc) CHECK(std::abs(v) <= 1e-13 * scale);
}

TEST_CASE("grad-div matrix annihilates constant fields") {
  const Mesh mesh = build_unit_square_mesh(3, 0.15, 4);
  const MixedSpace space = make_mixed_space(mesh, 1);
  const SparseMatrix d = assemble(MatrixKind::GradDiv, space);
  const Vector c = interpolate(
      VectorField([](double, double) { return std::array<double, 2>{0.4, 2.1}; }),
      space.velocity_dofs);
  const Vector dc = spmv(d, c);
  const double scale = max_abs(d);
  for (double v : dc) CHECK(std::abs(v) <= 1e-13 * scale);
}

TEST_CASE("symmetric matrix kinds are symmetric and mass matrices are SPD") {
  const Mesh mesh = build_unit_square_mesh(3, 0.2, 6);
  for (int pdeg : {1, 2}) {
    const MixedSpace space = make_mixed_space(mesh, pdeg);
    for (MatrixKind kind :
         {MatrixKind::MassVelocity, MatrixKind::MassPressure, MatrixKind::StrainStiffness,
          MatrixKind::VectorLaplacian, MatrixKind::GradDiv, MatrixKind::PressureLaplacian}) {
      const SparseMatrix m = assemble(kind, space);
      CHECK(max_asymmetry(m) <= 1e-13 * max_abs(m));
    }
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> val(-1.0, 1.0);
    const SparseMatrix mv = assemble(MatrixKind::MassVelocity, space);
    const SparseMatrix mq = assemble(MatrixKind::MassPressure, space);
    for (int trial = 0; trial < 100; ++trial) {
      Vector xv(mv.n_rows), xq(mq.n_rows);
      for (double& v : xv) v = val(rng);
      for (double& v : xq) v = val(rng);
      CHECK(dot(xv, spmv(mv, xv)) > 0.0);
      CHECK(dot(xq, spmv(mq, xq)) > 0.0);
    }
  }
}

TEST_CASE("velocity system: mu = 0 limit reduces to scaled mass") {
  const Mesh mesh = build_unit_square_mesh(2, 0.0, 0);
  const MixedSpace space = make_mixed_space(mesh, 1);
  const SparseMatrix a = assemble_velocity_system(space, 0.25, 0.0);
  const SparseMatrix mv = assemble(MatrixKind::MassVelocity, space);
  const SparseMatrix diff = add_scaled(1.0, a, -4.0, mv);
  CHECK(max_abs(diff) <= 1e-14 * max_abs(a));
  CHECK_THROWS_AS(assemble_velocity_system(space, -1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(assemble_velocity_system(space, 0.5, -1.0), std::invalid_argument);
}

TEST_CASE("strain form equals Laplacian plus grad-div on interior rows") {
  Mesh mesh = build_unit_square_mesh(3, 0.2, 8);
  for (int level = 0; level < 2; ++level) {
    if (level > 0) mesh = refine(mesh);
    const MixedSpace space = make_mixed_space(mesh, 1);
    const SparseMatrix ev = assemble(MatrixKind::StrainStiffness, space);
    const SparseMatrix lv = assemble(MatrixKind::VectorLaplacian, space);
    const SparseMatrix d = assemble(MatrixKind::GradDiv, space);
    const SparseMatrix diff = add_scaled(1.0, ev, -1.0, add_scaled(1.0, lv, 1.0, d));
    std::set<int> bdry(space.velocity_dofs.boundary_nodes.begin(),
                       space.velocity_dofs.boundary_nodes.end());
    const double scale = max_abs(ev);
    double worst = 0.0;
    for (int i = 0; i < diff.n_rows; ++i) {
      if (bdry.count(i / 2)) continue;  // rows whose basis vanishes on the boundary
      for (int k = diff.row_offsets[i]; k < diff.row_offsets[i + 1]; ++k)
        worst = std::max(worst, std::abs(diff.values[k]));
    }
    CHECK(worst <= 1e-12 * scale);
  }
}

TEST_CASE("velocity system is SPD after elimination (dense eigenvalues)") {
  const Mesh mesh = build_unit_square_mesh(2, 0.1, 1);
  const MixedSpace space = make_mixed_space(mesh, 1);
  SparseMatrix a = assemble_velocity_system(space, 0.3, 1.0);
  const BoundaryCondition bc = make_velocity_dirichlet(space, nullptr);
  a = eliminate_dirichlet(a, bc);
  const Vector eig = dense_eigs_sym(densify(a));
  CHECK(eig.front() > 0.0);
}

TEST_CASE("lumped mass: degree-1 entries equal row sums") {
  const Mesh mesh = build_unit_square_mesh(3, 0.1, 5);
  MixedSpace space = make_mixed_space(mesh, 1);
  space.velocity_degree = 1;  // exercise the |phi| = phi case directly
  space.velocity_dofs = lagrange_dof_layout(mesh, 1);
  const SparseMatrix lumped = lump_velocity_mass(space);
  const SparseMatrix mv = assemble(MatrixKind::MassVelocity, space);
  for (int i = 0; i < mv.n_rows; ++i) {
    double row_sum = 0.0;
    for (int k = mv.row_offsets[i]; k < mv.row_offsets[i + 1]; ++k) row_sum += mv.values[k];
    CHECK(lumped.coeff(i, i) == doctest::Approx(row_sum).epsilon(1e-12));
  }
}

TEST_CASE("lumped mass: degree-2 vertex integral vanishes but |.| entry stays positive") {
  const Mesh mesh = single_right_triangle();
  const MixedSpace space = make_mixed_space(mesh, 1);  // P2 velocity
  const SparseMatrix mv = assemble(MatrixKind::MassVelocity, space);
  double plain = 0.0;
  for (int k = mv.row_offsets[0]; k < mv.row_offsets[1]; ++k) plain += mv.values[k];
  CHECK(std::abs(plain) <= 1e-14);
  const ReferenceBasis& basis = lagrange_reference_basis(2);
  const double oracle = integrate_subdivided(
      {{{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}}},
      [&](double x, double y) {
        double vals[6];
        basis.eval(x, y, vals);
        return std::abs(vals[0]);
      },
      5);
  CHECK(oracle > 0.0);
  const SparseMatrix lumped = lump_velocity_mass(space);
  CHECK(lumped.coeff(0, 0) > 0.0);
  // assembly-rule quadrature of a kinked integrand is approximate; the oracle
  // pins the magnitude
  CHECK(lumped.coeff(0, 0) == doctest::Approx(oracle).epsilon(0.2));
}

TEST_CASE("lumped mass trace is at least twice the domain area") {
  const Mesh mesh = build_unit_square_mesh(3, 0.2, 12);
  for (int pdeg : {1, 2}) {
    const MixedSpace space = make_mixed_space(mesh, pdeg);
    const SparseMatrix lumped = lump_velocity_mass(space);
    double trace = 0.0;
    for (int i = 0; i < lumped.n_rows; ++i) {
      CHECK(lumped.coeff(i, i) > 0.0);
      trace += lumped.coeff(i, i);
    }
    CHECK(trace >= 2.0 - 1e-12);
  }
}

TEST_CASE("load assembly: zero field and partition of unity") {
  const Mesh mesh = build_unit_square_mesh(3, 0.2, 3);
  const MixedSpace space = make_mixed_space(mesh, 1);
  const Vector zero = assemble_load(space, [](double, double) {
    return std::array<double, 2>{0.0, 0.0};
  });
  for (double v : zero) CHECK(v == 0.0);

  const Vector fx = assemble_load(space, [](double, double) {
    return std::array<double, 2>{1.0, 0.0};
  });
  double sum_x = 0.0, sum_y = 0.0;
  for (std::size_t i = 0; i < fx.size(); i += 2) {
    sum_x += fx[i];
    sum_y += fx[i + 1];
  }
  CHECK(sum_x == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(sum_y) <= 1e-13);
}

TEST_CASE("load assembly matches an independent fine-quadrature oracle") {
  // resolved wavenumber so the assembly rule itself is accurate to 1e-10
  Mesh mesh = build_unit_square_mesh(4, 0.1, 17);
  mesh = refine(refine(mesh));  // n = 16
  const MixedSpace space = make_mixed_space(mesh, 1);
  const double tau = compute_tau(space.velocity_dofs.n_nodes);
  const ManufacturedCase mc =
      make_manufactured_case(ManufacturedKind::DivFree, 0.5 * kPi, 1.0, 1.0, tau, false);
  const Vector load = assemble_load(space, mc.forcing);

  const ReferenceBasis& basis = lagrange_reference_basis(2);
  const DofMap& dofs = space.velocity_dofs;
  Vector oracle(load.size(), 0.0);
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const std::array<std::array<double, 2>, 3> corners = {
        mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]};
    const double det = (corners[1][0] - corners[0][0]) * (corners[2][1] - corners[0][1]) -
                       (corners[2][0] - corners[0][0]) * (corners[1][1] - corners[0][1]);
    const int* cell = dofs.cell_nodes(static_cast<int>(t));
    for (int j = 0; j < 6; ++j) {
      for (int comp = 0; comp < 2; ++comp) {
        const double integral = integrate_subdivided(
            {{{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}}},
            [&](double xr, double yr) {
              double vals[6];
              basis.eval(xr, yr, vals);
              const double x = corners[0][0] + (corners[1][0] - corners[0][0]) * xr +
                               (corners[2][0] - corners[0][0]) * yr;
              const double y = corners[0][1] + (corners[1][1] - corners[0][1]) * xr +
                               (corners[2][1] - corners[0][1]) * yr;
              return mc.forcing(x, y)[comp] * vals[j];
            },
            2);
        oracle[2 * cell[j] + comp] += integral * std::abs(det);
      }
    }
  }
  double diff = 0.0, base = 0.0;
  for (std::size_t i = 0; i < load.size(); ++i) {
    diff += (load[i] - oracle[i]) * (load[i] - oracle[i]);
    base += oracle[i] * oracle[i];
  }
  CHECK(std::sqrt(diff / base) <= 1e-10);
}

TEST_CASE("dirichlet elimination contract") {
  const Mesh mesh = build_unit_square_mesh(3, 0.15, 21);
  const MixedSpace space = make_mixed_space(mesh, 1);
  SparseMatrix a = assemble_velocity_system(space, 0.2, 1.0);

  SUBCASE("homogeneous data with zero rhs gives the zero solution") {
    const BoundaryCondition bc = make_velocity_dirichlet(space, nullptr);
    Vector rhs(space.n_velocity_dofs(), 0.0);
    apply_dirichlet(a, rhs, bc);
    const Vector x = dense_solve(densify(a), rhs);
    for (double v : x) CHECK(std::abs(v) <= 1e-14);
  }

  SUBCASE("prescribed values are reproduced exactly and symmetry is kept") {
    const VectorField g = [](double x, double y) {
      return std::array<double, 2>{x + 2.0 * y, x * y};
    };
    const BoundaryCondition bc = make_velocity_dirichlet(space, g);
    Vector rhs(space.n_velocity_dofs(), 0.0);
    apply_dirichlet(a, rhs, bc);
    CHECK(max_asymmetry(a) <= 1e-13 * max_abs(a));
    const Vector x = dense_solve(densify(a), rhs);
    for (std::size_t k = 0; k < bc.constrained_dofs.size(); ++k)
      CHECK(x[bc.constrained_dofs[k]] == bc.values[k]);
  }
}

TEST_CASE("interpolation reproduces polynomials up to the space degree") {
  const Mesh mesh = build_unit_square_mesh(3, 0.2, 15);
  const MixedSpace space = make_mixed_space(mesh, 1);
  const VectorField poly = [](double x, double y) {
    return std::array<double, 2>{1.0 + x + y * y, x * x - 2.0 * x * y};
  };
  const Vector u = interpolate(poly, space.velocity_dofs);
  CHECK(relative_l2_error(mesh, space.velocity_dofs, u, poly, space.quadrature_degree()) <= 1e-12);

  const ScalarField linear = [](double x, double y) { return 2.0 * x - y + 0.5; };
  const Vector p = interpolate(linear, space.pressure_dofs);
  CHECK(relative_l2_error(mesh, space.pressure_dofs, p, linear, space.quadrature_degree()) <=
        1e-12);
}

TEST_CASE("relative error of the zero vector against a nonzero field is one") {
  const Mesh mesh = build_unit_square_mesh(2, 0.0, 0);
  const MixedSpace space = make_mixed_space(mesh, 1);
  const Vector zero(space.pressure_dofs.n_nodes, 0.0);
  const ScalarField f = [](double x, double) { return 1.0 + x; };
  CHECK(relative_l2_error(mesh, space.pressure_dofs, zero, f, 6) == doctest::Approx(1.0));
  const Vector zv(space.n_velocity_dofs(), 0.0);
  CHECK_THROWS_AS(relative_l2_error(mesh, space.velocity_dofs, zv,
                                    VectorField([](double, double) {
                                      return std::array<double, 2>{0.0, 0.0};
                                    }),
                                    6),
                  std::invalid_argument);
}

TEST_CASE("interpolant error decays at third order for degree-2 elements") {
  Mesh mesh = build_unit_square_mesh(4, 0.1, 19);
  const ManufacturedCase mc =
      make_manufactured_case(ManufacturedKind::DivFree, 2.0 * kPi, 1.0, 0.0, 1.0, false);
  std::vector<double> errors;
  for (int level = 0; level < 3; ++level) {
    if (level > 0) mesh = refine(mesh);
    const MixedSpace space = make_mixed_space(mesh, 1);
    const Vector u = interpolate(mc.velocity, space.velocity_dofs);
    errors.push_back(
        relative_l2_error(mesh, space.velocity_dofs, u, mc.velocity, space.quadrature_degree()));
  }
  for (std::size_t l = 0; l + 1 < errors.size(); ++l) {
    const double ratio = errors[l] / errors[l + 1];
    CHECK(ratio >= 8.0 * 0.7);
    CHECK(ratio <= 8.0 * 1.3);
  }
}

TEST_CASE("discrete divergence of the divergence-free interpolant decays at order >= 2") {
  Mesh mesh = build_unit_square_mesh(4, 0.1, 23);
  const ManufacturedCase mc =
      make_manufactured_case(ManufacturedKind::DivFree, 2.0 * kPi, 1.0, 0.0, 1.0, false);
  std::vector<double> ratios;
  for (int level = 0; level < 3; ++level) {
    if (level > 0) mesh = refine(mesh);
    const MixedSpace space = make_mixed_space(mesh, 1);
    const SparseMatrix b = assemble(MatrixKind::Divergence, space);
    const Vector u = interpolate(mc.velocity, space.velocity_dofs);
    const Vector bu = spmv(b, u);
    double bnorm = 0.0;
    for (double v : b.values) bnorm += v * v;
    ratios.push_back(norm2(bu) / (std::sqrt(bnorm) * norm2(u)));
  }
  for (std::size_t l = 0; l + 1 < ratios.size(); ++l)
    CHECK(std::log2(ratios[l] / ratios[l + 1]) >= 2.0 - 0.3);
}

TEST_CASE("spectrum of the pressure Schur complement sits inside the predicted interval") {
  Mesh mesh = build_unit_square_mesh(3, 0.15, 3);
  tag_boundary_side(mesh, 1, kOpenTag);
  const MixedSpace space = make_mixed_space(mesh, 1);
  const double tau = compute_tau(space.velocity_dofs.n_nodes);
  const double mu = 1.0;
  const SparseMatrix a_sp = assemble_velocity_system(space, tau, mu);
  const SparseMatrix b_sp = assemble(MatrixKind::Divergence, space);
  const SparseMatrix mv = assemble(MatrixKind::MassVelocity, space);
  const SparseMatrix lv = assemble(MatrixKind::VectorLaplacian, space);
  const SparseMatrix mq = assemble(MatrixKind::MassPressure, space);
  const BoundaryCondition bc = make_velocity_dirichlet(space, nullptr, kDirichletTag);

  const std::vector<int> free = free_velocity_dofs(space, bc);
  std::vector<int> prows(space.n_pressure_dofs());
  for (int i = 0; i < space.n_pressure_dofs(); ++i) prows[i] = i;

  const DenseMatrix A = extract_dense(a_sp, free, free);
  const DenseMatrix X = extract_dense(add_scaled(1.0, mv, 1.0, lv), free, free);
  const DenseMatrix B = extract_dense(b_sp, prows, free);
  const DenseMatrix MQ = densify(mq);

  const Vector mq_eigs = dense_eigs_sym(MQ);
  const double mu_min = mq_eigs.front(), mu_max = mq_eigs.back();

  const Vector a_pencil = generalized_eigs_sym(A, X);
  const double alpha_h = a_pencil.front(), norm_a = a_pencil.back();

  const DenseMatrix G = dense_matmul(B, dense_matmul(dense_inverse(X), dense_transpose(B)));
  const Vector b_pencil = generalized_eigs_sym(G, MQ);
  const double beta2 = b_pencil.front(), norm_b2 = b_pencil.back();
  REQUIRE(beta2 > 0.0);  // open boundary keeps the divergence full-rank

  const DenseMatrix S = dense_matmul(B, dense_matmul(dense_inverse(A), dense_transpose(B)));
  const Vector s_eigs = dense_eigs_sym(S);

  const double lower = mu_min * beta2 / norm_a;
  const double upper = mu_max * norm_b2 / alpha_h;
  CHECK(s_eigs.front() >= lower - 1e-8 * std::max(1.0, std::abs(lower)));
  CHECK(s_eigs.back() <= upper + 1e-8 * std::max(1.0, std::abs(upper)));
}
