#include "stokeslab/bench.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <future>
#include <iomanip>
#include <algorithm>
#include <limits>
#include <sstream>

namespace stokeslab {

namespace {

constexpr double kPi = 3.14159265358979323846;

using Clock = std::chrono::steady_clock;

}  // namespace

ManufacturedCase make_manufactured_case(ManufacturedKind kind, double k_wave, double mu,
                                        double lambda, double tau, bool with_pressure_gradient) {
  const double k = k_wave;
  ManufacturedCase c;
  c.pressure = [k](double x, double y) { return std::sin(k * (x - y)); };
  auto grad_p = [k](double x, double y) -> std::array<double, 2> {
    const double g = k * std::cos(k * (x - y));
    return {g, -g};
  };
  if (kind == ManufacturedKind::DivFree) {
    c.velocity = [k](double x, double y) -> std::array<double, 2> {
      return {std::sin(k * x) * std::sin(k * y), std::cos(k * x) * std::cos(k * y)};
    };
    c.divergence = [](double, double) { return 0.0; };
    // -div(2 mu e(u)) = -mu (lap u + grad div u) = 2 mu k^2 u here
    c.forcing = [c, grad_p, k, mu, tau, with_pressure_gradient](double x, double y) {
      const auto u = c.velocity(x, y);
      const double a = 1.0 / tau + 2.0 * mu * k * k;
      std::array<double, 2> f = {a * u[0], a * u[1]};
      if (with_pressure_gradient) {
        const auto gp = grad_p(x, y);
        f[0] += gp[0];
        f[1] += gp[1];
      }
      return f;
    };
  } else {
    c.velocity = [k](double x, double y) -> std::array<double, 2> {
      return {std::sin(2.0 * k * x) * std::sin(k * y), std::cos(k * x) * std::cos(k * y)};
    };
    c.divergence = [k](double x, double y) {
      return 2.0 * k * std::cos(2.0 * k * x) * std::sin(k * y) -
             k * std::cos(k * x) * std::sin(k * y);
    };
    c.forcing = [c, grad_p, k, mu, lambda, tau, with_pressure_gradient](double x, double y) {
      const auto u = c.velocity(x, y);
      // lap u component-wise
      const double lap0 = -5.0 * k * k * u[0];
      const double lap1 = -2.0 * k * k * u[1];
      // grad(div u)
      const double gd0 = -4.0 * k * k * std::sin(2.0 * k * x) * std::sin(k * y) +
                         k * k * std::sin(k * x) * std::sin(k * y);
      const double gd1 = 2.0 * k * k * std::cos(2.0 * k * x) * std::cos(k * y) -
                         k * k * std::cos(k * x) * std::cos(k * y);
      std::array<double, 2> f = {u[0] / tau - mu * lap0 - mu * (1.0 + lambda) * gd0,
                                 u[1] / tau - mu * lap1 - mu * (1.0 + lambda) * gd1};
      if (with_pressure_gradient) {
        const auto gp = grad_p(x, y);
        f[0] += gp[0];
        f[1] += gp[1];
      }
      return f;
    };
  }
  return c;
}

double compute_tau(long velocity_node_count) {
  if (velocity_node_count < 1) throw std::invalid_argument("compute_tau: node count must be >= 1");
  return 1.0 / std::sqrt(static_cast<double>(velocity_node_count));
}

double compute_eff(double wall_seconds, int process_count, long total_dofs) {
  if (wall_seconds < 0.0 || process_count <= 0 || total_dofs <= 0)
    throw std::invalid_argument("compute_eff: inputs must be positive");
  return wall_seconds * 1000.0 * process_count / static_cast<double>(total_dofs);
}

std::string method_name(Method m) {
  switch (m) {
    case Method::Method1:
      return "method1";
    case Method::Method2:
      return "method2";
    case Method::Projection:
      return "projection";
    case Method::VelocityOnly:
      return "velocity_only";
    case Method::BmbtOnly:
      return "bmbt_only";
  }
  return "unknown";
}

namespace {

std::string mode_label(AmgMode mode) { return mode.is_fixed() ? "2vc" : "th"; }

std::string velocity_label(VelocityPrecondKind k) {
  std::string s = "a";
  s += k.matrix == VelocityMatrix::A1 ? "1" : (k.matrix == VelocityMatrix::A2 ? "2" : "3");
  return s + ":" + mode_label(k.mode);
}

std::string schur_label(SchurPrecondKind k) {
  std::string s;
  switch (k.kind) {
    case SchurKind::ConsistentMass:
      s = "c";
      break;
    case SchurKind::LumpedMass:
      s = "clambda";
      break;
    case SchurKind::PressureLaplacian:
      s = "cdelta";
      break;
  }
  s += ":" + mode_label(k.mass_mode);
  if (k.kind != SchurKind::LumpedMass) s += ":" + mode_label(k.second_mode);
  return s;
}

}  // namespace

std::string precond_label(const ExperimentConfig& config) {
  switch (config.method) {
    case Method::VelocityOnly:
      return velocity_label(config.velocity_precond);
    case Method::Method1:
      return schur_label(config.schur_precond);
    case Method::Method2:
      return schur_label(config.schur_precond) + "|" + velocity_label(config.velocity_precond);
    case Method::Projection:
      return "a3:2vc";
    case Method::BmbtOnly:
      return schur_label(config.schur_precond);
  }
  return "";
}

namespace {

struct RunSpec {
  int level_index;
  double mu;
  double lambda;
};

RunRecord execute_run(const ExperimentConfig& config, const MixedSpace& space, int level,
                      double mu, double lambda) {
  RunRecord rec;
  rec.method = method_name(config.method);
  rec.precond = precond_label(config);
  rec.level = level;
  rec.mu = mu;
  rec.lambda = lambda;
  rec.dofs = static_cast<long>(space.n_velocity_dofs()) + space.n_pressure_dofs();

  const double tau = compute_tau(space.velocity_dofs.n_nodes);
  const double k_wave = config.k_wave > 0.0 ? config.k_wave : 16.0 * kPi;
  const ManufacturedKind kind = config.case_kind.value_or(
      config.method == Method::VelocityOnly ? ManufacturedKind::NonDivFree
                                            : ManufacturedKind::DivFree);
  const bool with_gp = config.method == Method::Method1 || config.method == Method::Method2 ||
                       config.method == Method::Projection;
  const ManufacturedCase mc = make_manufactured_case(kind, k_wave, mu, lambda, tau, with_gp);

  StokesOptions opt;
  opt.mu = mu;
  opt.lambda = lambda;
  opt.tau = tau;
  opt.gmres_restart = config.restart;
  opt.dirichlet_values = mc.velocity;

  const auto setup_start = Clock::now();
  const StokesSystem sys = make_stokes_system(space, opt);
  double setup_seconds =
      std::chrono::duration<double>(Clock::now() - setup_start).count();

  const int qdeg = space.quadrature_degree();
  const auto record_errors = [&](const Vector& u, const Vector& p) {
    rec.vel_err = relative_l2_error(space.mesh, space.velocity_dofs, u, mc.velocity, qdeg);
    rec.press_err =
        relative_l2_error(space.mesh, space.pressure_dofs, p, mc.pressure, qdeg, true);
  };

  try {
    switch (config.method) {
      case Method::Method1:
      case Method::Method2: {
        Vector F = assemble_load(space, mc.forcing);
        F = lift_velocity_rhs(sys, F);
        const auto warm_start = Clock::now();
        StokesSolution sol =
            config.method == Method::Method1
                ? method1_solve(sys, F, config.schur_precond, config.rel_tol)
                : method2_solve(sys, F, config.schur_precond, config.velocity_precond,
                                config.rel_tol);
        setup_seconds += std::chrono::duration<double>(Clock::now() - warm_start).count() -
                         sol.wall_seconds;
        rec.outer_iters = sol.outer.iterations;
        rec.inner_iters = sol.inner_velocity_iterations + sol.inner_bmbt_iterations;
        rec.wall_s = sol.wall_seconds;
        rec.converged = sol.converged;
        rec.final_true_residual = sol.outer.true_final_residual;
        rec.residual_history = sol.outer.relative_residuals;
        record_errors(sol.velocity, sol.pressure);
        break;
      }
      case Method::Projection: {
        Vector F = assemble_load(space, mc.forcing);
        F = lift_velocity_rhs(sys, F);
        const auto warm_start = Clock::now();
        ProjectionResult pr = projection_step(sys, F);
        setup_seconds += std::chrono::duration<double>(Clock::now() - warm_start).count() -
                         pr.wall_seconds;
        rec.outer_iters = pr.velocity_report.iterations;
        rec.inner_iters = pr.laplacian_report.iterations + pr.mass_report.iterations;
        rec.wall_s = pr.wall_seconds;
        rec.converged = pr.converged;
        rec.final_true_residual =
            std::max({pr.velocity_report.true_final_residual,
                      pr.laplacian_report.true_final_residual,
                      pr.mass_report.true_final_residual});
        rec.residual_history = pr.velocity_report.relative_residuals;
        record_errors(pr.velocity, pr.pressure);
        break;
      }
      case Method::VelocityOnly: {
        Vector F = assemble_load(space, mc.forcing);
        F = augmented_velocity_rhs(sys, lift_velocity_rhs(sys, F));
        velocity_hierarchy(sys, config.velocity_precond.matrix);
        KrylovResult res = solve_velocity(sys, F, config.velocity_precond, config.rel_tol);
        rec.outer_iters = res.report.iterations;
        rec.inner_iters = 0;
        rec.wall_s = res.report.wall_time;
        rec.converged = res.report.converged;
        rec.final_true_residual = res.report.true_final_residual;
        rec.residual_history = res.report.relative_residuals;
        rec.vel_err =
            relative_l2_error(space.mesh, space.velocity_dofs, res.x, mc.velocity, qdeg);
        rec.press_err = 0.0;
        break;
      }
      case Method::BmbtOnly: {
        const MassInverse mass =
            config.schur_precond.kind == SchurKind::LumpedMass
                ? MassInverse::Lumped
                : (config.schur_precond.second_mode.is_fixed() ? MassInverse::Consistent2Vc
                                                               : MassInverse::ConsistentTh);
        const Vector X = interpolate(mc.pressure, space.pressure_dofs);
        // apply the operator once to manufacture a consistent rhs
        Vector Y;
        {
          const Vector w = spmv_transpose(sys.B, X);
          Vector z;
          if (mass == MassInverse::Lumped) {
            z.resize(w.size());
            for (std::size_t i = 0; i < w.size(); ++i) z[i] = sys.lumped_inv[i] * w[i];
          } else if (mass == MassInverse::ConsistentTh) {
            z = amg_apply(mass_v_hierarchy(sys), w, AmgMode::threshold(sys.inner_tol)).x;
          } else {
            amg_fixed_cycles(mass_v_hierarchy(sys), w, 2, z);
          }
          Y = spmv(sys.B, z);
        }
        KrylovResult res = solve_BMBt(sys, Y, mass, config.rel_tol);
        rec.outer_iters = res.report.iterations;
        rec.inner_iters = 0;
        rec.wall_s = res.report.wall_time;
        rec.converged = res.report.converged;
        rec.final_true_residual = res.report.true_final_residual;
        rec.residual_history = res.report.relative_residuals;
        // recovered coefficients match up to a constant; compare mean-aligned
        Vector diff = res.x;
        axpy(-1.0, X, diff);
        subtract_mean(diff);
        rec.press_err = norm1(diff) / norm1(X);
        rec.vel_err = 0.0;
        break;
      }
    }
  } catch (const std::exception&) {
    rec.converged = false;
    rec.outer_iters = -1;
    rec.inner_iters = -1;
    rec.vel_err = std::numeric_limits<double>::quiet_NaN();
    rec.press_err = std::numeric_limits<double>::quiet_NaN();
  }
  if (config.include_setup_time) rec.wall_s += setup_seconds;
  rec.eff_ms = compute_eff(std::max(rec.wall_s, 0.0) + 1e-12, 1, rec.dofs);
  return rec;
}

}  // namespace

std::vector<RunRecord> run_experiment(const ExperimentConfig& config) {
  if (config.levels.empty() || config.mu_values.empty() || config.lambda_values.empty())
    throw std::invalid_argument("run_experiment: empty sweep");
  if (!(config.rel_tol > 0.0 && config.rel_tol < 1.0))
    throw std::invalid_argument("run_experiment: rel_tol must lie in (0,1)");

  // successive doublings reuse the red-refined mesh family; anything else is
  // generated fresh at that resolution
  std::vector<MixedSpace> spaces;
  spaces.reserve(config.levels.size());
  Mesh current;
  int current_n = -1;
  for (int n : config.levels) {
    if (config.base_mesh && current_n < 0) {
      current = *config.base_mesh;
    } else if (current_n > 0 && n == 2 * current_n) {
      current = refine(current);
    } else {
      current = build_unit_square_mesh(n, config.perturbation, config.seed);
    }
    current_n = n;
    spaces.push_back(make_mixed_space(current, config.elements == ElementPair::P2P1 ? 1 : 2));
  }

  std::vector<RunSpec> specs;
  for (std::size_t l = 0; l < config.levels.size(); ++l)
    for (double mu : config.mu_values)
      for (double lambda : config.lambda_values) specs.push_back({static_cast<int>(l), mu, lambda});

  std::vector<RunRecord> records(specs.size());
  const int threads = std::max(1, config.threads);
  if (threads == 1) {
    for (std::size_t i = 0; i < specs.size(); ++i)
      records[i] = execute_run(config, spaces[specs[i].level_index],
                               config.levels[specs[i].level_index], specs[i].mu, specs[i].lambda);
  } else {
    std::vector<std::future<void>> futures;
    std::atomic<std::size_t> next{0};
    for (int t = 0; t < threads; ++t) {
      futures.push_back(std::async(std::launch::async, [&]() {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= specs.size()) return;
          records[i] = execute_run(config, spaces[specs[i].level_index],
                                   config.levels[specs[i].level_index], specs[i].mu,
                                   specs[i].lambda);
        }
      }));
    }
    for (auto& f : futures) f.get();
  }

  if (!config.output_path.empty()) emit_csv(records, config.output_path);
  return records;
}

void emit_csv(const std::vector<RunRecord>& records, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("emit_csv: cannot open " + path);
  out << "method,precond,level,dofs,mu,lambda,outer_iters,inner_iters,vel_err,press_err,"
         "wall_s,eff_ms,converged\n";
  out.precision(17);
  for (const auto& r : records) {
    out << r.method << ',' << r.precond << ',' << r.level << ',' << r.dofs << ',' << r.mu << ','
        << r.lambda << ',' << r.outer_iters << ',' << r.inner_iters << ',' << r.vel_err << ','
        << r.press_err << ',' << r.wall_s << ',' << r.eff_ms << ',' << (r.converged ? 1 : 0)
        << '\n';
  }
  out.close();
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].residual_history.empty()) continue;
    std::ofstream hist(path + ".hist." + std::to_string(i) + ".csv");
    if (!hist) continue;
    hist.precision(17);
    hist << "iteration,residual\n";
    for (std::size_t k = 0; k < records[i].residual_history.size(); ++k)
      hist << k << ',' << records[i].residual_history[k] << '\n';
  }
}

std::vector<RunRecord> parse_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("parse_csv: cannot open " + path);
  std::string line;
  std::getline(in, line);  // header
  std::vector<RunRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 13) throw std::runtime_error("parse_csv: malformed row");
    RunRecord r;
    r.method = fields[0];
    r.precond = fields[1];
    r.level = std::stoi(fields[2]);
    r.dofs = std::stol(fields[3]);
    r.mu = std::stod(fields[4]);
    r.lambda = std::stod(fields[5]);
    r.outer_iters = std::stol(fields[6]);
    r.inner_iters = std::stol(fields[7]);
    r.vel_err = std::stod(fields[8]);
    r.press_err = std::stod(fields[9]);
    r.wall_s = std::stod(fields[10]);
    r.eff_ms = std::stod(fields[11]);
    r.converged = fields[12] == "1";
    records.push_back(std::move(r));
  }
  return records;
}

std::string summary_table(const std::vector<RunRecord>& records) {
  std::ostringstream out;
  out << std::left << std::setw(14) << "method" << std::setw(22) << "precond" << std::right
      << std::setw(6) << "n" << std::setw(10) << "dofs" << std::setw(9) << "mu" << std::setw(7)
      << "lam" << std::setw(7) << "outer" << std::setw(8) << "inner" << std::setw(11) << "vel_err"
      << std::setw(11) << "press_err" << std::setw(10) << "wall(s)" << std::setw(10) << "eff(ms)"
      << std::setw(5) << "ok" << '\n';
  for (const auto& r : records) {
    out << std::left << std::setw(14) << r.method << std::setw(22) << r.precond << std::right
        << std::setw(6) << r.level << std::setw(10) << r.dofs << std::setw(9) << std::setprecision(3)
        << r.mu << std::setw(7) << r.lambda << std::setw(7) << r.outer_iters << std::setw(8)
        << r.inner_iters << std::setw(11) << std::scientific << std::setprecision(2) << r.vel_err
        << std::setw(11) << r.press_err << std::fixed << std::setprecision(3) << std::setw(10)
        << r.wall_s << std::setw(10) << std::setprecision(5) << r.eff_ms << std::setw(5)
        << (r.converged ? "y" : "N") << '\n';
    out.unsetf(std::ios::floatfield);
  }
  return out.str();
}

}  // namespace stokeslab
