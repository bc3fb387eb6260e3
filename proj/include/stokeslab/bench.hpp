#pragma once

#include <optional>
#include <string>

#include "stokeslab/stokes.hpp"

namespace stokeslab {

enum class ManufacturedKind { DivFree, NonDivFree };

// Closed-form fields: a velocity, a pressure, the forcing that makes them a
// solution of the generalized Stokes operator, and the analytic divergence.
struct ManufacturedCase {
  VectorField velocity;
  ScalarField pressure;
  VectorField forcing;
  ScalarField divergence;
};

// The non-divergence-free variant adds the -lambda*mu grad(div u) term so the
// augmented velocity operator reproduces the field. with_pressure_gradient
// adds grad p to the forcing (full Stokes runs); velocity-only runs leave it
// out.
ManufacturedCase make_manufactured_case(ManufacturedKind kind, double k_wave, double mu,
                                        double lambda, double tau, bool with_pressure_gradient);

double compute_tau(long velocity_node_count);  // N^{-1/2}
// milliseconds per degree of freedom at the configured residual reduction
double compute_eff(double wall_seconds, int process_count, long total_dofs);

enum class Method { Method1, Method2, Projection, VelocityOnly, BmbtOnly };
enum class ElementPair { P2P1, P3P2 };

struct ExperimentConfig {
  std::vector<int> levels = {8, 16, 32};  // subdivisions per side
  ElementPair elements = ElementPair::P2P1;
  std::vector<double> mu_values = {1.0};
  std::vector<double> lambda_values = {0.0};
  Method method = Method::Method1;
  VelocityPrecondKind velocity_precond = {VelocityMatrix::A3, AmgMode::fixed(2)};
  SchurPrecondKind schur_precond = {SchurKind::LumpedMass, AmgMode::fixed(2), AmgMode::fixed(2)};
  double rel_tol = 1e-10;
  int restart = 200;
  std::uint64_t seed = 1;
  int threads = 1;
  double perturbation = 0.2;
  double k_wave = 0.0;  // <= 0 selects the default 16*pi
  std::optional<ManufacturedKind> case_kind;  // defaults per method
  std::string output_path;
  bool include_setup_time = false;
  std::optional<Mesh> base_mesh;  // overrides level generation when present
};

struct RunRecord {
  std::string method;
  std::string precond;
  int level = 0;
  long dofs = 0;
  double mu = 0.0;
  double lambda = 0.0;
  long outer_iters = 0;
  long inner_iters = 0;
  double vel_err = 0.0;
  double press_err = 0.0;
  double wall_s = 0.0;
  double eff_ms = 0.0;
  bool converged = false;
  // in-memory only: outer-solve data not serialized in the main CSV
  double final_true_residual = 0.0;
  std::vector<double> residual_history;
};

std::vector<RunRecord> run_experiment(const ExperimentConfig& config);

// Header: method,precond,level,dofs,mu,lambda,outer_iters,inner_iters,
// vel_err,press_err,wall_s,eff_ms,converged. Residual histories land in
// sibling files <path>.hist.<runid>.csv.
void emit_csv(const std::vector<RunRecord>& records, const std::string& path);
std::vector<RunRecord> parse_csv(const std::string& path);

std::string summary_table(const std::vector<RunRecord>& records);

std::string method_name(Method m);
std::string precond_label(const ExperimentConfig& config);

}  // namespace stokeslab
