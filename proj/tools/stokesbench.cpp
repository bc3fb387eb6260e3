#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "stokeslab/bench.hpp"

namespace {

using namespace stokeslab;

AmgMode parse_mode(const std::string& s) {
  if (s == "th") return AmgMode::threshold(1e-10);
  if (s == "2vc") return AmgMode::fixed(2);
  throw CLI::ValidationError("mode must be 'th' or '2vc'");
}

VelocityPrecondKind parse_velocity_precond(const std::string& s) {
  const auto x = s.find('x');
  if (x == std::string::npos) throw CLI::ValidationError("expected <a1|a2|a3>x<th|2vc>");
  const std::string mat = s.substr(0, x);
  VelocityPrecondKind k;
  if (mat == "a1") k.matrix = VelocityMatrix::A1;
  else if (mat == "a2") k.matrix = VelocityMatrix::A2;
  else if (mat == "a3") k.matrix = VelocityMatrix::A3;
  else throw CLI::ValidationError("velocity preconditioner must be a1, a2 or a3");
  k.mode = parse_mode(s.substr(x + 1));
  return k;
}

SchurPrecondKind parse_schur_precond(const std::string& s) {
  const auto x = s.find('x');
  if (x == std::string::npos) throw CLI::ValidationError("expected <c|clambda|cdelta>x<modes>");
  const std::string kind = s.substr(0, x);
  SchurPrecondKind k;
  if (kind == "c") k.kind = SchurKind::ConsistentMass;
  else if (kind == "clambda") k.kind = SchurKind::LumpedMass;
  else if (kind == "cdelta") k.kind = SchurKind::PressureLaplacian;
  else throw CLI::ValidationError("schur preconditioner must be c, clambda or cdelta");
  std::string modes = s.substr(x + 1);
  const auto comma = modes.find(',');
  if (comma == std::string::npos) {
    k.mass_mode = parse_mode(modes);
    k.second_mode = k.mass_mode;
  } else {
    k.mass_mode = parse_mode(modes.substr(0, comma));
    k.second_mode = parse_mode(modes.substr(comma + 1));
  }
  return k;
}

void dump_matrix(const SparseMatrix& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out.precision(17);
  for (int i = 0; i < m.n_rows; ++i)
    for (int k = m.row_offsets[i]; k < m.row_offsets[i + 1]; ++k)
      out << i << ' ' << m.col_indices[k] << ' ' << m.values[k] << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Preconditioned Krylov solvers for the generalized Stokes problem"};

  std::vector<int> levels = {8, 16, 32};
  std::string elements = "p2p1";
  std::vector<double> mus = {1.0};
  std::vector<double> lambdas = {0.0};
  std::string method = "method1";
  std::string vel_precond = "a3x2vc";
  std::string schur_precond = "clambdax2vc";
  double tol = 1e-10;
  int restart = 200;
  std::uint64_t seed = 1;
  int threads = 1;
  double perturbation = 0.2;
  double kwave = 0.0;
  std::string case_kind = "auto";
  std::string out_path;
  std::string dump_matrix_spec;
  std::string dump_mesh_path;
  std::string load_mesh_path;
  bool include_setup = false;

  app.add_option("--levels", levels, "subdivisions per side, e.g. 8,16,32,64")
      ->delimiter(',');
  app.add_option("--elements", elements, "p2p1 or p3p2")
      ->check(CLI::IsMember({"p2p1", "p3p2"}));
  app.add_option("--mu", mus, "viscosities")->delimiter(',');
  app.add_option("--lambda", lambdas, "augmentation parameters")->delimiter(',');
  app.add_option("--method", method, "method1|method2|projection|velocity_only|bmbt_only")
      ->check(CLI::IsMember({"method1", "method2", "projection", "velocity_only", "bmbt_only"}));
  app.add_option("--vel-precond", vel_precond, "{a1,a2,a3}x{th,2vc}");
  app.add_option("--schur-precond", schur_precond, "{c,clambda,cdelta}x{th,2vc}[,{th,2vc}]");
  app.add_option("--tol", tol, "outer relative tolerance");
  app.add_option("--restart", restart, "GMRES restart length");
  app.add_option("--seed", seed, "mesh jitter seed");
  app.add_option("--threads", threads, "concurrent runs");
  app.add_option("--perturbation", perturbation, "interior vertex jitter in [0,0.3]");
  app.add_option("--kwave", kwave, "manufactured wavenumber (default 16*pi)");
  app.add_option("--case", case_kind, "auto|divfree|nondivfree")
      ->check(CLI::IsMember({"auto", "divfree", "nondivfree"}));
  app.add_option("--out", out_path, "CSV output path");
  app.add_option("--dump-matrix", dump_matrix_spec,
                 "KIND:PATH with KIND in {a,mv,mq,ev,lv,d,b,lq,lambdav}");
  app.add_option("--dump-mesh", dump_mesh_path, "write the first-level mesh and exit");
  app.add_option("--load-mesh", load_mesh_path, "use a saved mesh as the first level");
  app.add_flag("--include-setup-time", include_setup, "fold assembly/setup into wall times");

  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentConfig config;
    config.levels = levels;
    config.elements = elements == "p2p1" ? ElementPair::P2P1 : ElementPair::P3P2;
    config.mu_values = mus;
    config.lambda_values = lambdas;
    if (method == "method1") config.method = Method::Method1;
    else if (method == "method2") config.method = Method::Method2;
    else if (method == "projection") config.method = Method::Projection;
    else if (method == "velocity_only") config.method = Method::VelocityOnly;
    else config.method = Method::BmbtOnly;
    config.velocity_precond = parse_velocity_precond(vel_precond);
    config.schur_precond = parse_schur_precond(schur_precond);
    config.rel_tol = tol;
    config.restart = restart;
    config.seed = seed;
    config.threads = threads;
    config.perturbation = perturbation;
    config.k_wave = kwave;
    if (case_kind == "divfree") config.case_kind = ManufacturedKind::DivFree;
    else if (case_kind == "nondivfree") config.case_kind = ManufacturedKind::NonDivFree;
    config.output_path = out_path;
    config.include_setup_time = include_setup;
    if (!load_mesh_path.empty()) config.base_mesh = load_mesh(load_mesh_path);

    if (!dump_mesh_path.empty()) {
      const Mesh mesh = config.base_mesh
                            ? *config.base_mesh
                            : build_unit_square_mesh(levels.front(), perturbation, seed);
      save_mesh(mesh, dump_mesh_path);
      std::cout << "mesh written to " << dump_mesh_path << "\n";
      return 0;
    }

    if (!dump_matrix_spec.empty()) {
      const auto colon = dump_matrix_spec.find(':');
      if (colon == std::string::npos) throw std::runtime_error("--dump-matrix expects KIND:PATH");
      const std::string kind = dump_matrix_spec.substr(0, colon);
      const std::string path = dump_matrix_spec.substr(colon + 1);
      const Mesh mesh = config.base_mesh
                            ? *config.base_mesh
                            : build_unit_square_mesh(levels.front(), perturbation, seed);
      const MixedSpace space =
          make_mixed_space(mesh, config.elements == ElementPair::P2P1 ? 1 : 2);
      StokesOptions opt;
      opt.mu = mus.front();
      opt.lambda = lambdas.front();
      const StokesSystem sys = make_stokes_system(space, opt);
      const std::map<std::string, const SparseMatrix*> matrices = {
          {"a", &sys.velocity_system0}, {"mv", &sys.mass_velocity0},
          {"mq", &sys.mass_pressure},   {"ev", &sys.strain0},
          {"lv", &sys.laplacian_v0},    {"d", &sys.grad_div0},
          {"b", &sys.divergence0},      {"lq", &sys.pressure_laplacian}};
      if (kind == "lambdav") {
        Vector diag = sys.lumped_inv;
        for (double& v : diag) v = 1.0 / v;
        dump_matrix(diagonal_matrix(diag), path);
      } else {
        auto it = matrices.find(kind);
        if (it == matrices.end()) throw std::runtime_error("unknown matrix kind " + kind);
        dump_matrix(*it->second, path);
      }
      std::cout << "matrix " << kind << " written to " << path << "\n";
      return 0;
    }

    const std::vector<RunRecord> records = run_experiment(config);
    std::cout << summary_table(records);
    bool all_ok = true;
    for (const auto& r : records) all_ok = all_ok && r.converged;
    if (!out_path.empty()) std::cout << "results written to " << out_path << "\n";
    return all_ok ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
