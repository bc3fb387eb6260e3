#pragma once

#include "stokeslab/dense.hpp"
#include "stokeslab/sparse.hpp"

namespace stokeslab {

// Either iterate V-cycles until a relative residual threshold ("th") or apply
// a fixed cycle count ("2Vc" with count = 2). The fixed-count variant is a
// fixed linear operator; the threshold variant is not.
struct AmgMode {
  enum class Kind { ToThreshold, FixedVCycles };
  Kind kind = Kind::FixedVCycles;
  double rel_tol = 1e-10;
  int cycles = 2;

  static AmgMode threshold(double tol);
  static AmgMode fixed(int count);
  bool is_fixed() const { return kind == Kind::FixedVCycles; }
};

struct AmgOptions {
  double strong_threshold = 0.1;  // strength-of-connection drop tolerance
  int block_size = 1;             // 2 for interleaved velocity components
  int max_levels = 25;
  int coarse_size_limit = 64;
  int smoother_degree = 2;        // Chebyshev over a Jacobi-scaled spectrum estimate
  double smoother_ratio = 10.0;   // smoothing interval [upper/ratio, upper]
  int power_iterations = 10;
  int max_cycles = 200;           // ToThreshold cap
};

struct AmgLevel {
  SparseMatrix matrix;
  SparseMatrix prolongation;  // to the parent (finer) level; absent on the coarsest
  Vector inv_diag;
  double cheb_upper = 1.0;
  double cheb_lower = 0.25;
};

struct AmgHierarchy {
  std::vector<AmgLevel> levels;  // levels[0].matrix is the input matrix
  DenseMatrix coarse_pinv;       // pseudoinverse of the coarsest operator
  AmgOptions options;

  int dim() const { return levels.empty() ? 0 : levels.front().matrix.n_rows; }
  double operator_complexity() const;
};

struct AmgFailure : std::runtime_error {
  double last_residual;
  int cycles;
  AmgFailure(const std::string& what, double residual, int used)
      : std::runtime_error(what), last_residual(residual), cycles(used) {}
};

AmgHierarchy amg_setup(const SparseMatrix& m, double strong_threshold, int block_size);
AmgHierarchy amg_setup(const SparseMatrix& m, AmgOptions options);

struct AmgApplyResult {
  Vector x;
  int cycles_used = 0;
  double rel_residual = 0.0;
};

// Solve/apply on the level-0 matrix from a zero initial guess.
AmgApplyResult amg_apply(const AmgHierarchy& h, const Vector& rhs, AmgMode mode);

// One pass of the fixed-count cycle without the residual bookkeeping; this is
// what preconditioner wrappers call in hot loops.
void amg_fixed_cycles(const AmgHierarchy& h, const Vector& rhs, int cycles, Vector& x);

}  // namespace stokeslab
