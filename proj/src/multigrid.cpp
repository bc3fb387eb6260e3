#include "stokeslab/multigrid.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace stokeslab {

AmgMode AmgMode::threshold(double tol) {
  if (!(tol > 0.0 && tol < 1.0)) throw std::invalid_argument("AmgMode: rel_tol must be in (0,1)");
  AmgMode m;
  m.kind = Kind::ToThreshold;
  m.rel_tol = tol;
  return m;
}

AmgMode AmgMode::fixed(int count) {
  if (count < 1) throw std::invalid_argument("AmgMode: cycle count must be >= 1");
  AmgMode m;
  m.kind = Kind::FixedVCycles;
  m.cycles = count;
  return m;
}

double AmgHierarchy::operator_complexity() const {
  if (levels.empty()) return 0.0;
  double total = 0.0;
  for (const auto& level : levels) total += level.matrix.nnz();
  return total / std::max(1, levels.front().matrix.nnz());
}

namespace {

// Largest eigenvalue estimate for D^{-1} A by normalized power iteration with
// a fixed-seed start vector, so setup is deterministic.
double estimate_lambda_max(const SparseMatrix& a, const Vector& inv_diag, int iterations) {
  const int n = a.n_rows;
  std::mt19937 rng(20240117u);
  std::uniform_real_distribution<double> unit(0.1, 1.0);
  Vector v(n);
  for (double& x : v) x = unit(rng);
  double nrm = norm2(v);
  for (double& x : v) x /= nrm;
  double lambda = 1.0;
  Vector w;
  for (int it = 0; it < iterations; ++it) {
    spmv(a, v, w);
    for (int i = 0; i < n; ++i) w[i] *= inv_diag[i];
    lambda = norm2(w);
    if (lambda <= 0.0) return 1.0;
    for (int i = 0; i < n; ++i) v[i] = w[i] / lambda;
  }
  return lambda;
}

// Strength-of-connection adjacency on the node graph. For block_size 2 the
// 2x2 component blocks are condensed by their Frobenius norm.
std::vector<std::vector<int>> strength_graph(const SparseMatrix& a, double theta, int bs) {
  const int n_nodes = a.n_rows / bs;
  std::vector<double> diag(n_nodes, 0.0);
  // condensed block magnitudes, assembled as adjacency with weights
  std::vector<std::vector<std::pair<int, double>>> adj(n_nodes);
  for (int i = 0; i < a.n_rows; ++i) {
    const int ni = i / bs;
    for (int k = a.row_offsets[i]; k < a.row_offsets[i + 1]; ++k) {
      const int nj = a.col_indices[k] / bs;
      const double v = a.values[k] * a.values[k];
      if (nj == ni) {
        diag[ni] += v;
      } else {
        auto& row = adj[ni];
        if (!row.empty() && row.back().first == nj)
          row.back().second += v;
        else
          row.push_back({nj, v});
      }
    }
  }
  std::vector<std::vector<int>> strong(n_nodes);
  for (int i = 0; i < n_nodes; ++i) {
    // merge duplicate neighbors (interleaved components visit each twice)
    std::sort(adj[i].begin(), adj[i].end());
    std::vector<std::pair<int, double>> merged;
    for (const auto& [j, v] : adj[i]) {
      if (!merged.empty() && merged.back().first == j)
        merged.back().second += v;
      else
        merged.push_back({j, v});
    }
    for (const auto& [j, v] : merged) {
      // squared form of ||A_ij||_F > theta * sqrt(||A_ii||_F ||A_jj||_F)
      if (v > theta * theta * std::sqrt(diag[i] * diag[j])) strong[i].push_back(j);
    }
  }
  return strong;
}

// Greedy aggregation: seed aggregates over untouched strong neighborhoods,
// attach leftovers to a neighboring aggregate, then mop up.
std::vector<int> aggregate(const std::vector<std::vector<int>>& strong, int* n_agg_out) {
  const int n = static_cast<int>(strong.size());
  std::vector<int> agg(n, -1);
  int n_agg = 0;
  for (int i = 0; i < n; ++i) {
    if (agg[i] != -1 || strong[i].empty()) continue;
    bool free = true;
    for (int j : strong[i])
      if (agg[j] != -1) {
        free = false;
        break;
      }
    if (!free) continue;
    agg[i] = n_agg;
    for (int j : strong[i]) agg[j] = n_agg;
    ++n_agg;
  }
  for (int i = 0; i < n; ++i) {
    if (agg[i] != -1) continue;
    for (int j : strong[i])
      if (agg[j] != -1) {
        agg[i] = agg[j];
        break;
      }
  }
  for (int i = 0; i < n; ++i) {
    if (agg[i] != -1) continue;
    agg[i] = n_agg;
    for (int j : strong[i])
      if (agg[j] == -1) agg[j] = n_agg;
    ++n_agg;
  }
  *n_agg_out = n_agg;
  return agg;
}

SparseMatrix tentative_prolongation(const std::vector<int>& agg, int n_agg, int bs) {
  const int n_nodes = static_cast<int>(agg.size());
  std::vector<int> count(n_agg, 0);
  for (int g : agg) ++count[g];
  CooBuilder builder(bs * n_nodes, bs * n_agg);
  for (int i = 0; i < n_nodes; ++i) {
    const double v = 1.0 / std::sqrt(static_cast<double>(count[agg[i]]));
    for (int c = 0; c < bs; ++c) builder.add(bs * i + c, bs * agg[i] + c, v);
  }
  return builder.compress();
}

void setup_smoother(AmgLevel& level, const AmgOptions& opt) {
  const Vector diag = diagonal_of(level.matrix);
  level.inv_diag.resize(diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) {
    if (diag[i] == 0.0) throw std::runtime_error("amg_setup: zero diagonal entry");
    level.inv_diag[i] = 1.0 / diag[i];
  }
  const double est = estimate_lambda_max(level.matrix, level.inv_diag, opt.power_iterations);
  level.cheb_upper = 1.1 * est;
  level.cheb_lower = level.cheb_upper / opt.smoother_ratio;
}

// Degree-d Chebyshev iteration on the Jacobi-scaled operator; fixed
// coefficients, so each call is the same linear update.
void chebyshev_smooth(const AmgLevel& level, const Vector& b, Vector& x, int degree) {
  const SparseMatrix& a = level.matrix;
  const int n = a.n_rows;
  const double theta = 0.5 * (level.cheb_upper + level.cheb_lower);
  const double delta = 0.5 * (level.cheb_upper - level.cheb_lower);
  const double sigma1 = theta / delta;
  double rho = 1.0 / sigma1;

  Vector r(n);
  spmv(a, x, r);
  for (int i = 0; i < n; ++i) r[i] = b[i] - r[i];
  Vector d(n);
  for (int i = 0; i < n; ++i) d[i] = level.inv_diag[i] * r[i] / theta;
  Vector ad(n);
  for (int k = 0; k < degree; ++k) {
    for (int i = 0; i < n; ++i) x[i] += d[i];
    if (k + 1 == degree) break;
    spmv(a, d, ad);
    for (int i = 0; i < n; ++i) r[i] -= ad[i];
    const double rho_next = 1.0 / (2.0 * sigma1 - rho);
    const double c1 = rho_next * rho;
    const double c2 = 2.0 * rho_next / delta;
    for (int i = 0; i < n; ++i) d[i] = c1 * d[i] + c2 * level.inv_diag[i] * r[i];
    rho = rho_next;
  }
}

void v_cycle(const AmgHierarchy& h, std::size_t level, const Vector& b, Vector& x) {
  const AmgLevel& lvl = h.levels[level];
  if (level + 1 == h.levels.size()) {
    x = dense_matvec(h.coarse_pinv, b);
    return;
  }
  chebyshev_smooth(lvl, b, x, h.options.smoother_degree);
  Vector r(lvl.matrix.n_rows);
  spmv(lvl.matrix, x, r);
  for (int i = 0; i < lvl.matrix.n_rows; ++i) r[i] = b[i] - r[i];
  Vector rc = spmv_transpose(lvl.prolongation, r);
  Vector ec(rc.size(), 0.0);
  v_cycle(h, level + 1, rc, ec);
  const Vector corr = spmv(lvl.prolongation, ec);
  for (int i = 0; i < lvl.matrix.n_rows; ++i) x[i] += corr[i];
  chebyshev_smooth(lvl, b, x, h.options.smoother_degree);
}

}  // namespace

AmgHierarchy amg_setup(const SparseMatrix& m, double strong_threshold, int block_size) {
  AmgOptions opt;
  opt.strong_threshold = strong_threshold;
  opt.block_size = block_size;
  return amg_setup(m, opt);
}

AmgHierarchy amg_setup(const SparseMatrix& m, AmgOptions options) {
  if (m.n_rows != m.n_cols) throw std::invalid_argument("amg_setup: matrix must be square");
  if (options.block_size != 1 && options.block_size != 2)
    throw std::invalid_argument("amg_setup: block_size must be 1 or 2");
  if (m.n_rows % options.block_size != 0)
    throw std::invalid_argument("amg_setup: size not divisible by block_size");
  if (!(options.strong_threshold > 0.0 && options.strong_threshold < 1.0))
    throw std::invalid_argument("amg_setup: strong_threshold must lie in (0,1)");

  AmgHierarchy h;
  h.options = options;
  h.levels.push_back({m, {}, {}, 1.0, 0.25});

  const int bs = options.block_size;
  while (static_cast<int>(h.levels.size()) < options.max_levels) {
    AmgLevel& lvl = h.levels.back();
    if (lvl.matrix.n_rows <= options.coarse_size_limit) break;
    setup_smoother(lvl, options);

    const auto strong = strength_graph(lvl.matrix, options.strong_threshold, bs);
    int n_agg = 0;
    std::vector<int> agg = aggregate(strong, &n_agg);
    if (n_agg * bs >= lvl.matrix.n_rows) {
      // no coarsening progress (no strong couplings); fall back to index blocks
      const int n_nodes = lvl.matrix.n_rows / bs;
      n_agg = (n_nodes + 7) / 8;
      for (int i = 0; i < n_nodes; ++i) agg[i] = i / 8;
    }
    SparseMatrix p0 = tentative_prolongation(agg, n_agg, bs);
    // smoothed prolongation P = (I - omega D^{-1} A) P0
    const double est = estimate_lambda_max(lvl.matrix, lvl.inv_diag, options.power_iterations);
    const double omega = 4.0 / (3.0 * 1.1 * est);
    SparseMatrix ap0 = matmul(lvl.matrix, p0);
    for (int i = 0; i < ap0.n_rows; ++i)
      for (int k = ap0.row_offsets[i]; k < ap0.row_offsets[i + 1]; ++k)
        ap0.values[k] *= omega * lvl.inv_diag[i];
    lvl.prolongation = add_scaled(1.0, p0, -1.0, ap0);

    SparseMatrix coarse = matmul(transpose(lvl.prolongation), matmul(lvl.matrix, lvl.prolongation));
    h.levels.push_back({std::move(coarse), {}, {}, 1.0, 0.25});
  }
  setup_smoother(h.levels.back(), options);
  // pseudoinverse handles singular coarse operators (pure-Neumann Laplacians)
  h.coarse_pinv = dense_pinv(densify(h.levels.back().matrix));
  return h;
}

void amg_fixed_cycles(const AmgHierarchy& h, const Vector& rhs, int cycles, Vector& x) {
  x.assign(rhs.size(), 0.0);
  for (int c = 0; c < cycles; ++c) v_cycle(h, 0, rhs, x);
}

AmgApplyResult amg_apply(const AmgHierarchy& h, const Vector& rhs, AmgMode mode) {
  if (static_cast<int>(rhs.size()) != h.dim())
    throw std::invalid_argument("amg_apply: rhs length mismatch");
  const SparseMatrix& a = h.levels.front().matrix;
  AmgApplyResult result;
  result.x.assign(rhs.size(), 0.0);
  const double bn = norm2(rhs);
  if (bn == 0.0) {
    if (mode.is_fixed()) result.cycles_used = mode.cycles;
    return result;
  }
  if (mode.is_fixed()) {
    for (int c = 0; c < mode.cycles; ++c) v_cycle(h, 0, rhs, result.x);
    result.cycles_used = mode.cycles;
    Vector r = spmv(a, result.x);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = rhs[i] - r[i];
    result.rel_residual = norm2(r) / bn;
    return result;
  }
  double rel = 1.0;
  for (int c = 0; c <= h.options.max_cycles; ++c) {
    Vector r = spmv(a, result.x);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = rhs[i] - r[i];
    rel = norm2(r) / bn;
    if (rel <= mode.rel_tol) {
      result.cycles_used = c;
      result.rel_residual = rel;
      return result;
    }
    if (c == h.options.max_cycles) break;
    v_cycle(h, 0, rhs, result.x);
  }
  throw AmgFailure("amg_apply: threshold not reached after max cycles (residual " +
                       std::to_string(rel) + ")",
                   rel, h.options.max_cycles);
}

}  // namespace stokeslab
