#include "stokeslab/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

#include "stokeslab/dense.hpp"
#include "stokeslab/mesh.hpp"

namespace stokeslab {

namespace {

// Points are given in barycentric form; groups of 3 are the permutations of
// (1-2a, a, a), groups of 6 the permutations of (a, b, 1-a-b). Published
// weights sum to 1 and are rescaled to the reference area 1/2.
void push_point(QuadRule& rule, double l1, double l2, double w) {
  rule.points.push_back({l1, l2});  // x = lambda1, y = lambda2
  rule.weights.push_back(0.5 * w);
}

void push_group3(QuadRule& rule, double a, double w) {
  const double c = 1.0 - 2.0 * a;
  push_point(rule, a, a, w);
  push_point(rule, c, a, w);
  push_point(rule, a, c, w);
}

void push_group6(QuadRule& rule, double a, double b, double w) {
  const double c = 1.0 - a - b;
  push_point(rule, a, b, w);
  push_point(rule, b, a, w);
  push_point(rule, a, c, w);
  push_point(rule, c, a, w);
  push_point(rule, b, c, w);
  push_point(rule, c, b, w);
}

QuadRule make_rule(int degree) {
  QuadRule rule;
  rule.exactness = degree;
  switch (degree) {
    case 2:
      push_group3(rule, 1.0 / 6.0, 1.0 / 3.0);
      break;
    case 4:
      push_group3(rule, 0.445948490915965, 0.223381589678011);
      push_group3(rule, 0.091576213509771, 0.109951743655322);
      break;
    case 6:
      push_group3(rule, 0.249286745170910, 0.116786275726379);
      push_group3(rule, 0.063089014491502, 0.050844906370207);
      push_group6(rule, 0.310352451033785, 0.053145049844816, 0.082851075618374);
      break;
    case 8:
      push_point(rule, 1.0 / 3.0, 1.0 / 3.0, 0.144315607677787);
      push_group3(rule, 0.459292588292723, 0.095091634267285);
      push_group3(rule, 0.170569307751760, 0.103217370534718);
      push_group3(rule, 0.050547228317031, 0.032458497623198);
      push_group6(rule, 0.263112829634638, 0.008394777409958, 0.027230314174435);
      break;
    default:
      throw std::invalid_argument("triangle_rule: no tabulated rule for this degree");
  }
  return rule;
}

}  // namespace

const QuadRule& triangle_rule(int min_degree) {
  static const QuadRule r2 = make_rule(2);
  static const QuadRule r4 = make_rule(4);
  static const QuadRule r6 = make_rule(6);
  static const QuadRule r8 = make_rule(8);
  if (min_degree <= 2) return r2;
  if (min_degree <= 4) return r4;
  if (min_degree <= 6) return r6;
  if (min_degree <= 8) return r8;
  throw std::invalid_argument("triangle_rule: exactness above 8 not tabulated");
}

void ReferenceBasis::eval(double x, double y, double* values) const {
  std::vector<double> mono(monomials.size());
  for (std::size_t m = 0; m < monomials.size(); ++m)
    mono[m] = std::pow(x, monomials[m][0]) * std::pow(y, monomials[m][1]);
  for (int j = 0; j < size; ++j) {
    double s = 0.0;
    for (int m = 0; m < size; ++m) s += coeffs[static_cast<std::size_t>(j) * size + m] * mono[m];
    values[j] = s;
  }
}

void ReferenceBasis::eval_grad(double x, double y, double* dx, double* dy) const {
  std::vector<double> mx(monomials.size()), my(monomials.size());
  for (std::size_t m = 0; m < monomials.size(); ++m) {
    const int a = monomials[m][0], b = monomials[m][1];
    mx[m] = a == 0 ? 0.0 : a * std::pow(x, a - 1) * std::pow(y, b);
    my[m] = b == 0 ? 0.0 : b * std::pow(x, a) * std::pow(y, b - 1);
  }
  for (int j = 0; j < size; ++j) {
    double sx = 0.0, sy = 0.0;
    for (int m = 0; m < size; ++m) {
      sx += coeffs[static_cast<std::size_t>(j) * size + m] * mx[m];
      sy += coeffs[static_cast<std::size_t>(j) * size + m] * my[m];
    }
    dx[j] = sx;
    dy[j] = sy;
  }
}

namespace {

ReferenceBasis make_basis(int degree) {
  ReferenceBasis basis;
  basis.degree = degree;
  basis.size = (degree + 1) * (degree + 2) / 2;
  for (int d = 0; d <= degree; ++d)
    for (int b = 0; b <= d; ++b) basis.monomials.push_back({d - b, b});

  const auto nodes = reference_nodes(degree);
  DenseMatrix vand(basis.size, basis.size);
  for (int m = 0; m < basis.size; ++m)
    for (int n = 0; n < basis.size; ++n)
      vand(m, n) = std::pow(nodes[m][0], basis.monomials[n][0]) *
                   std::pow(nodes[m][1], basis.monomials[n][1]);
  const DenseMatrix inv = dense_inverse(vand);
  basis.coeffs.resize(static_cast<std::size_t>(basis.size) * basis.size);
  for (int j = 0; j < basis.size; ++j)
    for (int m = 0; m < basis.size; ++m)
      basis.coeffs[static_cast<std::size_t>(j) * basis.size + m] = inv(m, j);
  return basis;
}

}  // namespace

const ReferenceBasis& lagrange_reference_basis(int degree) {
  static std::mutex mtx;
  static std::map<int, ReferenceBasis> cache;
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(degree);
  if (it == cache.end()) it = cache.emplace(degree, make_basis(degree)).first;
  return it->second;
}

TabulatedBasis tabulate(const ReferenceBasis& basis, const QuadRule& rule) {
  TabulatedBasis tab;
  tab.size = basis.size;
  tab.n_points = static_cast<int>(rule.points.size());
  tab.values.resize(static_cast<std::size_t>(tab.n_points) * tab.size);
  tab.dx.resize(tab.values.size());
  tab.dy.resize(tab.values.size());
  for (int q = 0; q < tab.n_points; ++q) {
    basis.eval(rule.points[q][0], rule.points[q][1],
               tab.values.data() + static_cast<std::size_t>(q) * tab.size);
    basis.eval_grad(rule.points[q][0], rule.points[q][1],
                    tab.dx.data() + static_cast<std::size_t>(q) * tab.size,
                    tab.dy.data() + static_cast<std::size_t>(q) * tab.size);
  }
  return tab;
}

}  // namespace stokeslab
