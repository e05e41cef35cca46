#pragma once

// Chebyshev systems on the circle: trigonometric bases, collocation matrices,
// residual vectors and the forward oscillation check.

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "reparam/circle_function.hpp"
#include "reparam/errors.hpp"

namespace reparam {

class ChebyshevSystem {
public:
  ChebyshevSystem(std::vector<CircleFunction> basis, QuadratureRule rule = QuadratureRule())
      : basis_(std::move(basis)), rule_(rule) {
    const int n = int(basis_.size());
    if (n < 1 || n % 2 == 0)
      throw PreconditionError("Chebyshev system on the circle needs odd dimension");
    for (const auto& g : basis_)
      if (std::abs(g.period() - basis_[0].period()) > 1e-12)
        throw PeriodMismatch("Chebyshev basis elements must share one period");
    check_gram();
  }

  int dimension() const { return int(basis_.size()); }
  double period() const { return basis_[0].period(); }
  const std::vector<CircleFunction>& basis() const { return basis_; }
  const CircleFunction& g(int i) const { return basis_[i]; }
  const QuadratureRule& rule() const { return rule_; }

private:
  std::vector<CircleFunction> basis_;
  QuadratureRule rule_;

  void check_gram() const {
    const int n = dimension();
    Eigen::MatrixXd G(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j)
        G(i, j) = G(j, i) = inner_product(basis_[i], basis_[j], rule_);
    Eigen::VectorXd d = G.diagonal().cwiseSqrt();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) G(i, j) /= d(i) * d(j);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
    if (es.eigenvalues().minCoeff() <= 1e-10)
      throw DependentBasis("Gram matrix is not positive definite");
  }
};

// {1, cos x, sin x, ..., cos kx, sin kx}, dimension 2k+1, period 2*pi.
inline ChebyshevSystem trig_system(int order, QuadratureRule rule = QuadratureRule()) {
  if (order < 0) throw PreconditionError("trig system order must be >= 0");
  const double two_pi = 6.283185307179586476925286766559;
  std::vector<CircleFunction> basis;
  basis.push_back(CircleFunction::from_expression("1", two_pi));
  for (int m = 1; m <= order; ++m) {
    basis.push_back(CircleFunction::from_expression("cos(" + std::to_string(m) + "*x)", two_pi));
    basis.push_back(CircleFunction::from_expression("sin(" + std::to_string(m) + "*x)", two_pi));
  }
  return ChebyshevSystem(std::move(basis), rule);
}

struct CollocationMatrix {
  Eigen::MatrixXd values;  // values(i, j) = g_i(x_j)
  Eigen::PartialPivLU<Eigen::MatrixXd> lu;
  double condition = 0.0;
};

inline CollocationMatrix collocation_matrix(const ChebyshevSystem& V,
                                            const std::vector<double>& points) {
  const int n = V.dimension();
  if (int(points.size()) != n)
    throw PreconditionError("collocation needs exactly n points");
  // duplicated points are allowed through: they surface as a singular matrix
  for (int j = 0; j + 1 < n; ++j)
    if (points[j + 1] < points[j])
      throw PreconditionError("collocation points must be ordered");
  if (points[n - 1] - points[0] >= V.period())
    throw PreconditionError("collocation points must lie within one period");

  CollocationMatrix out;
  out.values.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out.values(i, j) = V.g(i)(points[j]);

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(out.values);
  double smin = svd.singularValues()(n - 1), smax = svd.singularValues()(0);
  out.condition = (smin > 0) ? smax / smin : std::numeric_limits<double>::infinity();
  if (!(smin > 0) || out.condition > 1e12)
    throw SingularMatrix("collocation matrix numerically singular (cond=" +
                         std::to_string(out.condition) + ")");
  out.lu.compute(out.values);
  return out;
}

inline Eigen::VectorXd residual_vector(const CircleFunction& f, const ChebyshevSystem& V) {
  if (std::abs(f.period() - V.period()) > 1e-12)
    throw PeriodMismatch("residual_vector: period mismatch");
  Eigen::VectorXd r(V.dimension());
  for (int i = 0; i < V.dimension(); ++i) r(i) = inner_product(f, V.g(i), V.rule());
  return r;
}

struct ChebyshevReport {
  bool pass = true;
  int worst_count = 0;
  Eigen::VectorXd worst_combo;
};

// Randomized falsifier of the Chebyshev property: counts sign changes of
// random unit combinations and flags any count above n-1.
inline ChebyshevReport verify_chebyshev(const ChebyshevSystem& V, int trials,
                                        unsigned seed = 7u) {
  if (trials < 1) throw PreconditionError("verify_chebyshev: trials must be >= 1");
  const int n = V.dimension();
  std::mt19937 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  ChebyshevReport rep;
  rep.worst_combo = Eigen::VectorXd::Zero(n);
  for (int t = 0; t < trials; ++t) {
    Eigen::VectorXd c(n);
    for (int i = 0; i < n; ++i) c(i) = gauss(rng);
    c.normalize();
    auto combo = CircleFunction::from_callable(V.period(), [&V, c, n](double x) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += c(i) * V.g(i)(x);
      return s;
    });
    int count = 0;
    try {
      count = count_sign_changes(combo, 1e-10 * combo.max_abs()).count;
    } catch (const AllNeutral&) {
      count = 0;
    }
    if (count > rep.worst_count) {
      rep.worst_count = count;
      rep.worst_combo = c;
    }
    if (count > n - 1) rep.pass = false;
  }
  return rep;
}

struct SturmHurwitzReport {
  bool pass = false;
  int count = 0;
  int required = 0;
  std::vector<double> locations;
  Eigen::VectorXd residuals;
};

// Forward theorem check: an f orthogonal to V must show >= n+1 sign changes.
inline SturmHurwitzReport sturm_hurwitz_check(const CircleFunction& f,
                                              const ChebyshevSystem& V) {
  SturmHurwitzReport rep;
  rep.residuals = residual_vector(f, V);
  if (rep.residuals.cwiseAbs().maxCoeff() >= 1e-8)
    throw NotOrthogonal("f is not orthogonal to V (max residual " +
                        std::to_string(rep.residuals.cwiseAbs().maxCoeff()) + ")");
  auto sc = count_sign_changes(f, 1e-9 * f.max_abs());
  rep.count = sc.count;
  rep.locations = sc.locations;
  rep.required = V.dimension() + 1;
  rep.pass = rep.count >= rep.required;
  return rep;
}

}  // namespace reparam
