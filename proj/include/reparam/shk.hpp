#pragma once

// The converse Sturm-Hurwitz-Kellogg solver: alternating orthogonal step,
// stretch map, Newton on the breakpoint-shift family.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "reparam/chebyshev.hpp"
#include "reparam/circle_function.hpp"
#include "reparam/diffeo.hpp"
#include "reparam/errors.hpp"
#include "reparam/newton.hpp"
#include "reparam/stepspace.hpp"

namespace reparam {

struct SHKProblem {
  CircleFunction f;
  ChebyshevSystem V;
  std::vector<double> eps_schedule{1e-2, 1e-3, 1e-4};
  double residual_target = 1e-8;
};

struct SHKSolution {
  CircleDiffeo phi;            // total map, orientation preserving
  std::vector<double> alpha;
  Eigen::VectorXd residuals;   // <f o phi, g_i>, re-verified at doubled quadrature
  int iterations = 0;
  double eps_used = 0.0;
  double jacobian_condition = 0.0;
  double scale = 1.0;          // the alternation level c that normalized f
};

// C[i][j] = 2 (-1)^(j+1) g_i(x_j), j counted from 1. The derivative of the
// alpha map at the origin when the base function is the alternating step
// starting with +1.
inline Eigen::MatrixXd jacobian_at_origin(const ChebyshevSystem& V,
                                          const std::vector<double>& breakpoints) {
  auto colloc = collocation_matrix(V, breakpoints);  // throws SingularMatrix
  const int n = V.dimension();
  Eigen::MatrixXd C(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      C(i, j) = 2.0 * ((j % 2 == 0) ? 1.0 : -1.0) * colloc.values(i, j);
  return C;
}

// alpha -> residual vector of g0 composed with the inverse of psi_alpha.
// The inverse places the jump of the base step at x_j + alpha_j, so the
// derivative at 0 is exactly jacobian_at_origin.
inline std::function<Eigen::VectorXd(const std::vector<double>&)> alpha_map(
    const CircleFunction& g0, const ChebyshevSystem& V, const AlphaFamily& family) {
  for (double b : family.breakpoints)
    if (!(b > 0) || !(b < V.period()))
      throw PreconditionError("alpha_map: breakpoints must lie in (0, period)");
  return [g0, &V, family](const std::vector<double>& alpha) {
    return residual_vector(pullback(g0, invert(psi_alpha(family, alpha))), V);
  };
}

inline SHKSolution solve_converse_shk(const SHKProblem& problem) {
  const CircleFunction& f = problem.f;
  const ChebyshevSystem& V = problem.V;
  const double P = V.period();
  if (std::abs(f.period() - P) > 1e-12)
    throw PeriodMismatch("solve_converse_shk: f and V must share the period");
  const int n = V.dimension();

  int sc = 0;
  try {
    sc = count_sign_changes(f, 0.0).count;
  } catch (const AllNeutral&) {
    sc = 0;
  }
  if (sc < n + 1) throw InsufficientSignChanges(sc, n + 1);

  // Step 1: the alternating orthogonal step function
  StepFunction h = orth_alternating_step(V);

  // Step 2: normalize f so the alternation level is 1, align sign patterns
  AlternationPoints ap = find_alternation_points(f, n + 1);
  CircleFunction fs = f.scaled(1.0 / ap.c);
  if (h.signs[0] != ap.lead)
    for (int& s : h.signs) s = -s;  // -h is orthogonal as well
  CircleDiffeo rot = CircleDiffeo::rotation(P, ap.points[0]);
  CircleFunction ft = pullback(fs, rot);
  std::vector<double> pts(ap.points.size());
  for (std::size_t j = 0; j < pts.size(); ++j) pts[j] = ap.points[j] - ap.points[0];

  AlphaFamily family(P, h.breakpoints);
  Eigen::MatrixXd J0 = double(h.signs[0]) * jacobian_at_origin(V, h.breakpoints);

  const double tol_internal = 0.5 * problem.residual_target / ap.c;
  QuadratureRule verify_rule(V.rule().panels * 2, V.rule().points_per_panel,
                             V.rule().tol * 0.25);
  ChebyshevSystem V_fine(V.basis(), verify_rule);

  double band = 0.1;
  double best_residual = std::numeric_limits<double>::infinity();
  for (std::size_t attempt = 0; attempt < problem.eps_schedule.size(); ++attempt) {
    double eps = problem.eps_schedule[attempt];
    CircleDiffeo phi0;
    try {
      StretchOptions sopt;
      sopt.band = band;
      phi0 = build_stretch_to_step(ft, pts, h, eps, sopt);
    } catch (const NoStableNeighborhood&) {
      if (band >= 0.1) throw;  // genuinely flat input
      band = std::min(0.1, band * 2);
      StretchOptions sopt;
      sopt.band = band;
      phi0 = build_stretch_to_step(ft, pts, h, eps, sopt);
    }
    CircleFunction g0 = pullback(ft, phi0);
    auto map = alpha_map(g0, V, family);
    auto newton = detail::newton_on_alpha(map, J0, family.trust_radius, tol_internal);
    best_residual = std::min(best_residual, newton.residual.cwiseAbs().maxCoeff() * ap.c);
    if (newton.converged) {
      SHKSolution sol;
      sol.phi = compose(compose(rot, phi0), invert(psi_alpha(family, newton.alpha)));
      sol.alpha = newton.alpha;
      sol.iterations = newton.iterations;
      sol.eps_used = eps;
      sol.jacobian_condition = newton.jacobian_condition;
      sol.scale = ap.c;
      // soundness: re-verify at doubled quadrature on the original f
      sol.residuals = residual_vector(pullback(f, sol.phi), V_fine);
      if (sol.residuals.cwiseAbs().maxCoeff() < problem.residual_target) return sol;
      best_residual = std::min(best_residual, sol.residuals.cwiseAbs().maxCoeff());
    }
    band *= 0.5;  // tighter stretch on the next attempt
  }
  throw ConvergenceFailure("converse SHK solver exhausted its eps schedule", best_residual);
}

}  // namespace reparam
