#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "reparam/shk.hpp"

using namespace reparam;
namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kPiL = 3.14159265358979323846264338328;

StepFunction half_step() {
  StepFunction h;
  h.domain = kTwoPi;
  h.breakpoints = {kPiL};
  h.signs = {1, -1};
  return h;
}

StepFunction quarter_step() {
  StepFunction h;
  h.domain = kTwoPi;
  h.breakpoints = {kPiL / 2, kPiL, 3 * kPiL / 2};
  h.signs = {1, -1, 1, -1};
  return h;
}
}  // namespace

TEST_CASE("breakpoint jacobian closed form") {
  auto v0 = trig_system(0);
  auto C0 = jacobian_at_origin(v0, {kPiL});
  REQUIRE(C0.rows() == 1);
  CHECK(C0(0, 0) == Catch::Approx(2.0).margin(1e-14));

  auto v1 = trig_system(1);
  std::vector<double> bps{kPiL / 2, kPiL, 3 * kPiL / 2};
  auto C1 = jacobian_at_origin(v1, bps);
  // alternating column signs against direct basis evaluations
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double want = 2.0 * ((j % 2 == 0) ? 1.0 : -1.0) * v1.g(i)(bps[std::size_t(j)]);
      CHECK(C1(i, j) == Catch::Approx(want).margin(1e-14));
    }

  CHECK_THROWS_AS(jacobian_at_origin(v1, {1.0, 1.0, 2.0}), SingularMatrix);
}

TEST_CASE("alpha map at the origin and its jacobian") {
  auto v1 = trig_system(1);
  StepFunction h = quarter_step();
  AlphaFamily family(kTwoPi, h.breakpoints);
  auto map = alpha_map(h.as_circle_function(), v1, family);

  Eigen::VectorXd r0 = map({0.0, 0.0, 0.0});
  CHECK(r0.cwiseAbs().maxCoeff() < 1e-9);

  Eigen::MatrixXd Jfd = detail::fd_jacobian(map, {0.0, 0.0, 0.0}, 3, 1e-5);
  Eigen::MatrixXd C = jacobian_at_origin(v1, h.breakpoints);
  CHECK((Jfd - C).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("alpha map moves a single jump linearly") {
  auto v0 = trig_system(0);
  StepFunction h = half_step();
  AlphaFamily family(kTwoPi, h.breakpoints);
  auto map = alpha_map(h.as_circle_function(), v0, family);
  for (double a : {-0.2, -0.05, 0.1, 0.3}) {
    CHECK(map({a})(0) == Catch::Approx(2 * a).margin(1e-11));
  }
}

TEST_CASE("converse solver, one-dimensional system") {
  SHKProblem prob{CircleFunction::from_expression("sin(x)", kTwoPi), trig_system(0)};
  auto sol = solve_converse_shk(prob);
  CHECK(sol.residuals.cwiseAbs().maxCoeff() < 1e-8);
  CHECK(sol.scale > 0);
}

TEST_CASE("converse solver, first trigonometric system") {
  auto f = CircleFunction::from_expression("0.8*sin(2*x)+0.1*cos(x)", kTwoPi);
  auto V = trig_system(1);
  SHKProblem prob{f, V};
  auto sol = solve_converse_shk(prob);
  CHECK(sol.residuals.cwiseAbs().maxCoeff() < 1e-8);

  // independent refined-quadrature oracle on the returned map
  ChebyshevSystem V_fine(V.basis(), QuadratureRule(32, 12, 1e-14));
  Eigen::VectorXd r = residual_vector(pullback(f, sol.phi), V_fine);
  CHECK(r.cwiseAbs().maxCoeff() < 1e-8);

  // orientation preserving
  double min_slope = 1e300;
  for (int i = 0; i < 4096; ++i)
    min_slope = std::min(min_slope, sol.phi.derivative(kTwoPi * i / 4096));
  CHECK(min_slope > 0);

  // oscillation is preserved: still at least n+1 sign changes
  CHECK(count_sign_changes(pullback(f, sol.phi), 0.0).count >= 4);

  // orthogonality is scale invariant under the same map
  Eigen::VectorXd r3 = residual_vector(pullback(f.scaled(3.0), sol.phi), V_fine);
  CHECK((r3 - 3.0 * r).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("too few sign changes is rejected") {
  SHKProblem prob{CircleFunction::from_expression("2+sin(x)", kTwoPi), trig_system(0)};
  try {
    solve_converse_shk(prob);
    FAIL("expected InsufficientSignChanges");
  } catch (const InsufficientSignChanges& e) {
    CHECK(e.found == 0);
    CHECK(e.needed == 2);
  }
}
