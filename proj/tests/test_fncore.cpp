#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "reparam/circle_function.hpp"
#include "reparam/diffeo.hpp"
#include "reparam/io.hpp"

using namespace reparam;
namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kPiL = 3.14159265358979323846264338328;
}  // namespace

TEST_CASE("expression parsing") {
  auto f = CircleFunction::from_expression("sin(x)", kTwoPi);
  CHECK(f(0.0) == Catch::Approx(0.0).margin(1e-15));
  CHECK(f(kPiL / 2) == Catch::Approx(1.0));

  auto g = CircleFunction::from_expression("cos(x)+2", kTwoPi);
  CHECK(g(0.0) == Catch::Approx(3.0));

  try {
    CircleFunction::from_expression("sin(", kTwoPi);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.offset == 4);
  }

  // grammar corners: powers, division, pi, unary minus, nesting
  auto h = CircleFunction::from_expression("x^2/2 - abs(sin(pi*x))", kTwoPi);
  CHECK(h(1.0) == Catch::Approx(0.5 - std::abs(std::sin(kPiL))).margin(1e-12));
  CHECK(h(2.0) == Catch::Approx(2.0 - std::abs(std::sin(2 * kPiL))).margin(1e-12));
}

TEST_CASE("evaluation is periodic") {
  auto f = CircleFunction::from_expression("sin(3*x)+cos(x)", kTwoPi);
  for (int i = 0; i < 32; ++i) {
    double x = 0.37 + i * 0.41;
    CHECK(f(x + kTwoPi) == Catch::Approx(f(x)).margin(1e-14));
    CHECK(f(x - 5 * kTwoPi) == Catch::Approx(f(x)).margin(1e-13));
  }
}

TEST_CASE("inner products") {
  QuadratureRule rule;
  auto s = CircleFunction::from_expression("sin(x)", kTwoPi);
  auto c = CircleFunction::from_expression("cos(x)", kTwoPi);
  auto one = CircleFunction::from_expression("1", kTwoPi);

  CHECK(inner_product(s, c, rule) == Catch::Approx(0.0).margin(1e-12));
  CHECK(inner_product(one, one, rule) == Catch::Approx(kTwoPi).epsilon(1e-13));

  // <sin, sin> against a brute-force Riemann sum
  double riemann = 0.0;
  const int N = 1000000;
  for (int i = 0; i < N; ++i) {
    double x = kTwoPi * (i + 0.5) / N;
    riemann += std::sin(x) * std::sin(x);
  }
  riemann *= kTwoPi / N;
  double q = inner_product(s, s, rule);
  CHECK(q == Catch::Approx(kPiL).epsilon(1e-12));
  CHECK(q == Catch::Approx(riemann).epsilon(1e-9));

  auto wrong = CircleFunction::from_expression("sin(x)", kPiL);
  CHECK_THROWS_AS(inner_product(s, wrong, rule), PeriodMismatch);
}

TEST_CASE("quadrature exactness on polynomials") {
  // 8 Gauss points per panel integrate degree <= 15 exactly
  QuadratureRule rule;
  for (int deg : {7, 12, 15}) {
    double got = rule.integrate([deg](double x) { return std::pow(x, deg); }, 0.0, 1.0);
    CHECK(got == Catch::Approx(1.0 / (deg + 1)).epsilon(1e-13));
  }
}

TEST_CASE("sign change counting") {
  auto s1 = CircleFunction::from_expression("sin(x)", kTwoPi);
  auto rep = count_sign_changes(s1, 0.0);
  REQUIRE(rep.count == 2);
  REQUIRE(rep.locations.size() == 2);
  CHECK(rep.locations[0] == Catch::Approx(0.0).margin(1e-10));
  CHECK(rep.locations[1] == Catch::Approx(kPiL).margin(1e-10));

  auto s2 = CircleFunction::from_expression("sin(2*x)", kTwoPi);
  CHECK(count_sign_changes(s2, 0.0).count == 4);

  auto one = CircleFunction::from_expression("1", kTwoPi);
  CHECK(count_sign_changes(one, 0.0).count == 0);

  auto half = CircleFunction::from_expression("1/2", kTwoPi);
  CHECK_THROWS_AS(count_sign_changes(half, 1.0), AllNeutral);
}

TEST_CASE("sign change count is even and alternating") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> amp(-1.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    double a = amp(rng), b = amp(rng), c = 0.2 * amp(rng);
    auto f = CircleFunction::from_callable(kTwoPi, [a, b, c](double x) {
      return a * std::sin(2 * x) + b * std::cos(3 * x) + c;
    });
    int count = 0;
    std::vector<double> locs;
    try {
      auto rep = count_sign_changes(f, 0.0);
      count = rep.count;
      locs = rep.locations;
    } catch (const AllNeutral&) {
      continue;
    }
    CHECK(count % 2 == 0);
    CHECK(int(locs.size()) == count);
    for (std::size_t i = 0; i + 1 < locs.size(); ++i) CHECK(locs[i] < locs[i + 1]);
  }
}

TEST_CASE("alternation points") {
  auto s2 = CircleFunction::from_expression("sin(2*x)", kTwoPi);
  auto ap = find_alternation_points(s2, 4, 1.0);
  REQUIRE(ap.points.size() == 4);
  CHECK(ap.c > 0);
  for (int j = 0; j < 4; ++j) {
    double want = (j % 2 == 0 ? 1.0 : -1.0) * ap.lead * ap.c;
    CHECK(s2(ap.points[j]) == Catch::Approx(want).margin(1e-10));
  }
  for (int j = 0; j + 1 < 4; ++j) CHECK(ap.points[j] < ap.points[j + 1]);

  // arcsin oracle: sin = 1/2 first at pi/6, then -1/2 at pi + pi/6
  auto s1 = CircleFunction::from_expression("sin(x)", kTwoPi);
  auto ap1 = find_alternation_points(s1, 2, 0.5);
  REQUIRE(ap1.points.size() == 2);
  CHECK(ap1.c == Catch::Approx(0.5));
  CHECK(ap1.points[0] == Catch::Approx(kPiL / 6).margin(1e-9));
  CHECK(ap1.points[1] == Catch::Approx(kPiL + kPiL / 6).margin(1e-9));

  auto one = CircleFunction::from_expression("1", kTwoPi);
  try {
    find_alternation_points(one, 2);
    FAIL("expected InsufficientSignChanges");
  } catch (const InsufficientSignChanges& e) {
    CHECK(e.found == 0);
    CHECK(e.needed == 2);
  }
}

TEST_CASE("symbolic derivatives match finite differences") {
  std::mt19937 rng(5);
  // stay away from the period seam where x*cos(x) wraps
  std::uniform_real_distribution<double> u(0.1, kTwoPi - 0.1);
  for (const char* text : {"sin(2*x)+cos(x)", "exp(sin(x))", "x*cos(x)", "tan(sin(x))"}) {
    auto f = CircleFunction::from_expression(text, kTwoPi);
    REQUIRE(f.has_symbolic_derivatives());
    for (int i = 0; i < 64; ++i) {
      double x = u(rng);
      double h = 1e-5;
      double fd = (f(x + h) - f(x - h)) / (2 * h);
      double sym = f.derivative(x, 1);
      CHECK(sym == Catch::Approx(fd).margin(1e-6 * std::max(1.0, std::abs(sym))));
    }
  }
}

TEST_CASE("sampled functions") {
  std::vector<double> xs, ys;
  for (int i = 0; i < 64; ++i) {
    double x = kTwoPi * i / 64;
    xs.push_back(x);
    ys.push_back(std::sin(x));
  }
  auto f = CircleFunction::from_samples(xs, ys, kTwoPi);
  for (int i = 0; i < 200; ++i) {
    double x = kTwoPi * i / 200;
    // the monotone limiter flattens slopes at the extrema, costing O(h^2)
    CHECK(f(x) == Catch::Approx(std::sin(x)).margin(1e-3));
  }
  CHECK(f(xs[3] + kTwoPi) == Catch::Approx(ys[3]).margin(1e-14));

  CHECK_THROWS_AS(CircleFunction::from_samples({0.0, 1.0}, {0.0, 0.0}, kTwoPi),
                  PreconditionError);
}

TEST_CASE("samples CSV round trip") {
  std::string path = "fncore_samples_test.csv";
  {
    std::ofstream out(path);
    out << "x,value\n";
    for (int i = 0; i < 32; ++i) {
      double x = kTwoPi * i / 32;
      out << fmt17(x) << "," << fmt17(std::cos(x)) << "\n";
    }
  }
  auto f = load_samples_csv(path, kTwoPi);
  CHECK(f(0.0) == Catch::Approx(1.0).margin(1e-12));
  CHECK(f(kPiL) == Catch::Approx(-1.0).margin(1e-3));

  {
    std::ofstream out(path);
    out << "t,v\n0,1\n";
  }
  CHECK_THROWS_AS(load_samples_csv(path, kTwoPi), ParseError);
  std::remove(path.c_str());
}

TEST_CASE("sign change count is diffeomorphism invariant") {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> u(0.1, 0.9);
  auto f = CircleFunction::from_expression("sin(3*x)+0.2*cos(x)", kTwoPi);
  int base = count_sign_changes(f, 0.0).count;
  for (int t = 0; t < 20; ++t) {
    // random monotone breakpoint spline
    std::vector<double> b{0.0, kTwoPi / 3, 2 * kTwoPi / 3};
    std::vector<double> im{kTwoPi * u(rng) * 0.2, kTwoPi * (0.2 + 0.3 * u(rng)),
                           kTwoPi * (0.55 + 0.3 * u(rng))};
    auto phi = CircleDiffeo::from_breakpoints(kTwoPi, b, im);
    CHECK(count_sign_changes(pullback(f, phi), 0.0).count == base);
  }
}
