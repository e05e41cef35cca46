// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on failure.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <string>
#include <vector>

#include "reparam/hill.hpp"
#include "reparam/shk.hpp"
#include "reparam/stepspace.hpp"

using namespace reparam;

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

int failures = 0;

void report(int id, const char* what, bool pass, const std::string& detail = "") {
  std::printf("criterion %d [%s]: %s%s%s\n", id, what, pass ? "PASS" : "FAIL",
              detail.empty() ? "" : "  ", detail.c_str());
  if (!pass) ++failures;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

// randomized low-harmonic input with a guaranteed sign-change count
CircleFunction random_oscillator(std::mt19937& rng, int base_harmonic, int needed) {
  std::uniform_real_distribution<double> amp(0.4, 1.0), pert(-0.05, 0.05);
  for (;;) {
    double a = amp(rng), b = amp(rng), c = pert(rng), d = pert(rng);
    int h = base_harmonic;
    auto f = CircleFunction::from_callable(kTwoPi, [a, b, c, d, h](double x) {
      return a * std::sin(h * x) + b * std::cos((h + 1) * x) + c * std::sin(x) + d;
    });
    try {
      if (count_sign_changes(f, 0.0).count >= needed) return f;
    } catch (const AllNeutral&) {
    }
  }
}

bool criterion_shk(int id, int order, int trials, double target, unsigned seed) {
  auto V = trig_system(order);
  const int needed = V.dimension() + 1;
  ChebyshevSystem V_fine(V.basis(), QuadratureRule(32, 12, 1e-14));
  std::mt19937 rng(seed);
  double worst = 0.0;
  bool ok = true;
  for (int t = 0; t < trials && ok; ++t) {
    CircleFunction f = random_oscillator(rng, order + 1, needed);
    SHKProblem prob{f, V};
    prob.residual_target = target;
    try {
      SHKSolution sol = solve_converse_shk(prob);
      double r = residual_vector(pullback(f, sol.phi), V_fine).cwiseAbs().maxCoeff();
      worst = std::max(worst, r);
      if (r >= target) ok = false;
      if (count_sign_changes(pullback(f, sol.phi), 0.0).count < needed) ok = false;
    } catch (const Error&) {
      ok = false;
    }
  }
  report(id, order == 1 ? "converse solver, first harmonics" : "converse solver, n = 5", ok,
         "worst residual " + fmt(worst));
  return ok;
}

bool criterion_hobby_rice() {
  bool ok = true;
  double worst = 0.0;
  {
    std::vector<std::function<double(double)>> V{[](double) { return 1.0; },
                                                 [](double t) { return t; }};
    auto h = canonicalize(step_from_sphere(solve_hobby_rice(V, 1.0)));
    ok = ok && h.intervals() == 3 && std::abs(h.breakpoints[0] - 0.25) < 1e-9 &&
         std::abs(h.breakpoints[1] - 0.75) < 1e-9;
  }
  {
    auto h = orth_alternating_step(trig_system(1));
    ok = ok && h.intervals() == 4;
    for (int k = 0; ok && k < 4; ++k) {
      auto [lo, hi] = h.interval(k);
      ok = std::abs((hi - lo) - kTwoPi / 4) < 1e-7;
    }
  }
  std::mt19937 rng(101);
  std::uniform_real_distribution<double> u(0.5, 3.0);
  for (int t = 0; t < 20 && ok; ++t) {
    double a = u(rng), b = u(rng), c = u(rng);
    std::vector<std::function<double(double)>> V{
        [a](double s) { return std::exp(a * (s - 0.5)); },
        [b](double s) { return std::cos(b * s); },
        [c](double s) { return s * s + c * s; }};
    try {
      double r = moment_map(solve_hobby_rice(V, 1.0), V).cwiseAbs().maxCoeff();
      worst = std::max(worst, r);
      if (r >= 1e-9) ok = false;
    } catch (const Error&) {
      ok = false;
    }
  }
  report(3, "orthogonal step partitions", ok, "worst residual " + fmt(worst));
  return ok;
}

StepFunction step_from_lengths(const std::vector<double>& lengths, int lead) {
  StepFunction h;
  h.domain = 1.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    if (i > 0) h.breakpoints.push_back(acc);
    h.signs.push_back(lead * ((i % 2 == 0) ? 1 : -1));
    acc += lengths[i];
  }
  return h;
}

bool criterion_faces() {
  std::mt19937 rng(19);
  std::normal_distribution<double> gauss(0.0, 1.0);
  bool ok = true;
  double worst = 0.0;
  for (int n = 1; n <= 4 && ok; ++n) {
    for (int t = 0; t < 25 && ok; ++t) {
      std::vector<double> sub(static_cast<std::size_t>(n));
      double s = 0.0;
      for (double& v : sub) {
        double g = gauss(rng);
        v = g * g;
        s += v;
      }
      for (double& v : sub) v /= s;
      for (int lead : {1, -1}) {
        std::vector<double> first{0.0};
        first.insert(first.end(), sub.begin(), sub.end());
        double d1 = step_l1_distance(canonicalize(step_from_lengths(first, lead)),
                                     canonicalize(step_from_lengths(sub, -lead)));
        std::vector<double> padded = sub;
        padded.push_back(0.0);
        double d2 = step_l1_distance(canonicalize(step_from_lengths(padded, lead)),
                                     canonicalize(step_from_lengths(sub, lead)));
        worst = std::max(worst, std::max(d1, d2));
        if (d1 >= 1e-12 || d2 >= 1e-12) ok = false;
      }
      // idempotence
      auto c1 = canonicalize(step_from_lengths(sub, 1));
      if (step_l1_distance(c1, canonicalize(c1)) >= 1e-14) ok = false;
    }
  }
  report(4, "partition face identities", ok, "worst L1 gap " + fmt(worst));
  return ok;
}

bool criterion_jacobians() {
  bool ok = true;
  double worst = 0.0;
  for (int order : {1, 2}) {
    auto V = trig_system(order);
    StepFunction h = orth_alternating_step(V);
    if (h.signs[0] < 0)
      for (int& sgn : h.signs) sgn = -sgn;
    AlphaFamily family(kTwoPi, h.breakpoints);
    auto map = alpha_map(h.as_circle_function(), V, family);
    Eigen::MatrixXd C = jacobian_at_origin(V, h.breakpoints);
    Eigen::MatrixXd Jfd =
        detail::fd_jacobian(map, std::vector<double>(h.breakpoints.size(), 0.0),
                            V.dimension(), 1e-5);
    double err = (Jfd - C).cwiseAbs().maxCoeff();
    worst = std::max(worst, err);
    if (err >= 1e-6) ok = false;
  }
  for (double c : {0.05, 0.1, 0.2}) {
    StepPotential p = closed_step_potential(1 + c, 1 - c);
    MonodromyJacobian J = monodromy_jacobian(p);  // throws if rank < 3
    if (J.sigma3 < 1e-6) ok = false;
    const double h = 1e-6;
    for (int j = 0; j < 4; ++j) {
      int nj = (j + 1) % 4;
      auto probe = [&](double s) {
        std::vector<double> lens = p.lengths;
        lens[std::size_t(j)] += s;
        lens[std::size_t(nj)] -= s;
        return sl2_coords(sl2_log(monodromy(StepPotential(p.values, lens)) * -1.0));
      };
      Eigen::Vector3d fd = (probe(h) - probe(-h)) / (2 * h);
      Eigen::Vector3d an = J.columns.col(j) - J.columns.col(nj);
      double err = (fd - an).cwiseAbs().maxCoeff() / std::max(1.0, an.cwiseAbs().maxCoeff());
      worst = std::max(worst, err);
      if (err >= 1e-5) ok = false;
    }
  }
  report(5, "jacobian anchors", ok, "worst deviation " + fmt(worst));
  return ok;
}

bool criterion_hill_exactness() {
  bool ok = true;
  double worst = 0.0;
  {
    double e = dist_to(rotation_exp(1.0, kPi), SL2Matrix::identity() * -1.0);
    worst = std::max(worst, e);
    if (e >= 1e-14) ok = false;
  }
  for (double k1 : {1.05, 1.1, 1.2}) {
    StepPotential p = closed_step_potential(k1, 2.0 - k1);
    double e = dist_to(monodromy(p), SL2Matrix::identity() * -1.0);
    worst = std::max(worst, e);
    if (e >= 1e-10) ok = false;
    FramePath path = integrate_frame(p.as_circle_function(), SL2Matrix::identity(), 1024);
    for (const SL2Matrix& F : path.F) {
      double d = std::abs(F.det() - 1.0);
      worst = std::max(worst, d);
      if (d >= 1e-9) ok = false;
    }
  }
  report(6, "closed-form and integrated frames", ok, "worst deviation " + fmt(worst));
  return ok;
}

bool criterion_ghys() {
  bool ok = true;
  std::string detail;
  try {
    auto k = CircleFunction::from_expression("1+0.2*cos(4*x)", kPi);
    GhysSolution sol = solve_converse_ghys(k);
    if (sol.closure_error >= 1e-6) ok = false;
    if (sol.schwarzian_error >= 1e-5) ok = false;
    detail = "closure " + fmt(sol.closure_error) + ", potential gap " +
             fmt(sol.schwarzian_error);
  } catch (const Error& e) {
    ok = false;
    detail = e.what();
  }
  // Mobius kernel: constant potential 1, arbitrary unimodular initial frame
  auto unit = CircleFunction::from_expression("1", kPi);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-0.35, 0.35);
  for (int t = 0; t < 3 && ok; ++t) {
    double a = 1.0 + u(rng), b = u(rng), c = u(rng);
    SL2Matrix M{a, b, c, (1.0 + b * c) / a};
    M = M * (1.0 / std::sqrt(M.det()));
    auto g = recover_diffeo(integrate_frame(unit, M, 8192).curve());
    auto S = schwarzian(g);
    for (int i = 0; i < 200; ++i) {
      double x = kPi * (i + 0.5) / 200;
      if (std::abs(S(x)) >= 1e-6) ok = false;
    }
  }
  report(7, "projective potential round trip", ok, detail);
  return ok;
}

bool criterion_cli_negative_paths() {
  bool ok = true;
  auto run = [](const std::string& args) {
    std::string cmd = std::string(CLI_BINARY_PATH) + " " + args + " >/dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  };
  if (run("shk --f \"2+sin(x)\" --system trig:0 --out .") != 2) ok = false;
  if (run("ghys --k \"1.5+0.2*cos(4*x)\" --out .") != 2) ok = false;
  report(8, "error contract of the command line", ok);
  return ok;
}

}  // namespace

int main() {
  criterion_shk(1, 1, 10, 1e-8, 1u);
  criterion_shk(2, 2, 10, 1e-7, 2u);
  criterion_hobby_rice();
  criterion_faces();
  criterion_jacobians();
  criterion_hill_exactness();
  criterion_ghys();
  criterion_cli_negative_paths();
  if (failures > 0) {
    std::printf("%d criterion(s) failed\n", failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
