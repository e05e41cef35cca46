// Command-line front end: parse a problem from flags, run the requested
// solver, emit CSV/SVG/JSON artifacts plus a verification report.

#include <CLI11.hpp>

#include <Eigen/Dense>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "reparam/hill.hpp"
#include "reparam/io.hpp"
#include "reparam/shk.hpp"

namespace fs = std::filesystem;
using namespace reparam;

namespace {

std::vector<double> parse_schedule(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(std::stod(tok));
  }
  if (out.empty()) throw PreconditionError("eps schedule is empty");
  return out;
}

std::string join17(const Eigen::VectorXd& v) {
  std::string s;
  for (long i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += fmt17(v(i));
  }
  return s;
}

std::string join17(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += fmt17(v[i]);
  }
  return s;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw PreconditionError("output directory not writable: " + dir);
}

struct Args {
  std::string f, k, system = "trig:1";
  double tol = 0.0;  // 0 means command default
  std::string eps_schedule = "1e-2,1e-3,1e-4";
  std::string out = ".";
  unsigned seed = 0;
  int grid = 1024;
  std::string coords;  // step-space sphere point
  double domain = 1.0;
};

int run_shk(const Args& a) {
  ensure_dir(a.out);
  ChebyshevSystem V = parse_system(a.system);
  CircleFunction f = parse_function_arg(a.f, V.period());
  SHKProblem problem{f, V};
  problem.eps_schedule = parse_schedule(a.eps_schedule);
  if (a.tol > 0) problem.residual_target = a.tol;
  SHKSolution sol = solve_converse_shk(problem);

  CircleFunction fphi = pullback(f, sol.phi);
  write_function_csv(a.out + "/input.csv", f, a.grid);
  write_function_csv(a.out + "/output.csv", fphi, a.grid);
  write_diffeo_csv(a.out + "/phi.csv", sol.phi, a.grid);
  write_diffeo_json(a.out + "/phi.json", sol.phi);
  write_overlay_svg(a.out + "/overlay.svg", {{"input", f}, {"reparametrized", fphi}});

  int sc = count_sign_changes(fphi, 1e-9 * fphi.max_abs()).count;
  std::string report =
      "{\n  \"alpha\": [" + join17(sol.alpha) + "],\n  \"residuals\": [" +
      join17(sol.residuals) + "],\n  \"eps\": " + fmt17(sol.eps_used) +
      ",\n  \"iterations\": " + std::to_string(sol.iterations) +
      ",\n  \"jacobian_condition\": " + fmt17(sol.jacobian_condition) +
      ",\n  \"scale\": " + fmt17(sol.scale) +
      ",\n  \"sign_changes_after\": " + std::to_string(sc) +
      ",\n  \"phi\": \"phi.csv\"\n}\n";
  detail::write_text(a.out + "/report.json", report);
  std::printf("converse solve ok: max residual %s (report in %s/report.json)\n",
              fmt17(sol.residuals.cwiseAbs().maxCoeff()).c_str(), a.out.c_str());
  return 0;
}

int run_ghys(const Args& a) {
  ensure_dir(a.out);
  CircleFunction k = parse_function_arg(a.k, kPi);
  GhysOptions opt;
  opt.eps_schedule = parse_schedule(a.eps_schedule);
  if (a.tol > 0) opt.residual_target = a.tol;
  if (a.grid > opt.verify_grid) opt.verify_grid = a.grid;
  GhysSolution sol = solve_converse_ghys(k, opt);

  write_function_csv(a.out + "/potential.csv", sol.pulled_potential, a.grid);
  write_function_csv(a.out + "/schwarzian.csv", schwarzian(sol.g), a.grid);
  write_diffeo_csv(a.out + "/phi.csv", sol.phi, a.grid);
  write_diffeo_json(a.out + "/phi.json", sol.phi);
  write_curve_csv(a.out + "/curve.csv", sol.curve);
  write_curve_svg(a.out + "/curve.svg", sol.curve);

  std::string report =
      "{\n  \"c\": " + fmt17(sol.c_used) + ",\n  \"eps\": " + fmt17(sol.eps_used) +
      ",\n  \"iterations\": " + std::to_string(sol.iterations) +
      ",\n  \"closure_error\": " + fmt17(sol.closure_error) +
      ",\n  \"schwarzian_error\": " + fmt17(sol.schwarzian_error) +
      ",\n  \"phi\": \"phi.csv\",\n  \"curve\": \"curve.csv\"\n}\n";
  detail::write_text(a.out + "/report.json", report);
  std::printf("closed curve found: closure %s, Schwarzian defect %s\n",
              fmt17(sol.closure_error).c_str(), fmt17(sol.schwarzian_error).c_str());
  return 0;
}

int run_hobby_rice(const Args& a) {
  ensure_dir(a.out);
  ChebyshevSystem V = parse_system(a.system);
  std::vector<std::function<double(double)>> basis;
  for (int i = 0; i < V.dimension(); ++i) {
    CircleFunction g = V.g(i);
    basis.push_back([g](double t) { return g(t); });
  }
  HobbyRiceOptions opt;
  opt.rng_seed = a.seed + 1;
  if (a.tol > 0) opt.target = a.tol;
  SignedPartition p = solve_hobby_rice(basis, V.period(), opt);
  StepFunction h = canonicalize(step_from_sphere(p));
  Eigen::VectorXd moments = moment_map(p, basis);

  write_step_json(a.out + "/step.json", h);
  write_step_csv(a.out + "/step.csv", h, a.grid);
  std::string report = "{\n  \"residuals\": [" + join17(moments) +
                       "],\n  \"intervals\": " + std::to_string(h.intervals()) +
                       ",\n  \"step\": \"step.json\"\n}\n";
  detail::write_text(a.out + "/report.json", report);
  std::printf("sign partition found: %d intervals, max moment %s\n", h.intervals(),
              fmt17(moments.cwiseAbs().maxCoeff()).c_str());
  return 0;
}

int run_verify(const Args& a) {
  ensure_dir(a.out);
  ChebyshevSystem V = parse_system(a.system);
  CircleFunction f = parse_function_arg(a.f, V.period());
  Eigen::VectorXd r = residual_vector(f, V);
  int sc = 0;
  try {
    sc = count_sign_changes(f, 1e-9 * f.max_abs()).count;
  } catch (const AllNeutral&) {
    sc = 0;
  }
  bool orthogonal = r.cwiseAbs().maxCoeff() < 1e-8;
  bool pass = orthogonal && sc >= V.dimension() + 1;
  std::printf("residuals: [%s]\n", join17(r).c_str());
  std::printf("sign changes: %d (oscillation bound needs >= %d)\n", sc, V.dimension() + 1);
  if (!orthogonal)
    std::printf("not orthogonal: max residual %s\n", fmt17(r.cwiseAbs().maxCoeff()).c_str());
  else
    std::printf("%s\n", pass ? "pass" : "FAIL: orthogonal but too few sign changes");
  std::string report = "{\n  \"residuals\": [" + join17(r) +
                       "],\n  \"sign_changes\": " + std::to_string(sc) +
                       ",\n  \"orthogonal\": " + (orthogonal ? "true" : "false") +
                       ",\n  \"pass\": " + (pass ? "true" : "false") + "\n}\n";
  detail::write_text(a.out + "/report.json", report);
  return 0;
}

int run_step_space(const Args& a) {
  ensure_dir(a.out);
  std::vector<double> coords;
  std::stringstream ss(a.coords);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) coords.push_back(std::stod(tok));
  if (coords.size() < 2)
    throw PreconditionError("step-space needs --x with at least two coordinates");
  Eigen::VectorXd x(long(coords.size()));
  for (std::size_t i = 0; i < coords.size(); ++i) x(long(i)) = coords[i];
  SignedPartition p(x, a.domain);
  StepFunction raw = step_from_sphere(p);
  StepFunction h = canonicalize(raw);
  write_step_json(a.out + "/step.json", h);
  write_step_csv(a.out + "/step.csv", h, a.grid);
  std::string report = "{\n  \"intervals_raw\": " + std::to_string(raw.intervals()) +
                       ",\n  \"intervals_canonical\": " + std::to_string(h.intervals()) +
                       ",\n  \"step\": \"step.json\"\n}\n";
  detail::write_text(a.out + "/report.json", report);
  std::printf("canonical step: %d intervals on domain %s\n", h.intervals(),
              fmt17(h.domain).c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"circle reparametrization solvers"};
  app.require_subcommand(1);
  Args a;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--tol", a.tol, "residual target (command default when omitted)");
    cmd->add_option("--out", a.out, "output directory");
    cmd->add_option("--seed", a.seed, "random seed");
    cmd->add_option("--grid", a.grid, "sample grid for CSV/SVG output");
  };

  auto* shk = app.add_subcommand("shk", "reparametrize f to be orthogonal to a system");
  shk->add_option("--f", a.f, "function expression or @file.csv")->required();
  shk->add_option("--system", a.system, "trig:k or custom:@basis.json");
  shk->add_option("--eps-schedule", a.eps_schedule, "comma separated closeness levels");
  add_common(shk);

  auto* ghys = app.add_subcommand("ghys", "reparametrize a Hill potential so the curve closes");
  ghys->add_option("--k", a.k, "potential expression or @file.csv (period pi)")->required();
  ghys->add_option("--eps-schedule", a.eps_schedule, "comma separated closeness levels");
  add_common(ghys);

  auto* hr = app.add_subcommand("hobby-rice", "sign partition orthogonal to a system");
  hr->add_option("--system", a.system, "trig:k or custom:@basis.json");
  add_common(hr);

  auto* verify = app.add_subcommand("verify", "residuals and oscillation count of f");
  verify->add_option("--f", a.f, "function expression or @file.csv")->required();
  verify->add_option("--system", a.system, "trig:k or custom:@basis.json");
  add_common(verify);

  auto* stepsp = app.add_subcommand("step-space", "canonical step function of a sphere point");
  stepsp->add_option("--x", a.coords, "comma separated sphere coordinates")->required();
  stepsp->add_option("--domain", a.domain, "domain length");
  add_common(stepsp);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (shk->parsed()) return run_shk(a);
    if (ghys->parsed()) return run_ghys(a);
    if (hr->parsed()) return run_hobby_rice(a);
    if (verify->parsed()) return run_verify(a);
    if (stepsp->parsed()) return run_step_space(a);
  } catch (const ConvergenceFailure& e) {
    std::fprintf(stderr, "error: %s (best residual %s)\n", e.what(),
                 fmt17(e.best_residual).c_str());
    return 3;
  } catch (const PreconditionError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
