#pragma once

// +-1 step functions, their sphere parametrization, the moment map and its
// zero finder, and canonicalization.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "reparam/chebyshev.hpp"
#include "reparam/circle_function.hpp"
#include "reparam/errors.hpp"
#include "reparam/quadrature.hpp"

namespace reparam {

// A point of S^n encoding a signed partition: interval lengths x_i^2 (times
// the domain length) with sign(x_i) on each interval.
struct SignedPartition {
  Eigen::VectorXd x;
  double domain = 1.0;

  SignedPartition(Eigen::VectorXd coords, double domain_length)
      : x(std::move(coords)), domain(domain_length) {
    if (!(domain > 0)) throw PreconditionError("signed partition: domain length must be positive");
    double s = x.squaredNorm();
    if (std::abs(s - 1.0) > 1e-12) {
      if (s <= 0) throw PreconditionError("signed partition: zero coordinate vector");
      x /= std::sqrt(s);
    }
  }
};

struct StepFunction {
  double domain = 1.0;
  std::vector<double> breakpoints;  // interior cuts, increasing in (0, domain)
  std::vector<int> signs;           // one per interval, breakpoints.size()+1 entries
  bool canonical = false;

  int intervals() const { return int(signs.size()); }

  double operator()(double t) const {
    std::size_t k = std::upper_bound(breakpoints.begin(), breakpoints.end(), t) -
                    breakpoints.begin();
    return double(signs[k]);
  }

  // interval k as [lo, hi)
  std::pair<double, double> interval(int k) const {
    double lo = (k == 0) ? 0.0 : breakpoints[k - 1];
    double hi = (k + 1 == intervals()) ? domain : breakpoints[k];
    return {lo, hi};
  }

  CircleFunction as_circle_function() const {
    StepFunction h = *this;
    std::vector<double> kinks = breakpoints;
    kinks.insert(kinks.begin(), 0.0);
    return CircleFunction::from_callable(domain, [h](double t) { return h(t); }, kinks);
  }

  // Number of sign intervals when the two ends of the domain are glued.
  int circular_interval_count() const {
    int n = intervals();
    if (n > 1 && signs.front() == signs.back()) return n - 1;
    return n;
  }
};

inline StepFunction step_from_sphere(const SignedPartition& p) {
  StepFunction h;
  h.domain = p.domain;
  double acc = 0.0;
  for (int i = 0; i < p.x.size(); ++i) {
    double len = p.x(i) * p.x(i) * p.domain;
    if (len <= 0.0) continue;  // zero-length intervals contribute nothing
    if (!h.signs.empty()) h.breakpoints.push_back(acc);
    h.signs.push_back(p.x(i) > 0 ? 1 : -1);
    acc += len;
  }
  if (h.signs.empty())
    throw PreconditionError("signed partition has no interval of positive length");
  return h;
}

inline StepFunction canonicalize(const StepFunction& h) {
  const double eps_len = 1e-14 * h.domain;
  StepFunction out;
  out.domain = h.domain;
  for (int k = 0; k < h.intervals(); ++k) {
    auto [lo, hi] = h.interval(k);
    if (hi - lo <= eps_len) continue;  // drop zero-length
    if (!out.signs.empty() && out.signs.back() == h.signs[k]) {
      // merge with previous run: extend it (no new breakpoint)
      continue;
    }
    if (!out.signs.empty()) out.breakpoints.push_back(lo);
    out.signs.push_back(h.signs[k]);
  }
  // merging may have re-exposed breakpoints at dropped intervals; the loop
  // above already skips them because breakpoints are only emitted on a sign
  // flip at a surviving interval start
  out.canonical = true;
  return out;
}

namespace detail {

inline QuadratureRule moment_rule() { return QuadratureRule(8, 12, 1e-13); }

}  // namespace detail

// Component i is the integral of h against V[i], summed interval by interval.
inline Eigen::VectorXd moment_map(const SignedPartition& p,
                                  const std::vector<std::function<double(double)>>& V) {
  StepFunction h = step_from_sphere(p);
  auto rule = detail::moment_rule();
  Eigen::VectorXd out(long(V.size()));
  for (std::size_t i = 0; i < V.size(); ++i) {
    double s = 0.0;
    for (int k = 0; k < h.intervals(); ++k) {
      auto [lo, hi] = h.interval(k);
      s += h.signs[k] * rule.integrate(V[i], lo, hi);
    }
    out(long(i)) = s;
  }
  return out;
}

struct HobbyRiceOptions {
  int seeds = 32;
  int max_iterations = 80;
  double target = 1e-9;
  unsigned rng_seed = 1u;
};

// Zero of the moment map on the sphere by damped Newton with pseudo-inverse
// steps, from antipodally paired deterministic starts.
inline SignedPartition solve_hobby_rice(const std::vector<std::function<double(double)>>& V,
                                        double domain_length,
                                        const HobbyRiceOptions& opt = {}) {
  const int n = int(V.size());
  const int dim = n + 1;

  {  // linear independence via the normalized Gram matrix
    auto rule = detail::moment_rule();
    Eigen::MatrixXd G(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j)
        G(i, j) = G(j, i) =
            rule.integrate([&](double t) { return V[i](t) * V[j](t); }, 0.0, domain_length);
    Eigen::VectorXd d = G.diagonal().cwiseSqrt();
    for (int i = 0; i < n; ++i) {
      if (!(d(i) > 0)) throw DependentBasis("basis function with zero norm");
      for (int j = 0; j < n; ++j) G(i, j) /= d(i) * d(j);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
    if (es.eigenvalues().minCoeff() <= 1e-10)
      throw DependentBasis("basis is numerically dependent");
  }

  auto F = [&](const Eigen::VectorXd& raw) {
    Eigen::VectorXd u = raw.normalized();
    return moment_map(SignedPartition(u, domain_length), V);
  };

  std::mt19937 rng(opt.rng_seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double best_residual = std::numeric_limits<double>::infinity();

  for (int s = 0; s < opt.seeds; ++s) {
    Eigen::VectorXd u0(dim);
    for (int i = 0; i < dim; ++i) u0(i) = gauss(rng);
    u0.normalize();
    for (int anti = 0; anti < 2; ++anti) {
      Eigen::VectorXd u = (anti == 0) ? u0 : Eigen::VectorXd(-u0);
      Eigen::VectorXd r = F(u);
      double rn = r.cwiseAbs().maxCoeff();
      bool converged = rn < opt.target;
      for (int it = 0; it < opt.max_iterations && !converged; ++it) {
        // finite-difference Jacobian in ambient coordinates
        Eigen::MatrixXd J(n, dim);
        const double hstep = 1e-7;
        for (int j = 0; j < dim; ++j) {
          Eigen::VectorXd up = u, um = u;
          up(j) += hstep;
          um(j) -= hstep;
          J.col(j) = (F(up) - F(um)) / (2 * hstep);
        }
        Eigen::VectorXd step =
            J.completeOrthogonalDecomposition().pseudoInverse() * (-r);
        double lambda = 1.0;
        bool improved = false;
        for (int half = 0; half < 25; ++half) {
          Eigen::VectorXd cand = (u + lambda * step).normalized();
          Eigen::VectorXd rc = F(cand);
          double rcn = rc.cwiseAbs().maxCoeff();
          if (rcn < rn) {
            u = cand;
            r = rc;
            rn = rcn;
            improved = true;
            break;
          }
          lambda *= 0.5;
        }
        if (rn < opt.target) converged = true;
        else if (!improved) break;
      }
      best_residual = std::min(best_residual, rn);
      if (converged) return SignedPartition(u, domain_length);
    }
  }
  throw ConvergenceFailure("Hobby-Rice zero finder exhausted its seeds", best_residual);
}

// The alternating step function of a Chebyshev system: canonical, exactly
// n+1 intervals, orthogonal to V. Retries with fresh seeds if a degenerate
// zero (fewer canonical intervals) is returned.
inline StepFunction orth_alternating_step(const ChebyshevSystem& V,
                                          double residual_target = 1e-9) {
  if (!verify_chebyshev(V, 200).pass)
    throw PreconditionError("basis failed the Chebyshev falsifier");
  const int n = V.dimension();
  std::vector<std::function<double(double)>> basis;
  for (int i = 0; i < n; ++i) {
    const CircleFunction& g = V.g(i);
    basis.push_back([g](double t) { return g(t); });
  }
  HobbyRiceOptions opt;
  opt.target = residual_target;
  double best = std::numeric_limits<double>::infinity();
  for (int round = 0; round < 8; ++round) {
    opt.rng_seed = 1u + unsigned(round) * 1000003u;
    try {
      SignedPartition p = solve_hobby_rice(basis, V.period(), opt);
      StepFunction h = canonicalize(step_from_sphere(p));
      if (h.circular_interval_count() == n + 1 && h.intervals() == n + 1) return h;
    } catch (const ConvergenceFailure& cf) {
      best = std::min(best, cf.best_residual);
    }
  }
  throw ConvergenceFailure("no alternating orthogonal step with n+1 intervals found", best);
}

// L1 distance between two step functions on the same domain, computed
// exactly from the merged breakpoint list.
inline double step_l1_distance(const StepFunction& a, const StepFunction& b) {
  if (std::abs(a.domain - b.domain) > 1e-12)
    throw PreconditionError("step functions live on different domains");
  std::vector<double> cuts{0.0, a.domain};
  cuts.insert(cuts.end(), a.breakpoints.begin(), a.breakpoints.end());
  cuts.insert(cuts.end(), b.breakpoints.begin(), b.breakpoints.end());
  std::sort(cuts.begin(), cuts.end());
  double dist = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    double mid = 0.5 * (cuts[k] + cuts[k + 1]);
    dist += std::abs(a(mid) - b(mid)) * (cuts[k + 1] - cuts[k]);
  }
  return dist;
}

}  // namespace reparam
