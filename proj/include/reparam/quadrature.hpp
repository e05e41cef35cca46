#pragma once

// Composite Gauss-Legendre quadrature with panel doubling and optional
// splitting at known non-smooth points of the integrand.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <vector>

#include "reparam/errors.hpp"

namespace reparam {

namespace detail {

struct GaussNodes {
  std::vector<double> x;  // nodes on [-1, 1]
  std::vector<double> w;
};

// Nodes by Newton iteration on Legendre polynomials.
inline GaussNodes gauss_legendre(int p) {
  static std::map<int, GaussNodes> cache;
  auto it = cache.find(p);
  if (it != cache.end()) return it->second;

  GaussNodes gn;
  gn.x.resize(p);
  gn.w.resize(p);
  const double pi = 3.14159265358979323846;
  for (int i = 0; i < p; ++i) {
    double x = std::cos(pi * (i + 0.75) / (p + 0.5));
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= p; ++k) {
        double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      double dp = p * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= p; ++k) {
      double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    double dp = p * (x * p1 - p0) / (x * x - 1.0);
    gn.x[p - 1 - i] = x;
    gn.w[p - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  cache[p] = gn;
  return gn;
}

inline double gl_panel(const std::function<double(double)>& f, double a, double b,
                       const GaussNodes& gn) {
  double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double s = 0.0;
  for (std::size_t i = 0; i < gn.x.size(); ++i)
    s += gn.w[i] * f(mid + half * gn.x[i]);
  return s * half;
}

}  // namespace detail

struct QuadratureRule {
  int panels = 64;            // total panel budget at the first refinement level
  int points_per_panel = 8;   // in {4..16}
  double tol = 1e-10;         // refinement tolerance (relative to max(1, |I|))
  int max_doublings = 10;

  QuadratureRule() = default;
  QuadratureRule(int panels, int points, double tol)
      : panels(panels), points_per_panel(points), tol(tol) {
    if (panels < 8) throw PreconditionError("quadrature: panels must be >= 8");
    if (points_per_panel < 4 || points_per_panel > 16)
      throw PreconditionError("quadrature: points per panel must be in {4..16}");
    if (tol <= 0) throw PreconditionError("quadrature: tolerance must be positive");
  }

  // Integrate f over [a, b], splitting at the sorted interior points `splits`
  // (non-smooth abscissae), then refining composite panels until stable.
  double integrate(const std::function<double(double)>& f, double a, double b,
                   const std::vector<double>& splits = {}) const {
    std::vector<double> cuts;
    cuts.push_back(a);
    for (double s : splits)
      if (s > a + 1e-15 && s < b - 1e-15) cuts.push_back(s);
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end(),
                           [](double u, double v) { return std::abs(u - v) < 1e-14; }),
               cuts.end());

    const auto gn = detail::gauss_legendre(points_per_panel);
    double total_len = b - a;
    auto level_sum = [&](int level) {
      double s = 0.0;
      for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        double lo = cuts[k], hi = cuts[k + 1];
        int np = std::max(1, int(std::ceil(double(panels) * (hi - lo) / total_len))) << level;
        double h = (hi - lo) / np;
        for (int j = 0; j < np; ++j)
          s += detail::gl_panel(f, lo + j * h, lo + (j + 1) * h, gn);
      }
      return s;
    };

    double prev = level_sum(0);
    for (int level = 1; level <= max_doublings; ++level) {
      double cur = level_sum(level);
      if (std::abs(cur - prev) < tol * std::max(1.0, std::abs(cur))) return cur;
      prev = cur;
    }
    return prev;
  }
};

}  // namespace reparam
