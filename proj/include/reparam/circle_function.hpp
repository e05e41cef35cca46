#pragma once

// Periodic real functions on a circle of prescribed period, sign-change
// analysis and L2 inner products.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "reparam/errors.hpp"
#include "reparam/expr.hpp"
#include "reparam/quadrature.hpp"

namespace reparam {

namespace detail {

// Shape-preserving cubic Hermite interpolant (Fritsch-Carlson slopes).
class MonotoneCubic {
public:
  MonotoneCubic() = default;

  // cyclic: slopes at the first/last knot are computed from wrapped secants,
  // assuming the data continues with increment `wrap_increment` in y per
  // period x.back()-x.front(). For plain data use cyclic=false.
  MonotoneCubic(std::vector<double> x, std::vector<double> y, bool cyclic = false,
                double wrap_increment = 0.0)
      : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n)
      throw PreconditionError("interpolation: need >= 2 matching knots");
    for (std::size_t i = 0; i + 1 < n; ++i)
      if (!(x_[i + 1] > x_[i]))
        throw PreconditionError("interpolation: knots must be strictly increasing");

    std::vector<double> h(n - 1), d(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      h[i] = x_[i + 1] - x_[i];
      d[i] = (y_[i + 1] - y_[i]) / h[i];
    }
    m_.assign(n, 0.0);
    auto fc = [](double h0, double h1, double d0, double d1) {
      if (d0 == 0.0 || d1 == 0.0 || (d0 > 0) != (d1 > 0)) return 0.0;
      double w1 = 2 * h1 + h0, w2 = h1 + 2 * h0;
      return (w1 + w2) / (w1 / d0 + w2 / d1);
    };
    for (std::size_t i = 1; i + 1 < n; ++i) m_[i] = fc(h[i - 1], h[i], d[i - 1], d[i]);
    if (cyclic) {
      // wrapped secant between the last and (virtual) first-plus-period knot
      double hw = h[n - 2], dw = d[n - 2];
      double h0 = h[0], d0 = d[0];
      // The wrap assumes y continues: secant before knot 0 equals d[n-2]
      // only when the first and last knots are identified; caller ensures
      // y_.back() == y_.front() + wrap_increment.
      (void)wrap_increment;
      m_[0] = fc(hw, h0, dw, d0);
      m_[n - 1] = m_[0];
    } else {
      // one-sided endpoint slopes, clipped for shape preservation
      auto endpoint = [](double h0, double h1, double d0, double d1) {
        double m = ((2 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if ((m > 0) != (d0 > 0) || d0 == 0.0) m = 0.0;
        else if ((d0 > 0) != (d1 > 0) && std::abs(m) > 3 * std::abs(d0)) m = 3 * d0;
        return m;
      };
      m_[0] = (n == 2) ? d[0] : endpoint(h[0], h[1], d[0], d[1]);
      m_[n - 1] = (n == 2) ? d[n - 2] : endpoint(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
    }
  }

  double operator()(double t) const { return eval_impl(t).first; }
  double derivative(double t) const { return eval_impl(t).second; }
  const std::vector<double>& knots() const { return x_; }
  const std::vector<double>& values() const { return y_; }

private:
  std::vector<double> x_, y_, m_;

  std::pair<double, double> eval_impl(double t) const {
    std::size_t i = segment(t);
    double h = x_[i + 1] - x_[i];
    double s = (t - x_[i]) / h;
    double s2 = s * s, s3 = s2 * s;
    double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
    double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
    double v = h00 * y_[i] + h10 * h * m_[i] + h01 * y_[i + 1] + h11 * h * m_[i + 1];
    double dh00 = (6 * s2 - 6 * s) / h, dh10 = (3 * s2 - 4 * s + 1);
    double dh01 = (-6 * s2 + 6 * s) / h, dh11 = (3 * s2 - 2 * s);
    double dv = dh00 * y_[i] + dh10 * m_[i] + dh01 * y_[i + 1] + dh11 * m_[i + 1];
    return {v, dv};
  }

  std::size_t segment(double t) const {
    if (t <= x_.front()) return 0;
    if (t >= x_.back()) return x_.size() - 2;
    auto it = std::upper_bound(x_.begin(), x_.end(), t);
    return std::size_t(it - x_.begin()) - 1;
  }
};

}  // namespace detail

// A continuous real function on a circle of prescribed period. Evaluation
// reduces the argument modulo the period. Derivatives are symbolic for
// expression bodies and finite-difference otherwise.
class CircleFunction {
public:
  CircleFunction() = default;

  static CircleFunction from_expression(const std::string& text, double period) {
    check_period(period);
    ExprPtr body = parse_expr_tree(text);
    CircleFunction f;
    f.period_ = period;
    f.eval_ = [body](double x) { return body->eval(x); };
    ExprPtr d = body;
    for (int k = 0; k < 3; ++k) {
      d = d->derivative();
      ExprPtr dk = d;
      f.deriv_[k] = [dk](double x) { return dk->eval(x); };
    }
    // finiteness probe
    const int probe = 4096;
    for (int i = 0; i < probe; ++i) {
      double v = f(period * i / probe);
      if (!std::isfinite(v))
        throw DomainError("expression is non-finite at x=" +
                          std::to_string(period * i / probe));
    }
    return f;
  }

  static CircleFunction from_samples(const std::vector<double>& xs,
                                     const std::vector<double>& ys, double period) {
    check_period(period);
    if (xs.size() < 16)
      throw PreconditionError("sampled function needs >= 16 nodes");
    if (xs.front() < 0 || xs.back() >= period)
      throw PreconditionError("sample abscissae must lie in [0, period)");
    std::vector<double> x = xs, y = ys;
    x.push_back(xs.front() + period);
    y.push_back(ys.front());
    auto spline = std::make_shared<detail::MonotoneCubic>(x, y, /*cyclic=*/true);
    double x0 = xs.front();
    CircleFunction f;
    f.period_ = period;
    f.eval_ = [spline, x0, period](double x) {
      if (x < x0) x += period;
      return (*spline)(x);
    };
    f.kinks_ = xs;
    return f;
  }

  static CircleFunction from_callable(double period, std::function<double(double)> fn,
                                      std::vector<double> kinks = {}) {
    check_period(period);
    CircleFunction f;
    f.period_ = period;
    f.eval_ = std::move(fn);
    f.kinks_ = std::move(kinks);
    std::sort(f.kinks_.begin(), f.kinks_.end());
    return f;
  }

  double period() const { return period_; }

  double operator()(double x) const { return eval_(reduce(x)); }

  double reduce(double x) const {
    double r = std::fmod(x, period_);
    if (r < 0) r += period_;
    return r;
  }

  bool has_symbolic_derivatives() const { return bool(deriv_[0]); }

  // order in {1,2,3}; finite differences when no symbolic body is present
  double derivative(double x, int order = 1) const {
    if (order < 1 || order > 3) throw PreconditionError("derivative order must be 1..3");
    if (deriv_[order - 1]) return deriv_[order - 1](reduce(x));
    double h = 1e-5 * std::max(1.0, period_ / 6.283185307179586);
    if (order == 1) return ((*this)(x + h) - (*this)(x - h)) / (2 * h);
    if (order == 2) return ((*this)(x + h) - 2 * (*this)(x) + (*this)(x - h)) / (h * h);
    return ((*this)(x + 2 * h) - 2 * (*this)(x + h) + 2 * (*this)(x - h) - (*this)(x - 2 * h)) /
           (2 * h * h * h);
  }

  const std::vector<double>& kinks() const { return kinks_; }

  double max_abs(int grid = 4096) const {
    double m = 0.0;
    for (int i = 0; i < grid; ++i) m = std::max(m, std::abs((*this)(period_ * i / grid)));
    return m;
  }

  // f + a
  CircleFunction shifted(double a) const {
    CircleFunction g = *this;
    auto base = eval_;
    g.eval_ = [base, a](double x) { return base(x) + a; };
    for (auto& d : g.deriv_) d = deriv_[&d - &g.deriv_[0]];
    return g;
  }

  // a * f
  CircleFunction scaled(double a) const {
    CircleFunction g = *this;
    auto base = eval_;
    g.eval_ = [base, a](double x) { return a * base(x); };
    for (int k = 0; k < 3; ++k) {
      if (deriv_[k]) {
        auto d = deriv_[k];
        g.deriv_[k] = [d, a](double x) { return a * d(x); };
      }
    }
    return g;
  }

private:
  double period_ = 6.283185307179586476925286766559;
  std::function<double(double)> eval_;
  std::array<std::function<double(double)>, 3> deriv_{};
  std::vector<double> kinks_;

  static void check_period(double p) {
    if (!(p > 0)) throw PreconditionError("period must be positive");
  }

  friend CircleFunction with_symbolic_derivatives(CircleFunction,
                                                  std::function<double(double)>,
                                                  std::function<double(double)>,
                                                  std::function<double(double)>);
};

inline CircleFunction with_symbolic_derivatives(CircleFunction f,
                                                std::function<double(double)> d1,
                                                std::function<double(double)> d2,
                                                std::function<double(double)> d3) {
  f.deriv_[0] = std::move(d1);
  f.deriv_[1] = std::move(d2);
  f.deriv_[2] = std::move(d3);
  return f;
}

inline double inner_product(const CircleFunction& f, const CircleFunction& g,
                            const QuadratureRule& rule = QuadratureRule()) {
  if (std::abs(f.period() - g.period()) > 1e-12)
    throw PeriodMismatch("inner_product: functions have different periods");
  std::vector<double> splits = f.kinks();
  splits.insert(splits.end(), g.kinks().begin(), g.kinks().end());
  std::sort(splits.begin(), splits.end());
  return rule.integrate([&](double x) { return f(x) * g(x); }, 0.0, f.period(), splits);
}

struct SignChangeReport {
  int count = 0;
  std::vector<double> locations;  // increasing, in [0, period)
  double tol = 0.0;
};

// Counts sign changes over one period. Values with |f| <= tol are neutral
// and do not break a sign run. Crossing abscissae are refined by bisection.
inline SignChangeReport count_sign_changes(const CircleFunction& f, double tol = 0.0,
                                           int grid = 1024) {
  if (tol < 0) throw PreconditionError("sign counting: tol must be >= 0");
  const double P = f.period();
  std::vector<double> xs(grid), vs(grid);
  std::vector<int> sgn(grid, 0);
  bool any = false;
  for (int i = 0; i < grid; ++i) {
    xs[i] = P * i / grid;
    vs[i] = f(xs[i]);
    if (vs[i] > tol) { sgn[i] = 1; any = true; }
    else if (vs[i] < -tol) { sgn[i] = -1; any = true; }
  }
  if (!any) throw AllNeutral("|f| <= tol on the whole probe grid");

  // indices of signed nodes, in cyclic order
  std::vector<int> signed_idx;
  for (int i = 0; i < grid; ++i)
    if (sgn[i] != 0) signed_idx.push_back(i);

  SignChangeReport rep;
  rep.tol = tol;
  const std::size_t M = signed_idx.size();
  for (std::size_t k = 0; k < M; ++k) {
    int i = signed_idx[k];
    int j = signed_idx[(k + 1) % M];
    if (sgn[i] == sgn[j]) continue;
    double a = xs[i], b = xs[j];
    if (b <= a) b += P;  // wrap across the seam
    double fa = vs[i];
    // bisection to 1e-12 abscissa accuracy
    while (b - a > 1e-12) {
      double mid = 0.5 * (a + b);
      double fm = f(mid);
      if (fm == 0.0) { a = b = mid; break; }
      if ((fm > 0) == (fa > 0)) { a = mid; fa = fm; }
      else b = mid;
    }
    double loc = f.reduce(0.5 * (a + b));
    if (loc >= P - 1e-9) loc = 0.0;
    rep.locations.push_back(loc);
  }
  std::sort(rep.locations.begin(), rep.locations.end());
  rep.count = int(rep.locations.size());
  return rep;
}

struct AlternationPoints {
  double c = 0.0;              // positive level
  std::vector<double> points;  // increasing; f(points[j]) = lead * (-1)^j * c
  int lead = 1;                // sign of f at the first point
};

// Locates m points at which f alternates between the levels +-c.
inline AlternationPoints find_alternation_points(const CircleFunction& f, int m,
                                                 std::optional<double> c_hint = {}) {
  if (m < 2 || m % 2 != 0)
    throw PreconditionError("alternation: m must be even and >= 2");
  SignChangeReport rep;
  try {
    rep = count_sign_changes(f, 0.0);
  } catch (const AllNeutral&) {
    throw InsufficientSignChanges(0, m);
  }
  const int K = rep.count;
  if (K < m) throw InsufficientSignChanges(K, m);
  const double P = f.period();

  // sign runs between consecutive crossings (cyclically)
  struct Run { double lo, hi, peak_x, peak; int sign; };
  std::vector<Run> runs(K);
  for (int r = 0; r < K; ++r) {
    double lo = rep.locations[r];
    double hi = (r + 1 < K) ? rep.locations[r + 1] : rep.locations[0] + P;
    Run& run = runs[r];
    run.lo = lo;
    run.hi = hi;
    run.peak = 0.0;
    int samples = std::max(64, int(512 * (hi - lo) / P));
    for (int s = 1; s < samples; ++s) {
      double x = lo + (hi - lo) * s / samples;
      double v = f(x);
      if (std::abs(v) > run.peak) { run.peak = std::abs(v); run.peak_x = x; }
    }
    run.sign = f(0.5 * (lo + hi)) >= 0 ? 1 : -1;
  }

  // choose m consecutive runs that do not wrap, maximizing the smallest peak
  int best_start = -1;
  double best_min_peak = -1.0;
  for (int s = 0; s + m <= K; ++s) {
    double mn = runs[s].peak;
    for (int j = 1; j < m; ++j) mn = std::min(mn, runs[s + j].peak);
    if (mn > best_min_peak) { best_min_peak = mn; best_start = s; }
  }
  if (best_start < 0 || best_min_peak <= 0)
    throw InsufficientSignChanges(K, m);

  AlternationPoints out;
  out.lead = runs[best_start].sign;
  double cap = 0.9 * best_min_peak;
  out.c = c_hint ? std::min(*c_hint, cap) : 0.5 * best_min_peak;
  if (!(out.c > 0)) throw PreconditionError("alternation: level c must be positive");

  for (int j = 0; j < m; ++j) {
    const Run& run = runs[best_start + j];
    // |f| rises from ~0 at run.lo to run.peak at run.peak_x; bisect |f| = c
    double a = run.lo, b = run.peak_x;
    while (b - a > 1e-12) {
      double mid = 0.5 * (a + b);
      if (std::abs(f(mid)) < out.c) a = mid;
      else b = mid;
    }
    // keep lift coordinates: a point on the run that straddles the seam may
    // exceed the period; the sequence stays increasing with points[0] in
    // [0, period) and points[j] < points[0] + period
    out.points.push_back(0.5 * (a + b));
  }
  for (std::size_t j = 0; j + 1 < out.points.size(); ++j)
    if (!(out.points[j + 1] > out.points[j]))
      throw PreconditionError("alternation: points not increasing (degenerate runs)");
  return out;
}

}  // namespace reparam
