#pragma once

// Converse Ghys machinery: SL(2,R) algebra, closed-form exponentials,
// monodromy of gamma'' = -k gamma, the four-interval step potential, Newton
// on the monodromy map, curve reconstruction and the Schwarzian dictionary.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "reparam/circle_function.hpp"
#include "reparam/diffeo.hpp"
#include "reparam/errors.hpp"
#include "reparam/newton.hpp"
#include "reparam/stepspace.hpp"

namespace reparam {

inline constexpr double kPi = 3.14159265358979323846264338327950288;

struct SL2Matrix {
  double a = 1, b = 0, c = 0, d = 1;  // [[a, b], [c, d]]

  double det() const { return a * d - b * c; }
  double trace() const { return a + d; }

  SL2Matrix operator*(const SL2Matrix& o) const {
    return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, c * o.b + d * o.d};
  }
  SL2Matrix operator+(const SL2Matrix& o) const { return {a + o.a, b + o.b, c + o.c, d + o.d}; }
  SL2Matrix operator-(const SL2Matrix& o) const { return {a - o.a, b - o.b, c - o.c, d - o.d}; }
  SL2Matrix operator*(double s) const { return {a * s, b * s, c * s, d * s}; }

  SL2Matrix inverse_unimodular() const { return {d, -b, -c, a}; }

  double frobenius() const { return std::sqrt(a * a + b * b + c * c + d * d); }

  static SL2Matrix identity() { return {1, 0, 0, 1}; }

  void check_unimodular(double tol = 1e-10) const {
    if (std::abs(det() - 1.0) > tol)
      throw PreconditionError("matrix is not unimodular: det=" + std::to_string(det()));
  }
};

// distance to +-E in Frobenius norm
inline double dist_to(const SL2Matrix& m, const SL2Matrix& target) {
  return (m - target).frobenius();
}

// sl2 coordinates of a traceless matrix [[x0, x1], [x2, -x0]]
inline Eigen::Vector3d sl2_coords(const SL2Matrix& m) {
  return Eigen::Vector3d(0.5 * (m.a - m.d), m.b, m.c);
}

inline SL2Matrix sl2_from_coords(const Eigen::Vector3d& v) {
  return {v(0), v(1), v(2), -v(0)};
}

// Principal logarithm of a unimodular matrix near the identity, by inverse
// scaling (square roots) and the power series.
inline SL2Matrix sl2_log(SL2Matrix m) {
  m.check_unimodular(1e-8);
  int doublings = 0;
  while (dist_to(m, SL2Matrix::identity()) > 0.25) {
    double tr = m.trace();
    if (tr <= -1.999)
      throw PreconditionError("matrix log: trace too close to -2");
    double s = std::sqrt(tr + 2.0);
    m = (m + SL2Matrix::identity()) * (1.0 / s);  // principal square root for det 1
    if (++doublings > 60)
      throw PreconditionError("matrix log: scaling did not converge");
  }
  SL2Matrix y = m - SL2Matrix::identity();
  SL2Matrix term = y, sum = y;
  for (int k = 2; k <= 40; ++k) {
    term = term * y;
    sum = sum + term * (((k % 2 == 0) ? -1.0 : 1.0) / k);
    if (term.frobenius() / k < 1e-17) break;
  }
  sum = sum * std::pow(2.0, doublings);
  // exact tracelessness (trace log = log det = 0)
  double half_tr = 0.5 * sum.trace();
  sum.a -= half_tr;
  sum.d -= half_tr;
  return sum;
}

// exp(t A) for A = [[0, -k], [1, 0]]: rotation for k > 0, shear for k = 0,
// hyperbolic for k < 0.
inline SL2Matrix rotation_exp(double k, double t) {
  if (t < 0) throw PreconditionError("rotation_exp: t must be >= 0");
  if (k > 0) {
    double w = std::sqrt(k);
    return {std::cos(w * t), -w * std::sin(w * t), std::sin(w * t) / w, std::cos(w * t)};
  }
  if (k == 0) return {1, 0, t, 1};
  double w = std::sqrt(-k);
  return {std::cosh(w * t), w * std::sinh(w * t), std::sinh(w * t) / w, std::cosh(w * t)};
}

// A pi-periodic piecewise-constant Hill potential.
struct StepPotential {
  std::vector<double> values;
  std::vector<double> lengths;

  StepPotential(std::vector<double> vals, std::vector<double> lens)
      : values(std::move(vals)), lengths(std::move(lens)) {
    if (values.empty() || values.size() != lengths.size())
      throw PreconditionError("step potential: values/lengths mismatch");
    double total = 0.0;
    for (double t : lengths) {
      if (!(t > 0)) throw PreconditionError("step potential: lengths must be positive");
      total += t;
    }
    if (std::abs(total - kPi) > 1e-12)
      throw PreconditionError("step potential: lengths must sum to pi");
  }

  CircleFunction as_circle_function() const {
    StepPotential p = *this;
    std::vector<double> kinks;
    double acc = 0.0;
    kinks.push_back(0.0);
    for (std::size_t i = 0; i + 1 < lengths.size(); ++i) {
      acc += lengths[i];
      kinks.push_back(acc);
    }
    return CircleFunction::from_callable(
        kPi,
        [p](double x) {
          double acc = 0.0;
          for (std::size_t i = 0; i < p.lengths.size(); ++i) {
            acc += p.lengths[i];
            if (x < acc) return p.values[i];
          }
          return p.values.back();
        },
        kinks);
  }
};

struct StretchPerturbation {
  Eigen::Vector4d s;
  explicit StretchPerturbation(const Eigen::Vector4d& v) : s(v) {
    if (std::abs(s.sum()) > 1e-14)
      throw PreconditionError("stretch perturbation must sum to zero");
  }
};

// Ordered product of the interval exponentials, left to right:
// F(pi) = F(0) e^{t1 A1} e^{t2 A2} ...
inline SL2Matrix monodromy(const StepPotential& p) {
  SL2Matrix m = SL2Matrix::identity();
  for (std::size_t i = 0; i < p.values.size(); ++i)
    m = m * rotation_exp(p.values[i], p.lengths[i]);
  return m;
}

struct TanSolution {
  double alpha, beta, t1, t2;
};

// The symmetric four-interval closure condition: tan(alpha) tan(beta) =
// sqrt(k1 k2) with alpha/sqrt(k1) + beta/sqrt(k2) = pi/2.
inline TanSolution solve_tan_equation(double k1, double k2) {
  if (!(k1 > 0) || !(k2 > 0)) throw NonPositiveK("both potential values must be positive");
  if (k1 == k2 && k1 == 1.0) return {kPi / 4, kPi / 4, kPi / 4, kPi / 4};

  double rhs = std::sqrt(k1 * k2);
  auto beta_of = [&](double alpha) { return std::sqrt(k2) * (kPi / 2 - alpha / std::sqrt(k1)); };
  auto G = [&](double alpha) {
    double beta = beta_of(alpha);
    return std::tan(alpha) * std::tan(beta) - rhs;
  };
  double lo = 1e-9;
  double hi = std::min(kPi / 2, std::sqrt(k1) * kPi / 2) - 1e-9;
  // beta must stay in (0, pi/2) over the bracket
  if (beta_of(lo) >= kPi / 2 - 1e-12) lo = std::sqrt(k1) * (kPi / 2 - (kPi / 2 - 1e-6) / std::sqrt(k2));
  if (!(lo < hi) || !(G(lo) < 0) || !(G(hi) > 0))
    throw BracketFailure("closure equation has no sign bracket (k1, k2 too far from 1)");
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    double g = G(mid);
    if (std::abs(g) < 1e-12) { lo = hi = mid; break; }
    if (g < 0) lo = mid;
    else hi = mid;
  }
  double alpha = 0.5 * (lo + hi);
  double beta = beta_of(alpha);
  return {alpha, beta, alpha / std::sqrt(k1), beta / std::sqrt(k2)};
}

inline StepPotential closed_step_potential(double k1, double k2) {
  TanSolution t = solve_tan_equation(k1, k2);
  return StepPotential({k1, k2, k1, k2}, {t.t1, t.t2, t.t1, t.t2});
}

struct MonodromyJacobian {
  // columns: d(log of -monodromy)/d(length_i) in sl2 coordinates; the exact
  // product rule gives column i as the generator A_i conjugated by the
  // partial product to its left.
  Eigen::Matrix<double, 3, 4> columns;
  Eigen::Vector4d kernel;  // right singular vector of the smallest singular value
  double sigma3 = 0.0;

  SL2Matrix apply(const StretchPerturbation& sp) const {
    return sl2_from_coords(columns * sp.s);
  }
};

inline MonodromyJacobian monodromy_jacobian(const StepPotential& p) {
  if (p.values.size() != 4)
    throw PreconditionError("monodromy jacobian is defined for 4-interval potentials");
  SL2Matrix m = monodromy(p);
  if (dist_to(m, SL2Matrix::identity() * -1.0) > 1e-8)
    throw PreconditionError("monodromy must equal -E at the base potential");

  MonodromyJacobian J;
  SL2Matrix partial = SL2Matrix::identity();
  for (int i = 0; i < 4; ++i) {
    SL2Matrix gen{0, -p.values[std::size_t(i)], 1, 0};
    SL2Matrix conj = partial * gen * partial.inverse_unimodular();
    J.columns.col(i) = sl2_coords(conj);
    partial = partial * rotation_exp(p.values[std::size_t(i)], p.lengths[std::size_t(i)]);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(J.columns, Eigen::ComputeFullV);
  J.sigma3 = svd.singularValues()(2);
  J.kernel = svd.matrixV().col(3);
  if (J.sigma3 < 1e-6)
    throw DegenerateJacobian("monodromy differential has rank < 3");
  if (std::abs(J.kernel.sum()) < 1e-6)
    throw DegenerateJacobian("monodromy differential kernel lies in the zero-sum hyperplane");
  return J;
}

struct PlaneCurve {
  std::vector<double> x;                      // grid on [0, pi]
  std::vector<std::array<double, 2>> pos;     // gamma(x)
  std::vector<std::array<double, 2>> vel;     // gamma'(x)
  std::vector<double> kinks;                  // interior x where the potential loses smoothness

  double closure_error() const {
    double dx = pos.back()[0] + pos.front()[0], dy = pos.back()[1] + pos.front()[1];
    double dvx = vel.back()[0] + vel.front()[0], dvy = vel.back()[1] + vel.front()[1];
    return std::sqrt(dx * dx + dy * dy) + std::sqrt(dvx * dvx + dvy * dvy);
  }
};

struct FramePath {
  std::vector<double> x;
  std::vector<SL2Matrix> F;  // columns (gamma, gamma')
  std::vector<double> kinks;

  PlaneCurve curve() const {
    PlaneCurve c;
    c.x = x;
    c.kinks = kinks;
    for (const auto& m : F) {
      c.pos.push_back({m.a, m.c});
      c.vel.push_back({m.b, m.d});
    }
    return c;
  }
};

// RK4 integration of F' = F A(x), A = [[0, -k(x)], [1, 0]], steps aligned to
// the potential's kinks, determinant renormalized after each step.
inline FramePath integrate_frame(const CircleFunction& k, const SL2Matrix& F0, int grid) {
  if (grid < 256) throw PreconditionError("integrate_frame: grid must be >= 256");
  if (std::abs(k.period() - kPi) > 1e-12)
    throw PeriodMismatch("integrate_frame: potential must have period pi");

  std::vector<double> nodes{0.0, kPi};
  for (double kk : k.kinks())
    if (kk > 1e-13 && kk < kPi - 1e-13) nodes.push_back(kk);
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end(),
                          [](double u, double v) { return std::abs(u - v) < 1e-13; }),
              nodes.end());

  auto rhs = [&k](const SL2Matrix& F, double x) {
    double kv = k(x);
    // F * A with A = [[0, -kv], [1, 0]]
    return SL2Matrix{F.b, -kv * F.a, F.d, -kv * F.c};
  };

  FramePath path;
  path.x.push_back(0.0);
  path.F.push_back(F0);
  path.kinks.assign(nodes.begin() + 1, nodes.end() - 1);
  SL2Matrix F = F0;
  const double h_target = kPi / grid;
  // a stretched potential can sweep its whole range between two adjacent
  // kinks, so every smooth piece gets a minimum point count of its own
  const int floor_steps = std::max(8, grid / 64);
  for (std::size_t seg = 0; seg + 1 < nodes.size(); ++seg) {
    double a = nodes[seg], b = nodes[seg + 1];
    int steps = std::max(nodes.size() > 2 ? floor_steps : 1,
                         int(std::ceil((b - a) / h_target)));
    double h = (b - a) / steps;
    for (int s = 0; s < steps; ++s) {
      double x = a + s * h;
      // the potential may jump at b; keep the last stage on this segment
      double xr = std::min(x + h, b - 1e-13);
      SL2Matrix k1m = rhs(F, x);
      SL2Matrix k2m = rhs(F + k1m * (h / 2), x + h / 2);
      SL2Matrix k3m = rhs(F + k2m * (h / 2), x + h / 2);
      SL2Matrix k4m = rhs(F + k3m * h, xr);
      F = F + (k1m + k2m * 2.0 + k3m * 2.0 + k4m) * (h / 6.0);
      F = F * (1.0 / std::sqrt(F.det()));
      path.x.push_back(x + h);
      path.F.push_back(F);
    }
  }
  return path;
}

inline SL2Matrix monodromy_of_potential(const CircleFunction& k, int grid = 1024) {
  return integrate_frame(k, SL2Matrix::identity(), grid).F.back();
}

// An orientation-preserving diffeomorphism of the projective line, as a lift
// with f(x + pi) = f(x) + pi. Derivatives up to third order are callable.
struct ProjDiffeo {
  std::function<double(double)> lift;
  std::function<double(double)> d1, d2, d3;

  double operator()(double x) const { return lift(x); }
};

namespace detail {

// in-place iterative radix-2 FFT
inline void fft(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    double ang = 2 * kPi / double(len) * (inverse ? 1 : -1);
    std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        auto u = a[i + j], v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wl;
      }
    }
  }
  if (inverse)
    for (auto& v : a) v /= double(n);
}

// order-th spectral derivative of periodic samples (period L)
inline std::vector<double> spectral_derivative(const std::vector<double>& samples, double L,
                                               int order) {
  const std::size_t n = samples.size();
  std::vector<std::complex<double>> a(n);
  for (std::size_t i = 0; i < n; ++i) a[i] = samples[i];
  fft(a, false);
  for (std::size_t m = 0; m < n; ++m) {
    long freq = (m <= n / 2) ? long(m) : long(m) - long(n);
    if (std::size_t(std::abs(freq)) == n / 2 && order % 2 == 1) {
      a[m] = 0.0;  // Nyquist mode has no well-defined odd derivative
      continue;
    }
    std::complex<double> ik(0.0, 2 * kPi * double(freq) / L);
    std::complex<double> f = 1.0;
    for (int o = 0; o < order; ++o) f *= ik;
    a[m] *= f;
  }
  fft(a, true);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i].real();
  return out;
}

}  // namespace detail

// Builds a ProjDiffeo from a lift callable alone, with derivatives by
// spectral differentiation of the periodic part lift(x) - x.
inline ProjDiffeo proj_diffeo_from_lift(const std::function<double(double)>& lift,
                                        int samples = 1024) {
  std::vector<double> p(static_cast<std::size_t>(samples), 0.0);
  for (int i = 0; i < samples; ++i) {
    double x = kPi * i / samples;
    p[std::size_t(i)] = lift(x) - x;
  }
  auto mk = [samples](std::vector<double> vals, double offset) {
    std::vector<double> xs(vals.size());
    for (int i = 0; i < samples; ++i) xs[std::size_t(i)] = kPi * i / samples;
    CircleFunction f = CircleFunction::from_samples(xs, vals, kPi);
    return [f, offset](double x) { return f(x) + offset; };
  };
  ProjDiffeo g;
  g.lift = lift;
  g.d1 = mk(detail::spectral_derivative(p, kPi, 1), 1.0);
  g.d2 = mk(detail::spectral_derivative(p, kPi, 2), 0.0);
  g.d3 = mk(detail::spectral_derivative(p, kPi, 3), 0.0);
  return g;
}

inline ProjDiffeo proj_diffeo_from_derivatives(std::function<double(double)> lift,
                                               std::function<double(double)> d1,
                                               std::function<double(double)> d2,
                                               std::function<double(double)> d3) {
  ProjDiffeo g;
  g.lift = std::move(lift);
  g.d1 = std::move(d1);
  g.d2 = std::move(d2);
  g.d3 = std::move(d3);
  return g;
}

// Polar-angle lift of a closed centrally symmetric curve. The radius encodes
// the derivative: f' = |gamma|^-2 (unit Wronskian).
inline ProjDiffeo recover_diffeo(const PlaneCurve& curve) {
  const std::size_t n = curve.x.size();
  if (n < 16) throw PreconditionError("recover_diffeo: too few samples");
  {
    double dx = curve.pos.back()[0] + curve.pos.front()[0];
    double dy = curve.pos.back()[1] + curve.pos.front()[1];
    double dvx = curve.vel.back()[0] + curve.vel.front()[0];
    double dvy = curve.vel.back()[1] + curve.vel.front()[1];
    if (std::hypot(dx, dy) >= 1e-6 || std::hypot(dvx, dvy) >= 1e-6)
      throw CurveNotClosed("curve does not satisfy gamma(pi) = -gamma(0)");
  }

  std::vector<double> theta(n), r2(n), w1(n);
  double acc = std::atan2(curve.pos[0][1], curve.pos[0][0]);
  for (std::size_t i = 0; i < n; ++i) {
    double px = curve.pos[i][0], py = curve.pos[i][1];
    double rr = px * px + py * py;
    if (rr < 1e-16) throw OriginHit("curve passes through the origin");
    r2[i] = rr;
    if (i > 0) {
      double qx = curve.pos[i - 1][0], qy = curve.pos[i - 1][1];
      acc += std::atan2(qx * py - qy * px, qx * px + qy * py);
    }
    theta[i] = acc;
    // w = log f' = -log r^2;  w' = -2 (gamma . gamma') / r^2
    w1[i] = -2.0 * (px * curve.vel[i][0] + py * curve.vel[i][1]) / rr;
  }
  if (std::abs(theta.back() - theta.front() - kPi) > 1e-6)
    throw CurveNotClosed("polar angle does not advance by pi over the period");

  // consistency f' = 1/r^2: theta' = (gamma x gamma') / r^2, so the identity
  // is exactly the unit Wronskian of the frame
  for (std::size_t i = 0; i < n; ++i) {
    double wr = curve.pos[i][0] * curve.vel[i][1] - curve.pos[i][1] * curve.vel[i][0];
    if (std::abs(wr - 1.0) > 1e-6)
      throw PreconditionError("curve samples violate f' = |gamma|^-2 at 1e-6");
  }

  // w'' by differentiating w' samples, one smooth segment at a time. A spline
  // derivative straddling a kink of the potential picks up an O(h) error from
  // the curvature jump, so each segment is handled with its own 5 point
  // stencils and nothing crosses a kink.
  std::vector<std::size_t> cut{0};
  for (double kk : curve.kinks) {
    auto it = std::lower_bound(curve.x.begin(), curve.x.end(), kk - 1e-12);
    std::size_t idx = std::size_t(it - curve.x.begin());
    if (idx > cut.back() && idx + 1 < n) cut.push_back(idx);
  }
  cut.push_back(n - 1);
  // a boundary node carries two one-sided values, one per adjacent segment,
  // so the stencil results go straight into per-segment arrays
  auto segment_w2 = [&](std::size_t lo, std::size_t hi) {
    std::size_t len = hi - lo + 1;
    std::size_t width = std::min<std::size_t>(5, len);
    std::vector<double> out(len);
    for (std::size_t i = lo; i <= hi; ++i) {
      std::size_t start = (i >= lo + width / 2) ? i - width / 2 : lo;
      if (start + width - 1 > hi) start = hi - (width - 1);
      // derivative of the Lagrange interpolant through the window, at x_i
      double acc2 = 0.0;
      for (std::size_t j = 0; j < width; ++j) {
        double denom = 1.0, numer = 0.0;
        for (std::size_t m = 0; m < width; ++m) {
          if (m == j) continue;
          denom *= curve.x[start + j] - curve.x[start + m];
          double term = 1.0;
          for (std::size_t q = 0; q < width; ++q) {
            if (q == j || q == m) continue;
            term *= curve.x[i] - curve.x[start + q];
          }
          numer += term;
        }
        acc2 += w1[start + j] * numer / denom;
      }
      out[i - lo] = acc2;
    }
    return out;
  };

  auto theta_sp = std::make_shared<detail::MonotoneCubic>(curve.x, theta);
  auto r2_sp = std::make_shared<detail::MonotoneCubic>(curve.x, r2);
  auto w1_sp = std::make_shared<detail::MonotoneCubic>(curve.x, w1);
  // w'' is only piecewise C1: interpolate it segment by segment so the slope
  // jump at a kink does not leak into the neighbouring cells
  struct SegmentedCubic {
    std::vector<double> starts;
    std::vector<detail::MonotoneCubic> pieces;
    double operator()(double t) const {
      std::size_t s = std::size_t(std::upper_bound(starts.begin(), starts.end(), t) -
                                  starts.begin());
      if (s > 0) --s;
      return pieces[s](t);
    }
  };
  auto w2_sp = std::make_shared<SegmentedCubic>();
  for (std::size_t s = 0; s + 1 < cut.size(); ++s) {
    std::size_t lo = cut[s], hi = cut[s + 1];
    w2_sp->starts.push_back(curve.x[lo]);
    w2_sp->pieces.emplace_back(
        std::vector<double>(curve.x.begin() + long(lo), curve.x.begin() + long(hi) + 1),
        segment_w2(lo, hi));
  }
  double th0 = theta.front();

  auto reduce_lift = [](double x, auto&& fn, double incr) {
    double kwrap = std::floor(x / kPi);
    return fn(x - kwrap * kPi) + kwrap * incr;
  };
  ProjDiffeo g;
  g.lift = [theta_sp, reduce_lift](double x) {
    return reduce_lift(x, [&](double t) { return (*theta_sp)(t); }, kPi);
  };
  g.d1 = [r2_sp, reduce_lift](double x) {
    return reduce_lift(x, [&](double t) { return 1.0 / (*r2_sp)(t); }, 0.0);
  };
  g.d2 = [r2_sp, w1_sp, reduce_lift](double x) {
    return reduce_lift(
        x, [&](double t) { return (*w1_sp)(t) / (*r2_sp)(t); }, 0.0);
  };
  g.d3 = [r2_sp, w1_sp, w2_sp, reduce_lift](double x) {
    return reduce_lift(
        x,
        [&](double t) {
          double w1v = (*w1_sp)(t);
          double w2v = (*w2_sp)(t);
          return (w2v + w1v * w1v) / (*r2_sp)(t);
        },
        0.0);
  };
  (void)th0;
  return g;
}

// Schwarzian of a projective-line map in the angle coordinate. The affine
// formula g'''/g' - (3/2)(g''/g')^2 picks up the correction 2(g'^2 - 1) when
// the chart changes from affine to angular (x_affine = tan x), and only with
// that term does S vanish on all Mobius rotations of the circle.
inline CircleFunction schwarzian(const ProjDiffeo& g) {
  if (!g.d1 || !g.d2 || !g.d3)
    throw PreconditionError("schwarzian: diffeomorphism has no derivative data");
  auto d1 = g.d1, d2 = g.d2, d3 = g.d3;
  return CircleFunction::from_callable(kPi, [d1, d2, d3](double x) {
    double f1 = d1(x);
    if (f1 < 1e-8) throw DerivativeUnderflow("g' < 1e-8 in Schwarzian evaluation");
    double q = d2(x) / f1;
    return d3(x) / f1 - 1.5 * q * q + 2.0 * (f1 * f1 - 1.0);
  });
}

inline CircleFunction potential_of(const ProjDiffeo& g) {
  CircleFunction s = schwarzian(g);
  return s.scaled(0.5).shifted(1.0);
}

struct GhysSolution {
  CircleDiffeo phi;
  PlaneCurve curve;
  ProjDiffeo g;
  CircleFunction pulled_potential;  // k o phi
  double c_used = 0.0;
  double eps_used = 0.0;
  int iterations = 0;
  double closure_error = 0.0;
  double schwarzian_error = 0.0;  // sup |1/2 S(g) + 1 - k o phi|
};

struct GhysOptions {
  std::vector<double> eps_schedule{1e-2, 1e-3, 1e-4};
  double residual_target = 1e-9;  // sl2 norm of log(-monodromy)
  int newton_grid = 1024;
  int verify_grid = 4096;
};

inline GhysSolution solve_converse_ghys(const CircleFunction& k, const GhysOptions& opt = {}) {
  if (std::abs(k.period() - kPi) > 1e-12)
    throw PeriodMismatch("potential must have period pi");
  CircleFunction km1 = k.shifted(-1.0);
  int sc = 0;
  try {
    sc = count_sign_changes(km1, 0.0).count;
  } catch (const AllNeutral&) {
    sc = 0;
  }
  if (sc < 4) throw InsufficientSignChanges(sc, 4);

  double best_residual = std::numeric_limits<double>::infinity();
  double c_try = -1.0;  // chosen from the alternation run depths on first pass
  for (int c_round = 0; c_round < 6; ++c_round) {
    AlternationPoints ap = find_alternation_points(
        km1, 4, c_try < 0 ? std::optional<double>(0.3) : std::optional<double>(c_try));
    double c = ap.c;
    c_try = c;
    double k1 = 1 + c, k2 = 1 - c;

    TanSolution tan_sol;
    try {
      tan_sol = solve_tan_equation(k1, k2);
    } catch (const BracketFailure&) {
      c_try = 0.5 * c;
      continue;
    }

    // interval order follows the sign of k-1 at the first alternation point
    std::vector<double> lens, vals;
    if (ap.lead > 0) {
      vals = {k1, k2, k1, k2};
      lens = {tan_sol.t1, tan_sol.t2, tan_sol.t1, tan_sol.t2};
    } else {
      vals = {k2, k1, k2, k1};
      lens = {tan_sol.t2, tan_sol.t1, tan_sol.t2, tan_sol.t1};
    }
    StepPotential hpot(vals, lens);

    StepFunction hsign;
    hsign.domain = kPi;
    double acc = 0.0;
    for (int j = 0; j < 4; ++j) {
      if (j > 0) hsign.breakpoints.push_back(acc);
      hsign.signs.push_back(ap.lead * ((j % 2 == 0) ? 1 : -1));
      acc += lens[std::size_t(j)];
    }

    CircleFunction fn = km1.scaled(1.0 / c);
    CircleDiffeo rot = CircleDiffeo::rotation(kPi, ap.points[0]);
    CircleFunction fn_rot = pullback(fn, rot);
    CircleFunction k_rot = pullback(k, rot);
    std::vector<double> pts(4);
    for (int j = 0; j < 4; ++j) pts[std::size_t(j)] = ap.points[std::size_t(j)] - ap.points[0];

    AlphaFamily family(kPi, std::vector<double>(hsign.breakpoints));
    Eigen::Matrix<double, 4, 3> D;
    D << 1, 0, 0, -1, 1, 0, 0, -1, 1, 0, 0, -1;
    // pulling back by psi_alpha moves each jump by -alpha, so the alpha
    // derivative is the negated length derivative
    Eigen::MatrixXd J0 = -(monodromy_jacobian(hpot).columns * D);

    double band = 0.1;
    for (double eps : opt.eps_schedule) {
      CircleDiffeo phi0;
      try {
        StretchOptions sopt;
        sopt.band = band;
        phi0 = build_stretch_to_step(fn_rot, pts, hsign, eps, sopt);
      } catch (const NoStableNeighborhood&) {
        if (band >= 0.1) throw;
        band = 0.1;
        StretchOptions sopt;
        sopt.band = band;
        phi0 = build_stretch_to_step(fn_rot, pts, hsign, eps, sopt);
      }

      auto map = [&](const std::vector<double>& alpha) -> Eigen::VectorXd {
        CircleFunction pot = pullback(k_rot, compose(phi0, psi_alpha(family, alpha)));
        SL2Matrix m = monodromy_of_potential(pot, opt.newton_grid);
        SL2Matrix neg = m * -1.0;
        if (neg.trace() <= -1.9)
          return Eigen::Vector3d::Constant(1e6);  // far from -E: reject in line search
        return sl2_coords(sl2_log(neg));
      };
      auto newton = detail::newton_on_alpha(map, J0, family.trust_radius, opt.residual_target);
      best_residual = std::min(best_residual, double(newton.residual.cwiseAbs().maxCoeff()));
      band *= 0.5;
      if (!newton.converged) continue;

      GhysSolution sol;
      sol.phi = compose(compose(rot, phi0), psi_alpha(family, newton.alpha));
      sol.pulled_potential = pullback(k, sol.phi);
      sol.c_used = c;
      sol.eps_used = eps;
      sol.iterations = newton.iterations;

      FramePath path = integrate_frame(sol.pulled_potential, SL2Matrix::identity(),
                                       opt.verify_grid);
      sol.curve = path.curve();
      sol.closure_error = sol.curve.closure_error();
      if (sol.closure_error >= 1e-6) continue;
      sol.g = recover_diffeo(sol.curve);
      CircleFunction rec = potential_of(sol.g);
      double err = 0.0;
      for (int i = 0; i < 512; ++i) {
        double x = kPi * (i + 0.5) / 512;
        err = std::max(err, std::abs(rec(x) - sol.pulled_potential(x)));
      }
      sol.schwarzian_error = err;
      if (err >= 1e-5) continue;
      return sol;
    }
    c_try = 0.5 * c;  // shrink the alternation level and retry
  }
  throw ConvergenceFailure("converse Ghys solver exhausted its retries", best_residual);
}

}  // namespace reparam
