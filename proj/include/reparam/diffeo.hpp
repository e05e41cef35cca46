#pragma once

// Orientation-preserving circle diffeomorphisms as monotone breakpoint
// splines: stretch maps, the alpha families, composition, inversion and
// pullback.

#include <algorithm>
#include <cmath>
#include <memory>
#include <utility>
#include <vector>

#include "reparam/circle_function.hpp"
#include "reparam/errors.hpp"
#include "reparam/stepspace.hpp"

namespace reparam {

namespace detail {

class LiftBase {
public:
  virtual ~LiftBase() = default;
  virtual double lift(double x) const = 0;
  double period;
  std::vector<double> knots;      // abscissae where the lift is only C^1, in [0, period)
  double max_deviation = 0.0;     // sup |lift(x) - x - const|, used by inversion brackets
};

class SplineLift final : public LiftBase {
public:
  SplineLift(double P, const std::vector<double>& breakpoints,
             const std::vector<double>& images) {
    period = P;
    if (breakpoints.size() < 1 || breakpoints.size() != images.size())
      throw PreconditionError("diffeo: breakpoints/images size mismatch");
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i)
      if (!(breakpoints[i + 1] > breakpoints[i]) || !(images[i + 1] > images[i]))
        throw PreconditionError("diffeo: breakpoints and images must be strictly increasing");
    if (breakpoints.front() < 0 || breakpoints.back() >= P)
      throw PreconditionError("diffeo: breakpoints must lie in [0, period)");
    if (!(images.back() < images.front() + P))
      throw PreconditionError("diffeo: images must stay within one period");

    std::vector<double> x = breakpoints, y = images;
    x.push_back(breakpoints.front() + P);
    y.push_back(images.front() + P);
    x0_ = x.front();
    spline_ = MonotoneCubic(x, y, /*cyclic=*/true);
    knots = breakpoints;

    // strict monotonicity on a 4096-grid
    double prev = lift(0.0);
    for (int i = 1; i <= 4096; ++i) {
      double v = lift(P * i / 4096.0);
      if (!(v > prev))
        throw PreconditionError("diffeo: constructed map is not strictly monotone");
      max_deviation = std::max(max_deviation, std::abs(v - P * i / 4096.0));
      prev = v;
    }
  }

  double lift(double x) const override {
    double k = std::floor((x - x0_) / period);
    double t = x - k * period;
    return spline_(t) + k * period;
  }

  std::vector<double> breakpoints_raw() const {
    auto v = spline_.knots();
    v.pop_back();
    return v;
  }
  std::vector<double> images_raw() const {
    auto v = spline_.values();
    v.pop_back();
    return v;
  }

private:
  MonotoneCubic spline_;
  double x0_ = 0.0;
};

class RotationLift final : public LiftBase {
public:
  RotationLift(double P, double offset) : offset_(offset) {
    period = P;
    max_deviation = std::abs(offset);
  }
  double lift(double x) const override { return x + offset_; }
  double offset() const { return offset_; }

private:
  double offset_;
};

class InverseLift final : public LiftBase {
public:
  explicit InverseLift(std::shared_ptr<const LiftBase> base) : base_(std::move(base)) {
    period = base_->period;
    max_deviation = base_->max_deviation + 1.0;
    for (double k : base_->knots) {
      double y = base_->lift(k);
      y = std::fmod(y, period);
      if (y < 0) y += period;
      knots.push_back(y);
    }
    std::sort(knots.begin(), knots.end());
  }

  double lift(double y) const override {
    // monotone solve base(x) = y by bisection
    double lo = y - max_deviation, hi = y + max_deviation;
    for (int it = 0; it < 90 && hi - lo > 1e-14 * std::max(1.0, std::abs(y)); ++it) {
      double mid = 0.5 * (lo + hi);
      if (base_->lift(mid) < y) lo = mid;
      else hi = mid;
    }
    return 0.5 * (lo + hi);
  }

  std::shared_ptr<const LiftBase> base() const { return base_; }

private:
  std::shared_ptr<const LiftBase> base_;
};

class ComposeLift final : public LiftBase {
public:
  ComposeLift(std::shared_ptr<const LiftBase> outer, std::shared_ptr<const LiftBase> inner)
      : outer_(std::move(outer)), inner_(std::move(inner)) {
    period = inner_->period;
    max_deviation = outer_->max_deviation + inner_->max_deviation;
    knots = inner_->knots;
    InverseLift inv(inner_);
    for (double k : outer_->knots) {
      double x = inv.lift(k);
      x = std::fmod(x, period);
      if (x < 0) x += period;
      knots.push_back(x);
    }
    std::sort(knots.begin(), knots.end());
  }
  double lift(double x) const override { return outer_->lift(inner_->lift(x)); }

private:
  std::shared_ptr<const LiftBase> outer_, inner_;
};

}  // namespace detail

// An orientation-preserving homeomorphism of the circle, held as a monotone
// lift with phi(x + period) = phi(x) + period.
class CircleDiffeo {
public:
  CircleDiffeo() = default;

  static CircleDiffeo from_breakpoints(double period, const std::vector<double>& breakpoints,
                                       const std::vector<double>& images) {
    return CircleDiffeo(std::make_shared<detail::SplineLift>(period, breakpoints, images));
  }
  static CircleDiffeo identity(double period) {
    return CircleDiffeo(std::make_shared<detail::RotationLift>(period, 0.0));
  }
  static CircleDiffeo rotation(double period, double offset) {
    return CircleDiffeo(std::make_shared<detail::RotationLift>(period, offset));
  }

  double period() const { return impl_->period; }
  double lift(double x) const { return impl_->lift(x); }

  double operator()(double x) const {
    double v = std::fmod(impl_->lift(x), period());
    if (v < 0) v += period();
    return v;
  }

  double derivative(double x) const {
    double h = 1e-6 * period() / 6.283185307179586;
    return (lift(x + h) - lift(x - h)) / (2 * h);
  }

  const std::vector<double>& knots() const { return impl_->knots; }

  // breakpoint/image pairs for serialization (sampled for non-spline maps)
  std::pair<std::vector<double>, std::vector<double>> breakpoint_data(int grid = 1024) const {
    if (auto sp = std::dynamic_pointer_cast<const detail::SplineLift>(impl_))
      return {sp->breakpoints_raw(), sp->images_raw()};
    std::vector<double> b(grid), im(grid);
    for (int i = 0; i < grid; ++i) {
      b[i] = period() * i / grid;
      im[i] = lift(b[i]);
    }
    return {b, im};
  }

  std::shared_ptr<const detail::LiftBase> impl() const { return impl_; }

private:
  explicit CircleDiffeo(std::shared_ptr<const detail::LiftBase> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<const detail::LiftBase> impl_;

  friend CircleDiffeo compose(const CircleDiffeo&, const CircleDiffeo&);
  friend CircleDiffeo invert(const CircleDiffeo&);
};

// (compose(phi, psi))(x) = phi(psi(x))
inline CircleDiffeo compose(const CircleDiffeo& phi, const CircleDiffeo& psi) {
  if (std::abs(phi.period() - psi.period()) > 1e-12)
    throw PeriodMismatch("compose: period mismatch");
  return CircleDiffeo(std::make_shared<detail::ComposeLift>(phi.impl(), psi.impl()));
}

inline CircleDiffeo invert(const CircleDiffeo& phi) {
  if (auto inv = std::dynamic_pointer_cast<const detail::InverseLift>(phi.impl()))
    return CircleDiffeo(inv->base());
  return CircleDiffeo(std::make_shared<detail::InverseLift>(phi.impl()));
}

// phi^*(f) = f o phi
inline CircleFunction pullback(const CircleFunction& f, const CircleDiffeo& phi) {
  if (std::abs(f.period() - phi.period()) > 1e-12)
    throw PeriodMismatch("pullback: period mismatch");
  std::vector<double> kinks = phi.knots();
  if (!f.kinks().empty()) {
    CircleDiffeo inv = invert(phi);
    for (double k : f.kinks()) {
      double x = inv(k);
      kinks.push_back(x);
    }
  }
  return CircleFunction::from_callable(
      f.period(), [f, phi](double x) { return f(phi.lift(x)); }, std::move(kinks));
}

// The n-parameter family of breakpoint-shifting diffeomorphisms fixing 0.
struct AlphaFamily {
  double period;
  std::vector<double> breakpoints;  // x_1 < ... < x_n in (0, period)
  double trust_radius;              // default: quarter of the minimal gap

  AlphaFamily(double period, std::vector<double> bps, double delta = 0.0)
      : period(period), breakpoints(std::move(bps)), trust_radius(delta) {
    if (breakpoints.empty())
      throw PreconditionError("alpha family needs at least one breakpoint");
    double prev = 0.0, min_gap = breakpoints.front();
    for (double b : breakpoints) {
      if (!(b > prev) || !(b < period))
        throw PreconditionError("alpha family breakpoints must be increasing in (0, period)");
      min_gap = std::min(min_gap, b - prev);
      prev = b;
    }
    min_gap = std::min(min_gap, period - prev);
    if (trust_radius <= 0.0) trust_radius = 0.25 * min_gap;
  }
};

// psi_alpha(x_i) = x_i + alpha_i, psi_alpha(0) = 0.
inline CircleDiffeo psi_alpha(const AlphaFamily& family, const std::vector<double>& alpha) {
  if (alpha.size() != family.breakpoints.size())
    throw PreconditionError("psi_alpha: alpha dimension mismatch");
  for (double a : alpha)
    if (!(std::abs(a) < family.trust_radius))
      throw TrustRegionExceeded("|alpha| exceeds the family trust radius");
  std::vector<double> b{0.0}, im{0.0};
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    b.push_back(family.breakpoints[i]);
    im.push_back(family.breakpoints[i] + alpha[i]);
  }
  return CircleDiffeo::from_breakpoints(family.period, b, im);
}

struct StretchOptions {
  double band = 0.1;  // |f - f(point)| level defining stable neighborhoods
};

// The stretch map of the solvers' Step 2: each interval of the target step
// function h, shrunk by a margin, maps affinely into a neighborhood of the
// matching alternation point of f, so that f o phi is eps-close in measure
// to h.
inline CircleDiffeo build_stretch_to_step(const CircleFunction& f,
                                          const std::vector<double>& points,
                                          const StepFunction& h, double eps,
                                          const StretchOptions& opt = {}) {
  const double P = f.period();
  const int m = int(points.size());
  if (h.intervals() != m)
    throw PreconditionError("stretch: h must have one interval per alternation point");
  if (!(eps > 0)) throw PreconditionError("stretch: eps must be positive");
  if (std::abs(h.domain - P) > 1e-12)
    throw PeriodMismatch("stretch: step domain must equal the period of f");

  // sign agreement between f at the points and h on its intervals
  for (int k = 0; k < m; ++k) {
    double fv = f(points[k]);
    if (!((fv > 0) == (h.signs[k] > 0)) || std::abs(std::abs(fv) - 1.0) > 0.05)
      throw PreconditionError("stretch: f must take the values +-1 matching h's signs");
  }

  const double margin = eps / (4.0 * m);
  // stable neighborhood radii
  std::vector<double> eta(m);
  for (int k = 0; k < m; ++k) {
    double gap_prev = (k == 0) ? (points[0] + P - points[m - 1]) : (points[k] - points[k - 1]);
    double gap_next = (k == m - 1) ? (points[0] + P - points[m - 1]) : (points[k + 1] - points[k]);
    double cap = std::min(gap_prev, gap_next) / 3.0;
    double center = f(points[k]);
    double lo = 0.0, hi = cap;
    // scan outward for the first violation, then bisect the boundary
    const int scan = 256;
    int bad = scan + 1;
    for (int s = 1; s <= scan; ++s) {
      double r = cap * s / scan;
      if (std::abs(f(points[k] + r) - center) >= opt.band ||
          std::abs(f(points[k] - r) - center) >= opt.band) {
        bad = s;
        break;
      }
    }
    if (bad <= scan) {
      lo = cap * (bad - 1) / scan;
      hi = cap * bad / scan;
      for (int it = 0; it < 60 && hi - lo > 1e-13; ++it) {
        double r = 0.5 * (lo + hi);
        if (std::abs(f(points[k] + r) - center) >= opt.band ||
            std::abs(f(points[k] - r) - center) >= opt.band)
          hi = r;
        else
          lo = r;
      }
      eta[k] = lo;
    } else {
      eta[k] = cap;
    }
    if (eta[k] < 1e-9)
      throw NoStableNeighborhood("no stable neighborhood around point " + std::to_string(k));
  }

  // image neighborhoods must stay disjoint and ordered
  for (int k = 0; k < m; ++k) {
    int nk = (k + 1) % m;
    double gap = (nk == 0) ? (points[0] + P - points[m - 1]) : (points[nk] - points[k]);
    double excess = (eta[k] + eta[nk]) / gap;
    if (excess > 0.8) {
      eta[k] *= 0.8 / excess;
      eta[nk] *= 0.8 / excess;
    }
  }

  std::vector<double> b, im;
  for (int k = 0; k < m; ++k) {
    auto [lo, hi] = h.interval(k);
    if (hi - lo <= 2.5 * margin)
      throw PreconditionError("stretch: eps margin exceeds an interval of h");
    b.push_back(lo + margin);
    im.push_back(points[k] - eta[k]);
    b.push_back(hi - margin);
    im.push_back(points[k] + eta[k]);
  }
  // normalize to the representation contract: breakpoints in [0, P)
  if (b.front() < 0) {
    for (double& v : b) v += P;  // cannot happen with h.interval(0).lo == 0
  }
  return CircleDiffeo::from_breakpoints(P, b, im);
}

}  // namespace reparam
