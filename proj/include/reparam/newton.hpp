#pragma once

// Damped Newton with Broyden updates inside a trust cube, shared by the two
// converse solvers.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace reparam::detail {

using VectorMap = std::function<Eigen::VectorXd(const std::vector<double>&)>;

inline Eigen::MatrixXd fd_jacobian(const VectorMap& map, const std::vector<double>& alpha,
                                   int n, double h = 1e-6) {
  Eigen::MatrixXd J(n, int(alpha.size()));
  for (std::size_t j = 0; j < alpha.size(); ++j) {
    std::vector<double> ap = alpha, am = alpha;
    ap[j] += h;
    am[j] -= h;
    J.col(long(j)) = (map(ap) - map(am)) / (2 * h);
  }
  return J;
}

struct NewtonResult {
  bool converged = false;
  std::vector<double> alpha;
  Eigen::VectorXd residual;
  int iterations = 0;
  double jacobian_condition = 0.0;
};

inline NewtonResult newton_on_alpha(const VectorMap& map, Eigen::MatrixXd J,
                                    double trust_radius, double target, int max_iter = 60) {
  const int n = int(J.rows());
  NewtonResult res;
  res.alpha.assign(std::size_t(n), 0.0);
  res.residual = map(res.alpha);
  double rn = res.residual.cwiseAbs().maxCoeff();
  bool refreshed = false;
  int since_refresh = 0;

  for (int it = 0; it < max_iter; ++it) {
    res.iterations = it;
    if (rn < target) {
      res.converged = true;
      break;
    }
    Eigen::VectorXd step = J.partialPivLu().solve(-res.residual);
    // stay strictly inside the trust cube
    double factor = 1.0;
    for (int i = 0; i < n; ++i) {
      double cand = std::abs(res.alpha[std::size_t(i)] + step(i));
      if (cand >= 0.95 * trust_radius)
        factor = std::min(factor,
                          (0.95 * trust_radius - std::abs(res.alpha[std::size_t(i)])) /
                              std::max(std::abs(step(i)), 1e-300));
    }
    if (factor < 0.02) break;  // pinned to the boundary: caller shrinks eps
    if (factor < 1.0) step *= factor;

    double lambda = 1.0;
    bool improved = false;
    std::vector<double> best_alpha;
    Eigen::VectorXd best_r;
    for (int half = 0; half < 12; ++half) {
      std::vector<double> cand = res.alpha;
      for (int i = 0; i < n; ++i) cand[std::size_t(i)] += lambda * step(i);
      Eigen::VectorXd rc = map(cand);
      if (rc.cwiseAbs().maxCoeff() < rn) {
        best_alpha = std::move(cand);
        best_r = std::move(rc);
        improved = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!improved) {
      if (refreshed) break;
      J = fd_jacobian(map, res.alpha, n);
      refreshed = true;
      since_refresh = 0;
      continue;
    }
    Eigen::VectorXd dalpha(n);
    for (int i = 0; i < n; ++i)
      dalpha(i) = best_alpha[std::size_t(i)] - res.alpha[std::size_t(i)];
    Eigen::VectorXd dr = best_r - res.residual;
    J += (dr - J * dalpha) * dalpha.transpose() / dalpha.squaredNorm();
    res.alpha = std::move(best_alpha);
    res.residual = std::move(best_r);
    rn = res.residual.cwiseAbs().maxCoeff();
    refreshed = false;
    if (++since_refresh >= 10) {
      J = fd_jacobian(map, res.alpha, n);
      since_refresh = 0;
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
  double smin = svd.singularValues()(n - 1);
  res.jacobian_condition = smin > 0 ? svd.singularValues()(0) / smin
                                    : std::numeric_limits<double>::infinity();
  return res;
}

}  // namespace reparam::detail
