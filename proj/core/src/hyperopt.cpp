#include "mfbo/hyperopt.hpp"

#include <cmath>
#include <limits>

#include "mfbo/errors.hpp"

namespace mfbo {

namespace {

constexpr double kEdge = 1e-9;

struct Reparam {
  const Eigen::VectorXd& lo;
  const Eigen::VectorXd& hi;

  Eigen::VectorXd to_theta(const Eigen::VectorXd& u, Eigen::VectorXd* jac) const {
    Eigen::VectorXd theta(u.size());
    if (jac) jac->resize(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      const double s = 1.0 / (1.0 + std::exp(-u[i]));
      theta[i] = lo[i] + (hi[i] - lo[i]) * s;
      if (jac) (*jac)[i] = (hi[i] - lo[i]) * s * (1.0 - s);
    }
    return theta;
  }

  Eigen::VectorXd to_u(const Eigen::VectorXd& theta) const {
    Eigen::VectorXd u(theta.size());
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      double s = (theta[i] - lo[i]) / (hi[i] - lo[i]);
      s = std::clamp(s, kEdge, 1.0 - kEdge);
      u[i] = std::log(s / (1.0 - s));
    }
    return u;
  }
};

struct LocalResult {
  Eigen::VectorXd theta;
  double value;
  int evaluations;
};

LocalResult bfgs_from(const BoxObjective& objective, const Reparam& rp, const Eigen::VectorXd& theta0,
                      const HyperoptSettings& settings) {
  const Eigen::Index n = theta0.size();
  int evals = 0;
  // f(u) = -objective(theta(u)); minimized.
  auto eval = [&](const Eigen::VectorXd& u, Eigen::VectorXd& g) {
    Eigen::VectorXd jac;
    const Eigen::VectorXd theta = rp.to_theta(u, &jac);
    Eigen::VectorXd gt = Eigen::VectorXd::Zero(n);
    ++evals;
    const double v = objective(theta, &gt);
    if (!std::isfinite(v) || !gt.allFinite()) return std::numeric_limits<double>::infinity();
    g = -(gt.array() * jac.array()).matrix();
    return -v;
  };

  Eigen::VectorXd u = rp.to_u(theta0);
  Eigen::VectorXd g(n);
  double f = eval(u, g);
  if (!std::isfinite(f)) return {rp.to_theta(u, nullptr), -f, evals};

  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);
  int stalled = 0;
  for (int it = 0; it < settings.max_iterations; ++it) {
    if (g.lpNorm<Eigen::Infinity>() < settings.gradient_tolerance) break;
    Eigen::VectorXd u_new, g_new(n);
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    // A failed search along the quasi-Newton direction is retried once
    // along steepest descent.
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      Eigen::VectorXd dir = -h * g;
      double slope = g.dot(dir);
      if (attempt == 1 || !(slope < 0.0)) {
        if (attempt == 1 && h.isIdentity()) break;
        h.setIdentity();
        dir = -g;
        slope = -g.squaredNorm();
      }
      // Keep each trial step within a few logistic units.
      const double max_step = dir.lpNorm<Eigen::Infinity>();
      double step = max_step > 4.0 ? 4.0 / max_step : 1.0;
      for (int ls = 0; ls < 40; ++ls) {
        u_new = u + step * dir;
        f_new = eval(u_new, g_new);
        if (std::isfinite(f_new) && f_new <= f + 1e-4 * step * slope) {
          accepted = true;
          break;
        }
        step *= 0.5;
      }
    }
    if (!accepted) break;

    const Eigen::VectorXd s = u_new - u;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    const double improvement = f - f_new;
    u = u_new;
    g = g_new;
    f = f_new;
    if (sy > 1e-12) {
      if (it == 0) h *= sy / y.squaredNorm();
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
      h = (eye - rho * s * y.transpose()) * h * (eye - rho * y * s.transpose()) + rho * s * s.transpose();
    }
    stalled = improvement < settings.value_tolerance * (1.0 + std::abs(f)) ? stalled + 1 : 0;
    if (stalled >= 3) break;
  }
  return {rp.to_theta(u, nullptr), -f, evals};
}

}  // namespace

HyperoptResult maximize_in_box(const BoxObjective& objective, const Eigen::VectorXd& lower,
                               const Eigen::VectorXd& upper, const Eigen::MatrixXd& starts,
                               const HyperoptSettings& settings) {
  if (lower.size() != upper.size() || starts.rows() != lower.size())
    throw DimensionMismatch("maximize_in_box: bounds and starts disagree in dimension");
  const Reparam rp{lower, upper};
  HyperoptResult best;
  best.value = -std::numeric_limits<double>::infinity();
  for (Eigen::Index s = 0; s < starts.cols(); ++s) {
    // Evaluate the start exactly as given so the reported start value is honest.
    const Eigen::VectorXd theta0 = starts.col(s).cwiseMax(lower).cwiseMin(upper);
    const double v0 = objective(theta0, nullptr);
    ++best.evaluations;
    best.start_values.push_back(v0);
    if (std::isfinite(v0) && v0 > best.value) {
      best.value = v0;
      best.theta = theta0;
    }
    const LocalResult local = bfgs_from(objective, rp, theta0, settings);
    best.evaluations += local.evaluations;
    if (std::isfinite(local.value) && local.value > best.value) {
      best.value = local.value;
      best.theta = local.theta;
    }
  }
  return best;
}

}  // namespace mfbo
