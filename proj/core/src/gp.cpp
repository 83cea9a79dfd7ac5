#include "mfbo/gp.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "mfbo/errors.hpp"

namespace mfbo {

namespace {

constexpr double kLog2Pi = 1.83787706640934548356;

Eigen::VectorXd log_lower_bounds(Eigen::Index d) {
  Eigen::VectorXd lo(d + 2);
  lo.head(d).setConstant(std::log(kernel_bounds::kLengthscaleMin));
  lo[d] = std::log(kernel_bounds::kSignalMin);
  lo[d + 1] = std::log(kernel_bounds::kNoiseMin);
  return lo;
}

Eigen::VectorXd log_upper_bounds(Eigen::Index d) {
  Eigen::VectorXd hi(d + 2);
  hi.head(d).setConstant(std::log(kernel_bounds::kLengthscaleMax));
  hi[d] = std::log(kernel_bounds::kSignalMax);
  hi[d + 1] = std::log(kernel_bounds::kNoiseMax);
  return hi;
}

KernelParams from_log(const Eigen::VectorXd& theta, Eigen::Index d) {
  KernelParams p;
  p.lengthscales = theta.head(d).array().exp();
  p.signal_variance = std::exp(theta[d]);
  p.noise_variance = std::exp(theta[d + 1]);
  return p;
}

Eigen::VectorXd to_log(const KernelParams& p) {
  const Eigen::Index d = p.lengthscales.size();
  Eigen::VectorXd theta(d + 2);
  theta.head(d) = p.lengthscales.array().log();
  theta[d] = std::log(p.signal_variance);
  theta[d + 1] = std::log(std::max(p.noise_variance, kernel_bounds::kNoiseMin));
  return theta;
}

Eigen::MatrixXd training_covariance(const Eigen::MatrixXd& x, const KernelParams& p, double absolute_jitter) {
  Eigen::MatrixXd k = kernel_matrix(p, x, x);
  k.diagonal().array() += p.noise_variance + absolute_jitter;
  return k;
}

}  // namespace

double se_correlation(const Eigen::VectorXd& lengthscales, const Eigen::VectorXd& x, const Eigen::VectorXd& x2) {
  if (x.size() != x2.size() || x.size() != lengthscales.size())
    throw DimensionMismatch("se_correlation: dimension mismatch");
  double r2 = 0.0;
  for (Eigen::Index d = 0; d < x.size(); ++d) {
    const double t = (x[d] - x2[d]) / lengthscales[d];
    r2 += t * t;
  }
  return std::exp(-0.5 * r2);
}

double kernel_eval(const KernelParams& p, const Eigen::VectorXd& x, const Eigen::VectorXd& x2) {
  return p.signal_variance * se_correlation(p.lengthscales, x, x2);
}

Eigen::MatrixXd kernel_matrix(const KernelParams& p, const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const Eigen::Index d = p.lengthscales.size();
  if (a.rows() != d || b.rows() != d) throw DimensionMismatch("kernel_matrix: dimension mismatch");
  const Eigen::VectorXd inv_l = p.lengthscales.cwiseInverse();
  const Eigen::MatrixXd za = inv_l.asDiagonal() * a;
  const Eigen::MatrixXd zb = inv_l.asDiagonal() * b;
  Eigen::MatrixXd k(a.cols(), b.cols());
  for (Eigen::Index j = 0; j < b.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.cols(); ++i) {
      k(i, j) = p.signal_variance * std::exp(-0.5 * (za.col(i) - zb.col(j)).squaredNorm());
    }
  }
  return k;
}

Evidence gaussian_evidence(const Eigen::MatrixXd& covariance, const Eigen::VectorXd& y, bool with_inverse_term) {
  Evidence e;
  e.factor = spd_factor(covariance);
  e.alpha = e.factor.solve(y);
  const double n = static_cast<double>(y.size());
  e.value = -0.5 * y.dot(e.alpha) - 0.5 * e.factor.log_determinant() - 0.5 * n * kLog2Pi;
  if (with_inverse_term) {
    e.w = e.alpha * e.alpha.transpose() - e.factor.inverse();
  }
  return e;
}

double log_marginal_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const KernelParams& p,
                               double jitter) {
  if (x.cols() != y.size()) throw DimensionMismatch("log_marginal_likelihood: inputs and targets disagree");
  if (y.size() < 1) throw DegenerateData("log_marginal_likelihood: empty data");
  return gaussian_evidence(training_covariance(x, p, jitter), y, false).value;
}

double log_marginal_likelihood(const ObservationSet& data, const KernelParams& p, double jitter) {
  return log_marginal_likelihood(data.points(), data.targets(), p, jitter);
}

double log_marginal_likelihood_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                        const KernelParams& p, double relative_jitter,
                                        Eigen::VectorXd* gradient) {
  const Eigen::Index d = x.rows();
  const Eigen::Index n = x.cols();
  const Eigen::MatrixXd corr = kernel_matrix(KernelParams{p.lengthscales, 1.0, 0.0}, x, x);
  Eigen::MatrixXd k = p.signal_variance * corr;
  k.diagonal().array() += p.noise_variance + relative_jitter * p.signal_variance;
  const Evidence e = gaussian_evidence(k, y, gradient != nullptr);
  if (gradient) {
    gradient->setZero(d + 2);
    const Eigen::MatrixXd& w = e.w;
    // Off-diagonal pairs counted twice through symmetry.
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = j + 1; i < n; ++i) {
        const double base = w(i, j) * p.signal_variance * corr(i, j);
        for (Eigen::Index q = 0; q < d; ++q) {
          const double t = (x(q, i) - x(q, j)) / p.lengthscales[q];
          (*gradient)[q] += base * t * t;
        }
      }
    }
    const double ws = (w.array() * corr.array()).sum() + relative_jitter * w.trace();
    (*gradient)[d] = 0.5 * p.signal_variance * ws;
    (*gradient)[d + 1] = 0.5 * p.noise_variance * w.trace();
  }
  return e.value;
}

Standardizer Standardizer::fit(const Eigen::VectorXd& y) {
  Standardizer s;
  if (y.size() == 0) return s;
  s.offset = y.mean();
  if (y.size() >= 2) {
    const double var = (y.array() - s.offset).square().sum() / static_cast<double>(y.size() - 1);
    const double sd = std::sqrt(var);
    if (sd > 1e-12 * std::max(1.0, std::abs(s.offset))) s.scale = sd;
  }
  return s;
}

GpPosterior GpPosterior::condition(Eigen::MatrixXd x, Eigen::VectorXd y, KernelParams params) {
  if (x.cols() != y.size()) throw DimensionMismatch("GpPosterior::condition: inputs and targets disagree");
  if (params.lengthscales.size() != x.rows()) throw DimensionMismatch("GpPosterior::condition: lengthscale count");
  GpPosterior g;
  g.x_ = std::move(x);
  g.y_ = std::move(y);
  g.params_ = std::move(params);
  g.standardizer_ = Standardizer::fit(g.y_);
  for (double rel = jitter::kInitial;; rel *= 10.0) {
    try {
      g.jitter_ = rel * g.params_.signal_variance;
      g.factor_ = spd_factor(training_covariance(g.x_, g.params_, g.jitter_));
      break;
    } catch (const NotPositiveDefinite&) {
      if (rel * 10.0 > jitter::kMax * (1.0 + 1e-9)) throw;
    }
  }
  g.refresh_weights();
  return g;
}

void GpPosterior::refresh_weights() {
  const Eigen::VectorXd ys = standardizer_.apply(y_);
  alpha_ = factor_.solve(ys);
  const double n = static_cast<double>(ys.size());
  log_likelihood_ = -0.5 * ys.dot(alpha_) - 0.5 * factor_.log_determinant() - 0.5 * n * kLog2Pi;
}

GpPosterior GpPosterior::with_observation(const Eigen::VectorXd& x, double y) const {
  if (x.size() != dim()) throw DimensionMismatch("with_observation: point has wrong dimension");
  GpPosterior g = *this;
  g.x_.conservativeResize(Eigen::NoChange, size() + 1);
  g.x_.col(size()) = x;
  g.y_.conservativeResize(size() + 1);
  g.y_[size()] = y;
  g.standardizer_ = Standardizer::fit(g.y_);
  const Eigen::VectorXd cross = kernel_matrix(params_, x_, x).col(0);
  try {
    g.factor_.append(cross, params_.signal_variance + params_.noise_variance + jitter_);
  } catch (const NotPositiveDefinite&) {
    return condition(g.x_, g.y_, params_);
  }
  g.refresh_weights();
  return g;
}

Prediction GpPosterior::predict(const Eigen::VectorXd& x) const {
  Eigen::VectorXd mean, sd;
  predict(Eigen::MatrixXd(x), mean, sd);
  return {mean[0], sd[0]};
}

void GpPosterior::predict(const Eigen::MatrixXd& x, Eigen::VectorXd& mean, Eigen::VectorXd& sd) const {
  if (x.rows() != dim()) throw DimensionMismatch("GpPosterior::predict: point has wrong dimension");
  const Eigen::MatrixXd ks = kernel_matrix(params_, x_, x);
  mean = ks.transpose() * alpha_;
  const Eigen::MatrixXd v = factor_.solve_lower(ks);
  const Eigen::VectorXd var =
      (params_.signal_variance - v.colwise().squaredNorm().transpose().array()).cwiseMax(0.0).matrix();
  mean = (mean.array() * standardizer_.scale + standardizer_.offset).matrix();
  sd = (var.array().sqrt() * standardizer_.scale).matrix();
}

GpPosterior fit_gp(const ObservationSet& data, RandomStream& stream, const GpFitSettings& settings,
                   const KernelParams* warm_start) {
  if (data.size() < 2) throw DegenerateData("fit_gp: need at least two observations");
  const Eigen::MatrixXd x = data.points();
  const Eigen::VectorXd y = data.targets();
  const Eigen::Index d = x.rows();
  const Standardizer st = Standardizer::fit(y);

  if ((y.array() == y[0]).all()) {
    KernelParams flat{Eigen::VectorXd::Ones(d), kernel_bounds::kSignalMin, kernel_bounds::kNoiseMin};
    GpPosterior g = GpPosterior::condition(x, y, flat);
    g.degenerate_ = true;
    return g;
  }

  const Eigen::VectorXd ys = st.apply(y);
  const Eigen::VectorXd lo = log_lower_bounds(d);
  const Eigen::VectorXd hi = log_upper_bounds(d);

  BoxObjective objective = [&](const Eigen::VectorXd& theta, Eigen::VectorXd* grad) {
    const KernelParams p = from_log(theta, d);
    for (double rel = jitter::kInitial; rel <= jitter::kMax * (1.0 + 1e-9); rel *= 10.0) {
      try {
        return log_marginal_likelihood_gradient(x, ys, p, rel, grad);
      } catch (const NotPositiveDefinite&) {
      }
    }
    return -std::numeric_limits<double>::infinity();
  };

  const Eigen::Index n_lhs = std::max(settings.restarts, 1);
  Eigen::MatrixXd starts(d + 2, n_lhs + (warm_start ? 1 : 0));
  const Eigen::MatrixXd unit = latin_hypercube(n_lhs, d + 2, stream);
  for (Eigen::Index s = 0; s < n_lhs; ++s)
    starts.col(s) = lo.array() + unit.col(s).array() * (hi - lo).array();
  if (warm_start) starts.col(n_lhs) = to_log(*warm_start).cwiseMax(lo).cwiseMin(hi);

  const HyperoptResult best = maximize_in_box(objective, lo, hi, starts, settings.local);
  if (best.theta.size() == 0) throw NotPositiveDefinite("fit_gp: no start point produced a factorizable covariance");
  GpPosterior g = GpPosterior::condition(x, y, from_log(best.theta, d));
  return g;
}

}  // namespace mfbo
