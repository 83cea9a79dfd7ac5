#pragma once

#include <Eigen/Dense>
#include <optional>

#include "mfbo/hyperopt.hpp"
#include "mfbo/math_stats.hpp"
#include "mfbo/observation.hpp"
#include "mfbo/random.hpp"

namespace mfbo {

/// Squared-exponential (ARD) kernel hyperparameters, in normalized-input
/// and standardized-output units.
struct KernelParams {
  Eigen::VectorXd lengthscales;
  double signal_variance = 1.0;
  double noise_variance = 0.0;
};

/// Box used by maximum-likelihood fitting.
namespace kernel_bounds {
inline constexpr double kLengthscaleMin = 1e-3;
inline constexpr double kLengthscaleMax = 1e2;
inline constexpr double kSignalMin = 1e-8;
inline constexpr double kSignalMax = 1e4;
inline constexpr double kNoiseMin = 1e-10;
inline constexpr double kNoiseMax = 1e2;
}  // namespace kernel_bounds

/// Diagonal jitter schedule, relative to the signal variance.
namespace jitter {
inline constexpr double kInitial = 1e-8;
inline constexpr double kMax = 1e-4;
}  // namespace jitter

/// sv * exp(-sum_d (x_d - x2_d)^2 / (2 l_d^2)). Throws DimensionMismatch.
double kernel_eval(const KernelParams& p, const Eigen::VectorXd& x, const Eigen::VectorXd& x2);

/// Unit-signal squared-exponential correlation.
double se_correlation(const Eigen::VectorXd& lengthscales, const Eigen::VectorXd& x, const Eigen::VectorXd& x2);

/// Cross-covariance between columns of a (D x n) and b (D x m); noise not included.
Eigen::MatrixXd kernel_matrix(const KernelParams& p, const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Gaussian evidence log N(y | 0, K), with alpha = K^{-1} y.
/// When `with_inverse_term` is set, also returns W = alpha alpha^T - K^{-1},
/// so that d(log evidence)/d(theta) = 0.5 * sum(W .* dK/d(theta)).
struct Evidence {
  double value = 0.0;
  SpdFactor factor;
  Eigen::VectorXd alpha;
  Eigen::MatrixXd w;
};
Evidence gaussian_evidence(const Eigen::MatrixXd& covariance, const Eigen::VectorXd& y, bool with_inverse_term);

/// -1/2 y^T a - 1/2 log det(K + s^2 I) - n/2 log 2 pi with K built from
/// `p`, plus `jitter` (absolute) on the diagonal. Inputs are the columns
/// of `x`. Throws NotPositiveDefinite.
double log_marginal_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const KernelParams& p,
                               double jitter = 0.0);
double log_marginal_likelihood(const ObservationSet& data, const KernelParams& p, double jitter = 0.0);

/// Log marginal likelihood and its gradient with respect to
/// [log l_1..log l_D, log sv, log noise]. The jitter is relative to sv.
double log_marginal_likelihood_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                        const KernelParams& p, double relative_jitter,
                                        Eigen::VectorXd* gradient);

/// Affine target standardization.
struct Standardizer {
  double offset = 0.0;
  double scale = 1.0;

  static Standardizer fit(const Eigen::VectorXd& y);
  Eigen::VectorXd apply(const Eigen::VectorXd& y) const { return (y.array() - offset) / scale; }
};

struct Prediction {
  double mean = 0.0;
  double std = 0.0;
};

struct GpFitSettings {
  int restarts = 10;
  HyperoptSettings local;
};

/// Fitted single-fidelity posterior. Immutable; predictions are pure.
class GpPosterior {
 public:
  /// Exact posterior for fixed hyperparameters. Inputs must already be
  /// normalized. Escalates jitter on factorization failure.
  static GpPosterior condition(Eigen::MatrixXd x, Eigen::VectorXd y, KernelParams params);

  Prediction predict(const Eigen::VectorXd& x) const;
  /// Batch prediction over the columns of `x`.
  void predict(const Eigen::MatrixXd& x, Eigen::VectorXd& mean, Eigen::VectorXd& std) const;

  /// Posterior after adding one observation with the hyperparameters held fixed.
  GpPosterior with_observation(const Eigen::VectorXd& x, double y) const;

  const KernelParams& params() const noexcept { return params_; }
  const Eigen::MatrixXd& inputs() const noexcept { return x_; }
  const Eigen::VectorXd& targets() const noexcept { return y_; }
  const Standardizer& standardizer() const noexcept { return standardizer_; }
  double jitter() const noexcept { return jitter_; }
  bool degenerate() const noexcept { return degenerate_; }
  /// Log marginal likelihood of the standardized targets.
  double log_likelihood() const noexcept { return log_likelihood_; }
  Eigen::Index dim() const noexcept { return x_.rows(); }
  Eigen::Index size() const noexcept { return x_.cols(); }

 private:
  friend GpPosterior fit_gp(const ObservationSet&, RandomStream&, const GpFitSettings&, const KernelParams*);

  void refresh_weights();

  Eigen::MatrixXd x_;
  Eigen::VectorXd y_;
  KernelParams params_;
  Standardizer standardizer_;
  SpdFactor factor_;
  Eigen::VectorXd alpha_;
  double jitter_ = 0.0;  // absolute, standardized units
  double log_likelihood_ = 0.0;
  bool degenerate_ = false;
};

/// Maximum-likelihood fit on the observations of a single fidelity (the
/// level tag is ignored). Needs at least two distinct points. When all
/// targets are identical the result is a flat posterior with the signal
/// variance at its lower bound. `warm_start`, when given, is tried as an
/// extra start point.
GpPosterior fit_gp(const ObservationSet& data, RandomStream& stream, const GpFitSettings& settings = {},
                   const KernelParams* warm_start = nullptr);

inline Prediction predict(const GpPosterior& g, const Eigen::VectorXd& x) { return g.predict(x); }

}  // namespace mfbo
