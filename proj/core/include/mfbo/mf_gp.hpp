#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mfbo/gp.hpp"

namespace mfbo {

/// Autoregressive multifidelity kernel: f_l = rho_l * f_{l-1} + delta_l,
/// with delta_1 = f_1 and independent squared-exponential discrepancies.
struct MfKernelParams {
  /// kappa^(l) for l = 1..L (noise fields unused).
  std::vector<KernelParams> levels;
  /// rho[k] scales level k+1 into level k+2, i.e. rho_2..rho_L.
  std::vector<double> rho;
  /// Observation noise shared by every fidelity.
  double noise_variance = 0.0;

  int num_levels() const noexcept { return static_cast<int>(levels.size()); }
  /// Product rho_{j+1} * ... * rho_l (1 when j == l, 0 when j > l).
  double chain(int j, int l) const;
  /// Prior variance of f_l at a single point.
  double prior_variance(int l) const;
};

inline constexpr double kRhoMin = -5.0;
inline constexpr double kRhoMax = 5.0;

/// cov(f_l(x), f_l2(x2)) under the prior. Throws LevelOutOfRange.
double mf_kernel_eval(const MfKernelParams& p, const Eigen::VectorXd& x, int l, const Eigen::VectorXd& x2, int l2);

/// Cross-covariance between (a, la) columns and (b, lb) columns.
Eigen::MatrixXd mf_kernel_matrix(const MfKernelParams& p, const Eigen::MatrixXd& a, const std::vector<int>& la,
                                 const Eigen::MatrixXd& b, const std::vector<int>& lb);

/// Joint log evidence of standardized targets (optionally with gradient
/// over the packed log-parameter vector, see pack_mf_params).
double mf_log_marginal_likelihood(const Eigen::MatrixXd& x, const std::vector<int>& levels,
                                  const Eigen::VectorXd& y, const MfKernelParams& p, double relative_jitter,
                                  Eigen::VectorXd* gradient = nullptr);

/// [log l_1, log sv_1, ..., log l_L, log sv_L, rho_2..rho_L, log noise]
Eigen::VectorXd pack_mf_params(const MfKernelParams& p);
MfKernelParams unpack_mf_params(const Eigen::VectorXd& theta, Eigen::Index dim, int num_levels);

/// Posterior quantities at one input for a level l and the top level L.
struct LevelPair {
  Prediction level;      // f_l, objective units
  Prediction top;        // f_L, objective units
  double level_std_standardized = 0.0;
  double correlation = 0.0;
};

class MfGpPosterior {
 public:
  /// Exact posterior for fixed hyperparameters; inputs already normalized.
  /// `num_levels` may exceed the largest observed level (unobserved levels
  /// keep their prior). Escalates jitter on factorization failure.
  static MfGpPosterior condition(Eigen::MatrixXd x, std::vector<int> levels, Eigen::VectorXd y,
                                 MfKernelParams params);

  Prediction predict_level(const Eigen::VectorXd& x, int l) const;
  void predict_level(const Eigen::MatrixXd& x, int l, Eigen::VectorXd& mean, Eigen::VectorXd& std) const;

  /// Correlation between f_l(x) and f_L(x) under the posterior, in [-1, 1].
  double posterior_correlation(const Eigen::VectorXd& x, int l) const;
  /// Batch evaluation of everything the multifidelity acquisitions need.
  std::vector<LevelPair> level_pairs(const Eigen::MatrixXd& x, int l) const;

  MfGpPosterior with_observation(const Eigen::VectorXd& x, int l, double y) const;

  const MfKernelParams& params() const noexcept { return params_; }
  int num_levels() const noexcept { return params_.num_levels(); }
  Eigen::Index dim() const noexcept { return x_.rows(); }
  Eigen::Index size() const noexcept { return x_.cols(); }
  const Eigen::MatrixXd& inputs() const noexcept { return x_; }
  const std::vector<int>& levels() const noexcept { return levels_; }
  const Eigen::VectorXd& targets() const noexcept { return y_; }
  const Standardizer& standardizer(int l) const;
  double log_likelihood() const noexcept { return log_likelihood_; }
  /// Absolute jitter relative to each observation's prior variance.
  double relative_jitter() const noexcept { return relative_jitter_; }

 private:
  void fit_standardizers();
  void refresh_weights();
  Eigen::VectorXd standardized_targets() const;

  Eigen::MatrixXd x_;
  std::vector<int> levels_;
  Eigen::VectorXd y_;
  MfKernelParams params_;
  std::vector<Standardizer> standardizers_;
  SpdFactor factor_;
  Eigen::VectorXd alpha_;
  double relative_jitter_ = 0.0;
  double log_likelihood_ = 0.0;
};

/// Joint maximum-likelihood fit over every level. Requires the levels in
/// `data` to be exactly 1..L, at least two points at level 1. With L = 1
/// the result matches fit_gp on the same data and stream.
MfGpPosterior fit_mf_gp(const ObservationSet& data, RandomStream& stream, const GpFitSettings& settings = {},
                        const MfKernelParams* warm_start = nullptr);

inline Prediction predict_level(const MfGpPosterior& g, const Eigen::VectorXd& x, int l) {
  return g.predict_level(x, l);
}
inline double posterior_correlation(const MfGpPosterior& g, const Eigen::VectorXd& x, int l) {
  return g.posterior_correlation(x, l);
}

}  // namespace mfbo
