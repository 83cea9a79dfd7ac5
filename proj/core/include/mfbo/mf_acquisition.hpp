#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "mfbo/acquisition.hpp"
#include "mfbo/mf_gp.hpp"

namespace mfbo {

/// Per-level query costs, strictly increasing, with the top level at 1.
class CostSchedule {
 public:
  CostSchedule() = default;
  /// Throws InvalidConfig unless the costs are positive, strictly increasing and end at 1.
  explicit CostSchedule(std::vector<double> costs);

  int num_levels() const noexcept { return static_cast<int>(costs_.size()); }
  /// Cost of level l (1-based). Throws LevelOutOfRange.
  double cost(int l) const;
  double min_cost() const { return costs_.front(); }
  const std::vector<double>& costs() const noexcept { return costs_; }

 private:
  std::vector<double> costs_;
};

struct MfRecommendation {
  Eigen::VectorXd location;
  int level = 1;
  double score = 0.0;
};

/// Factors of the multifidelity EI at one point.
struct MfeiFactors {
  double ei = 0.0;
  double correlation = 0.0;  // alpha_1
  double noise = 0.0;        // alpha_2
  double cost = 0.0;         // alpha_3
};

/// EI on the top-level posterior times |posterior correlation|,
/// the noise factor 1 - s / sqrt(var_l + s^2) and the cost ratio.
double mfei(const MfGpPosterior& g, const Incumbent& inc, const CostSchedule& costs, const Eigen::VectorXd& x, int l);
Eigen::VectorXd mfei(const MfGpPosterior& g, const Incumbent& inc, const CostSchedule& costs,
                     const Eigen::MatrixXd& x, int l);
MfeiFactors mfei_factors(const MfGpPosterior& g, const Incumbent& inc, const CostSchedule& costs,
                         const Eigen::VectorXd& x, int l);

/// Product over level-l training inputs of (1 - R(x, x_i)), R the
/// unit-signal squared-exponential correlation with the level-1 lengthscales.
double sample_density(const MfGpPosterior& g, const Eigen::VectorXd& x, int l);

/// PI on the top-level posterior times |posterior correlation|, the cost
/// ratio and the sample density of level l.
double mfpi(const MfGpPosterior& g, const Incumbent& inc, const CostSchedule& costs, const Eigen::VectorXd& x, int l);
Eigen::VectorXd mfpi(const MfGpPosterior& g, const Incumbent& inc, const CostSchedule& costs,
                     const Eigen::MatrixXd& x, int l);

/// rho^2 * MES on the top level / cost(l), rho the posterior correlation.
double mfmes(const MfGpPosterior& g, const std::vector<double>& min_values, const CostSchedule& costs,
             const Eigen::VectorXd& x, int l);
Eigen::VectorXd mfmes(const MfGpPosterior& g, const std::vector<double>& min_values, const CostSchedule& costs,
                      const Eigen::MatrixXd& x, int l);

/// Min-value draws for the top level of a multifidelity posterior; the
/// incumbent is the best top-level observation.
std::vector<double> sample_min_values(const MfGpPosterior& g, const MesSettings& settings, RandomStream& stream);

/// Acquisition values at level l over the columns of a matrix.
using MfBatchEvaluator = std::function<Eigen::VectorXd(const Eigen::MatrixXd& x, int l)>;

/// Candidates are shared across levels; each level is polished on its
/// own. Ties go to the higher level.
MfRecommendation maximize_mf_acquisition(const MfBatchEvaluator& acquisition, const Box& domain, int num_levels,
                                         RandomStream& stream, const MaximizerSettings& settings = {});

}  // namespace mfbo
