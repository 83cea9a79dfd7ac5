#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "mfbo/gp.hpp"
#include "mfbo/observation.hpp"
#include "mfbo/random.hpp"

namespace mfbo {

// Posteriors live on normalized inputs, so every acquisition below takes
// points in the same normalized space the surrogate was fitted on.

/// Best observation so far at the reference fidelity.
struct Incumbent {
  Eigen::VectorXd location;
  double value = 0.0;
};

/// Minimum target among observations at `level`. Throws EmptyInput when the level has none.
Incumbent incumbent_at_level(const ObservationSet& data, int level);

struct MesSettings {
  int num_min_samples = 10;
  /// Space-filling grid size for the min-value sampler; 0 selects 100 * D.
  int grid_size = 0;

  int resolved_grid_size(Eigen::Index dim) const;
};

/// Standard-deviation floor below which the sigma -> 0 limits are used.
inline constexpr double kSigmaFloor = 1e-12;

/// sigma * (I Phi(I) + phi(I)), I = (best - mean) / sigma.
double expected_improvement(double mean, double sd, double best);
/// Phi(I).
double probability_of_improvement(double mean, double sd, double best);
/// gamma phi(gamma) / (2 Phi(gamma)) - log Phi(gamma), clamped at 0.
double truncated_entropy_reduction(double gamma);
/// Average of truncated_entropy_reduction((mean - f*) / sd) over the draws.
double max_value_entropy_search(double mean, double sd, const std::vector<double>& min_values);

double expected_improvement(const GpPosterior& g, const Incumbent& inc, const Eigen::VectorXd& x);
double probability_of_improvement(const GpPosterior& g, const Incumbent& inc, const Eigen::VectorXd& x);
double max_value_entropy_search(const GpPosterior& g, const std::vector<double>& min_values,
                                const Eigen::VectorXd& x);

/// Posterior mean and standard deviation over the columns of a matrix.
using BatchPredictor = std::function<void(const Eigen::MatrixXd& x, Eigen::VectorXd& mean, Eigen::VectorXd& sd)>;

/// Draws of the global minimum value from a Gumbel law fitted to the
/// quartiles of P(min <= y) = 1 - prod_i Phi((mu_i - y) / sigma_i) over
/// `grid` (columns). Draws never exceed `incumbent`.
std::vector<double> sample_min_values(const BatchPredictor& predictor, const Eigen::MatrixXd& grid,
                                      double incumbent, int num_samples, RandomStream& stream);

/// Grid = Latin hypercube of the resolved grid size on the unit cube plus
/// the training inputs; incumbent = smallest training target.
std::vector<double> sample_min_values(const GpPosterior& g, const MesSettings& settings, RandomStream& stream);

/// Grid used by sample_min_values: LHS points followed by `extra` columns.
Eigen::MatrixXd min_value_grid(Eigen::Index dim, int grid_size, const Eigen::MatrixXd& extra, RandomStream& stream);

/// Acquisition values over the columns of a matrix.
using BatchEvaluator = std::function<Eigen::VectorXd(const Eigen::MatrixXd& x)>;

struct MaximizerSettings {
  int candidates_per_dim = 1000;
  int polish_starts = 5;
  int polish_iterations = 100;
  /// Pattern-search step bounds as fractions of each box width.
  double initial_step = 0.1;
  double min_step = 1e-6;
};

struct AcquisitionOptimum {
  Eigen::VectorXd x;
  double value = 0.0;
};

/// Uniform candidates over the box, then coordinate pattern search from
/// the best few. Non-finite scores count as -infinity.
AcquisitionOptimum maximize_acquisition(const BatchEvaluator& acquisition, const Box& domain, RandomStream& stream,
                                        const MaximizerSettings& settings = {});

/// Pattern search from one start point; never returns a worse point.
AcquisitionOptimum pattern_search(const BatchEvaluator& acquisition, const Box& domain, Eigen::VectorXd start,
                                  double start_value, const MaximizerSettings& settings = {});

/// Pattern search from the best `polish_starts` of precomputed candidate
/// scores; the result is never below the best candidate.
AcquisitionOptimum polish_candidates(const BatchEvaluator& acquisition, const Box& domain,
                                     const Eigen::MatrixXd& candidates, const Eigen::VectorXd& values,
                                     const MaximizerSettings& settings = {});

/// Uniform candidate matrix used by maximize_acquisition.
Eigen::MatrixXd uniform_candidates(const Box& domain, Eigen::Index count, RandomStream& stream);

}  // namespace mfbo
