#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace mfbo {

/// Objective to maximize over a box. When `grad` is non-null it must be
/// filled with the gradient at `theta`. Non-finite values mark infeasible points.
using BoxObjective = std::function<double(const Eigen::VectorXd& theta, Eigen::VectorXd* grad)>;

struct HyperoptSettings {
  int max_iterations = 300;
  double gradient_tolerance = 1e-6;
  double value_tolerance = 1e-10;
};

struct HyperoptResult {
  Eigen::VectorXd theta;
  double value = 0.0;
  /// Objective at every start point, in the order given.
  std::vector<double> start_values;
  int evaluations = 0;
};

/// Multi-start local maximization inside [lower, upper].
///
/// Each start runs quasi-Newton (BFGS) in logistic coordinates
/// theta = lower + (upper - lower) * sigmoid(u), so iterates never leave the
/// box. Starts are the columns of `starts`. The returned value is never
/// below the best start value.
HyperoptResult maximize_in_box(const BoxObjective& objective, const Eigen::VectorXd& lower,
                               const Eigen::VectorXd& upper, const Eigen::MatrixXd& starts,
                               const HyperoptSettings& settings = {});

}  // namespace mfbo
