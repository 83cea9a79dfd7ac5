#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace mfbo {

/// Location, objective and combined errors of an incumbent at a budget.
struct MetricPoint {
  double budget = 0.0;
  double eps_x = 0.0;
  double eps_f = 0.0;
  double eps_t = 0.0;
};

/// One optimization step. Iteration 0 describes the initial design
/// (level 0, x and y are the initial incumbent).
struct TrialRecord {
  int iteration = 0;
  double budget = 0.0;
  int level = 0;
  Eigen::VectorXd x;
  double y = 0.0;
  double incumbent = 0.0;
  Eigen::VectorXd incumbent_x;
  MetricPoint metrics;
};

struct TrialTrace {
  std::string benchmark;
  std::string acquisition;
  int trial = 0;
  std::uint64_t seed = 0;
  double budget_max = 0.0;
  std::vector<TrialRecord> records;
  std::string status;
};

}  // namespace mfbo
