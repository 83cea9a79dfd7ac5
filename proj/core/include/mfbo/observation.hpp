#pragma once

#include <Eigen/Dense>
#include <vector>

namespace mfbo {

/// Axis-aligned box domain.
struct Box {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  static Box unit(Eigen::Index dim);
  static Box uniform(Eigen::Index dim, double lo, double hi);

  Eigen::Index dim() const noexcept { return lower.size(); }
  bool contains(const Eigen::VectorXd& x, double tol = 0.0) const;
  Eigen::VectorXd to_unit(const Eigen::VectorXd& x) const;
  Eigen::VectorXd from_unit(const Eigen::VectorXd& u) const;
  /// Clamp x into the box.
  Eigen::VectorXd clamp(const Eigen::VectorXd& x) const;
};

/// One (input, fidelity level, observed value) triple. Levels are 1-based.
struct Observation {
  Eigen::VectorXd x;
  int level = 1;
  double y = 0.0;
};

/// The dataset D_n plus the cumulative cost charged for it.
class ObservationSet {
 public:
  ObservationSet() = default;
  explicit ObservationSet(Eigen::Index dim) : dim_(dim) {}

  void add(Eigen::VectorXd x, int level, double y, double cost = 0.0);
  void add(const Observation& obs, double cost = 0.0) { add(obs.x, obs.level, obs.y, cost); }

  std::size_t size() const noexcept { return items_.size(); }
  bool empty() const noexcept { return items_.empty(); }
  Eigen::Index dim() const noexcept { return dim_; }
  const Observation& operator[](std::size_t i) const { return items_[i]; }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

  double budget() const noexcept { return budget_; }
  int max_level() const noexcept;
  std::size_t count(int level) const noexcept;

  /// All inputs as columns of a dim x n matrix.
  Eigen::MatrixXd points() const;
  Eigen::VectorXd targets() const;
  std::vector<int> levels() const;

  /// Subset observed at one level.
  ObservationSet at_level(int level) const;

 private:
  Eigen::Index dim_ = 0;
  std::vector<Observation> items_;
  double budget_ = 0.0;
};

}  // namespace mfbo
