#include "mfbo/observation.hpp"

#include <algorithm>

#include "mfbo/errors.hpp"

namespace mfbo {

Box Box::unit(Eigen::Index dim) { return uniform(dim, 0.0, 1.0); }

Box Box::uniform(Eigen::Index dim, double lo, double hi) {
  return Box{Eigen::VectorXd::Constant(dim, lo), Eigen::VectorXd::Constant(dim, hi)};
}

bool Box::contains(const Eigen::VectorXd& x, double tol) const {
  if (x.size() != dim()) return false;
  for (Eigen::Index i = 0; i < dim(); ++i) {
    if (!(x[i] >= lower[i] - tol && x[i] <= upper[i] + tol)) return false;
  }
  return true;
}

Eigen::VectorXd Box::to_unit(const Eigen::VectorXd& x) const {
  if (x.size() != dim()) throw DimensionMismatch("Box::to_unit: dimension mismatch");
  return ((x - lower).array() / (upper - lower).array()).matrix();
}

Eigen::VectorXd Box::from_unit(const Eigen::VectorXd& u) const {
  if (u.size() != dim()) throw DimensionMismatch("Box::from_unit: dimension mismatch");
  Eigen::VectorXd x = lower.array() + u.array() * (upper - lower).array();
  return clamp(x);
}

Eigen::VectorXd Box::clamp(const Eigen::VectorXd& x) const { return x.cwiseMax(lower).cwiseMin(upper); }

void ObservationSet::add(Eigen::VectorXd x, int level, double y, double cost) {
  if (dim_ == 0 && items_.empty()) dim_ = x.size();
  if (x.size() != dim_) throw DimensionMismatch("ObservationSet::add: point has wrong dimension");
  if (level < 1) throw LevelOutOfRange("ObservationSet::add: level must be >= 1");
  items_.push_back(Observation{std::move(x), level, y});
  budget_ += cost;
}

int ObservationSet::max_level() const noexcept {
  int m = 0;
  for (const auto& o : items_) m = std::max(m, o.level);
  return m;
}

std::size_t ObservationSet::count(int level) const noexcept {
  return static_cast<std::size_t>(
      std::count_if(items_.begin(), items_.end(), [level](const Observation& o) { return o.level == level; }));
}

Eigen::MatrixXd ObservationSet::points() const {
  Eigen::MatrixXd out(dim_, static_cast<Eigen::Index>(items_.size()));
  for (std::size_t i = 0; i < items_.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = items_[i].x;
  return out;
}

Eigen::VectorXd ObservationSet::targets() const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(items_.size()));
  for (std::size_t i = 0; i < items_.size(); ++i) out[static_cast<Eigen::Index>(i)] = items_[i].y;
  return out;
}

std::vector<int> ObservationSet::levels() const {
  std::vector<int> out;
  out.reserve(items_.size());
  for (const auto& o : items_) out.push_back(o.level);
  return out;
}

ObservationSet ObservationSet::at_level(int level) const {
  ObservationSet out(dim_);
  for (const auto& o : items_)
    if (o.level == level) out.add(o);
  return out;
}

}  // namespace mfbo
