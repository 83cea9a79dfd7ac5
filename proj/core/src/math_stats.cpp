#include "mfbo/math_stats.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "mfbo/errors.hpp"

namespace mfbo {

namespace {
constexpr double kInvSqrt2Pi = 0.398942280401432677939946059934;
constexpr double kTailStart = 5.0;
}

double norm_pdf(double t) noexcept { return kInvSqrt2Pi * std::exp(-0.5 * t * t); }

double norm_cdf(double t) noexcept { return 0.5 * std::erfc(-t * std::numbers::sqrt2 / 2.0); }

double mills_tail(double u) noexcept {
  // Backward evaluation of 1 / (u + 2 / (u + 3 / (u + ...))); 60 terms are exact to rounding for u >= 5.
  double f = 0.0;
  for (int k = 60; k >= 1; --k) f = k / (u + f);
  return f;
}

double log_norm_cdf(double t) noexcept {
  if (t > 0.0) return std::log1p(-0.5 * std::erfc(t * std::numbers::sqrt2 / 2.0));
  if (t >= -kTailStart) return std::log(norm_cdf(t));
  return -0.5 * t * t - 0.5 * std::log(2.0 * std::numbers::pi) - std::log(-t + mills_tail(-t));
}

double inverse_mills_ratio(double t) noexcept {
  if (t >= -kTailStart) return norm_pdf(t) / norm_cdf(t);
  return -t + mills_tail(-t);
}

Eigen::MatrixXd SpdFactor::lower() const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n_, n_);
  out.triangularView<Eigen::Lower>() = buffer_.topLeftCorner(n_, n_);
  return out;
}

double SpdFactor::log_determinant() const {
  return 2.0 * buffer_.topLeftCorner(n_, n_).diagonal().array().log().sum();
}

Eigen::VectorXd SpdFactor::solve(const Eigen::VectorXd& rhs) const {
  if (rhs.size() != n_) throw DimensionMismatch("spd_solve: rhs has wrong length");
  Eigen::VectorXd x = rhs;
  view().solveInPlace(x);
  view_t().solveInPlace(x);
  return x;
}

Eigen::MatrixXd SpdFactor::solve(const Eigen::MatrixXd& rhs) const {
  if (rhs.rows() != n_) throw DimensionMismatch("spd_solve: rhs has wrong row count");
  Eigen::MatrixXd x = rhs;
  view().solveInPlace(x);
  view_t().solveInPlace(x);
  return x;
}

Eigen::VectorXd SpdFactor::solve_lower(const Eigen::VectorXd& rhs) const {
  if (rhs.size() != n_) throw DimensionMismatch("solve_lower: rhs has wrong length");
  Eigen::VectorXd x = rhs;
  view().solveInPlace(x);
  return x;
}

Eigen::MatrixXd SpdFactor::solve_lower(const Eigen::MatrixXd& rhs) const {
  if (rhs.rows() != n_) throw DimensionMismatch("solve_lower: rhs has wrong row count");
  Eigen::MatrixXd x = rhs;
  view().solveInPlace(x);
  return x;
}

Eigen::MatrixXd SpdFactor::inverse() const {
  Eigen::MatrixXd inv = Eigen::MatrixXd::Identity(n_, n_);
  view().solveInPlace(inv);
  view_t().solveInPlace(inv);
  return inv;
}

void SpdFactor::append(const Eigen::VectorXd& cross, double diag) {
  if (cross.size() != n_) throw DimensionMismatch("SpdFactor::append: cross-covariance has wrong length");
  Eigen::VectorXd row = cross;
  if (n_ > 0) view().solveInPlace(row);
  const double pivot = diag - row.squaredNorm();
  if (!(pivot > 0.0)) throw NotPositiveDefinite("SpdFactor::append: non-positive pivot");
  if (n_ + 1 > buffer_.rows()) {
    const Eigen::Index cap = std::max<Eigen::Index>(16, 2 * (n_ + 1));
    Eigen::MatrixXd grown = Eigen::MatrixXd::Zero(cap, cap);
    grown.topLeftCorner(n_, n_) = buffer_.topLeftCorner(n_, n_);
    buffer_ = std::move(grown);
  }
  buffer_.row(n_).head(n_) = row.transpose();
  buffer_(n_, n_) = std::sqrt(pivot);
  ++n_;
}

SpdFactor spd_factor(const Eigen::MatrixXd& matrix) {
  if (matrix.rows() != matrix.cols()) throw DimensionMismatch("spd_factor: matrix is not square");
  if (!matrix.allFinite()) throw NotPositiveDefinite("spd_factor: matrix has non-finite entries");
  Eigen::LLT<Eigen::MatrixXd> llt(matrix);
  if (llt.info() != Eigen::Success) throw NotPositiveDefinite("spd_factor: non-positive pivot");
  SpdFactor f;
  f.n_ = matrix.rows();
  f.buffer_ = llt.matrixL();
  if (f.n_ > 0 && !(f.buffer_.diagonal().array() > 0.0).all())
    throw NotPositiveDefinite("spd_factor: non-positive pivot");
  return f;
}

Eigen::VectorXd spd_solve(const SpdFactor& factor, const Eigen::VectorXd& rhs) { return factor.solve(rhs); }

Eigen::MatrixXd latin_hypercube(Eigen::Index n, Eigen::Index d, RandomStream& stream) {
  Eigen::MatrixXd pts(d, n);
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  const double dn = static_cast<double>(n);
  for (Eigen::Index j = 0; j < d; ++j) {
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    // Fisher-Yates with our own uniform integers (std::shuffle is not portable).
    for (std::size_t i = perm.size(); i > 1; --i) {
      const std::size_t k = stream.below(i);
      std::swap(perm[i - 1], perm[k]);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      const double bin = static_cast<double>(perm[static_cast<std::size_t>(i)]);
      const double lo = bin / dn;
      const double hi = (bin + 1.0) / dn;
      double v = lo + stream.uniform() * (hi - lo);
      if (v >= hi) v = std::nextafter(hi, lo);
      pts(j, i) = std::max(v, lo);
    }
  }
  return pts;
}

}  // namespace mfbo
