#pragma once

#include <Eigen/Dense>

#include "mfbo/random.hpp"

namespace mfbo {

/// Standard normal density.
double norm_pdf(double t) noexcept;
/// Standard normal cumulative distribution, via erfc (accurate far into both tails).
double norm_cdf(double t) noexcept;
/// log(norm_cdf(t)), stable for very negative t.
double log_norm_cdf(double t) noexcept;
/// norm_pdf(t) / norm_cdf(t), stable for very negative t.
double inverse_mills_ratio(double t) noexcept;
/// For u >= 5: c with norm_cdf(-u) / norm_pdf(u) = 1 / (u + c), by continued fraction.
double mills_tail(double u) noexcept;

/// Lower Cholesky factor L of a symmetric positive-definite matrix A = L L^T.
///
/// Rows can be appended in O(n^2) when the matrix grows by one
/// observation, which the optimization loop uses between hyperparameter
/// refits.
class SpdFactor {
 public:
  SpdFactor() = default;

  Eigen::Index size() const noexcept { return n_; }

  /// Copy of L (n x n, zero above the diagonal).
  Eigen::MatrixXd lower() const;
  double log_determinant() const;

  /// A^{-1} b
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;
  /// L^{-1} b
  Eigen::VectorXd solve_lower(const Eigen::VectorXd& rhs) const;
  Eigen::MatrixXd solve_lower(const Eigen::MatrixXd& rhs) const;
  Eigen::MatrixXd inverse() const;

  /// Extend A by one row/column [cross; diag]. Throws NotPositiveDefinite
  /// when the new pivot is not strictly positive; the factor is left unchanged.
  void append(const Eigen::VectorXd& cross, double diag);

 private:
  friend SpdFactor spd_factor(const Eigen::MatrixXd& matrix);

  auto view() const { return buffer_.topLeftCorner(n_, n_).triangularView<Eigen::Lower>(); }
  auto view_t() const { return buffer_.topLeftCorner(n_, n_).transpose().triangularView<Eigen::Upper>(); }

  Eigen::MatrixXd buffer_;
  Eigen::Index n_ = 0;
};

/// Cholesky factorization. Throws NotPositiveDefinite when a pivot is <= 0
/// and DimensionMismatch for non-square input.
SpdFactor spd_factor(const Eigen::MatrixXd& matrix);

/// Solves A x = rhs given the factor of A. Throws DimensionMismatch.
Eigen::VectorXd spd_solve(const SpdFactor& factor, const Eigen::VectorXd& rhs);

/// Latin hypercube design on [0,1]^d: n points stored as the columns of a
/// d x n matrix. Each coordinate is a random permutation of the n
/// equal-width bins with uniform jitter inside each bin.
Eigen::MatrixXd latin_hypercube(Eigen::Index n, Eigen::Index d, RandomStream& stream);

}  // namespace mfbo
