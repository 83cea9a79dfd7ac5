#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "mfbo/errors.hpp"
#include "mfbo/gp.hpp"
#include "oracles.hpp"

using namespace mfbo;

namespace {

Eigen::MatrixXd random_inputs(RandomStream& s, Eigen::Index d, Eigen::Index n) {
  Eigen::MatrixXd x(d, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < d; ++k) x(k, i) = s.uniform();
  return x;
}

// Draw of a zero-mean GP with the given kernel at the columns of x.
Eigen::VectorXd gp_draw(RandomStream& s, const Eigen::MatrixXd& x, double ls, double sv, double noise) {
  Eigen::MatrixXd k = oracle::se_matrix(Eigen::VectorXd::Constant(x.rows(), ls), sv, x, x);
  k.diagonal().array() += noise + 1e-10;
  const Eigen::MatrixXd l = k.llt().matrixL();
  Eigen::VectorXd z(x.cols());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = s.normal();
  return l * z;
}

}  // namespace

TEST(Kernel, MatchesClosedForm) {
  KernelParams p{Eigen::Vector2d(0.5, 2.0), 1.7, 0.0};
  const Eigen::Vector2d a(0.1, 0.9), b(0.4, 0.2);
  const double expected = 1.7 * std::exp(-0.5 * (0.09 / 0.25 + 0.49 / 4.0));
  EXPECT_NEAR(kernel_eval(p, a, b), expected, 1e-15);
  EXPECT_NEAR(se_correlation(p.lengthscales, a, b), expected / 1.7, 1e-15);
  EXPECT_THROW(kernel_eval(p, Eigen::VectorXd::Zero(3), b), DimensionMismatch);
}

TEST(Kernel, LogEvidenceMatchesEigenOracle) {
  RandomStream s(1);
  const Eigen::MatrixXd x = random_inputs(s, 2, 15);
  Eigen::VectorXd y(15);
  for (int i = 0; i < 15; ++i) y[i] = s.normal();
  const KernelParams p{Eigen::Vector2d(0.3, 0.7), 1.3, 0.01};
  EXPECT_NEAR(log_marginal_likelihood(x, y, p), oracle::gp_log_evidence(p.lengthscales, 1.3, 0.01, x, y), 1e-9);
}

TEST(Kernel, GradientMatchesCentralDifferences) {
  RandomStream s(2);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::MatrixXd x = random_inputs(s, 3, 12);
    Eigen::VectorXd y(12);
    for (int i = 0; i < 12; ++i) y[i] = s.normal();
    Eigen::VectorXd theta(5);
    for (int k = 0; k < 5; ++k) theta[k] = std::log(0.2 + s.uniform());
    theta[4] = std::log(0.05 + 0.1 * s.uniform());
    auto params = [](const Eigen::VectorXd& t) {
      return KernelParams{t.head(3).array().exp(), std::exp(t[3]), std::exp(t[4])};
    };
    // Zero relative jitter keeps the objective a pure function of theta.
    Eigen::VectorXd grad;
    log_marginal_likelihood_gradient(x, y, params(theta), 0.0, &grad);
    ASSERT_EQ(grad.size(), 5);
    for (int k = 0; k < 5; ++k) {
      const double h = 1e-5;
      Eigen::VectorXd tp = theta, tm = theta;
      tp[k] += h;
      tm[k] -= h;
      const double fd = (log_marginal_likelihood(x, y, params(tp)) - log_marginal_likelihood(x, y, params(tm))) / (2 * h);
      EXPECT_NEAR(grad[k], fd, 1e-4 * std::max(1.0, std::abs(fd))) << "component " << k;
    }
  }
}

TEST(GpPosterior, MatchesDenseOracle) {
  RandomStream s(4);
  const Eigen::MatrixXd x = random_inputs(s, 2, 10);
  Eigen::VectorXd y(10);
  for (int i = 0; i < 10; ++i) y[i] = 3.0 + 2.0 * s.normal();
  const KernelParams p{Eigen::Vector2d(0.4, 0.3), 0.8, 0.05};
  const GpPosterior g = GpPosterior::condition(x, y, p);
  const Standardizer& st = g.standardizer();
  EXPECT_NEAR(st.offset, y.mean(), 1e-12);
  EXPECT_NEAR(st.scale, std::sqrt((y.array() - y.mean()).square().sum() / 9.0), 1e-12);
  const Eigen::VectorXd ys = (y.array() - st.offset) / st.scale;
  for (int k = 0; k < 20; ++k) {
    const Eigen::Vector2d q(s.uniform(), s.uniform());
    const auto m = oracle::gp_posterior(p.lengthscales, 0.8, 0.05 + g.jitter(), x, ys, q);
    const Prediction pr = g.predict(q);
    EXPECT_NEAR(pr.mean, st.offset + st.scale * m.mean, 1e-9);
    EXPECT_NEAR(pr.std, st.scale * std::sqrt(std::max(m.var, 0.0)), 1e-7);
  }
}

TEST(GpPosterior, InterpolatesNoiselessTrainingPoints) {
  RandomStream s(5);
  const Eigen::MatrixXd x = random_inputs(s, 1, 8);
  Eigen::VectorXd y(8);
  for (int i = 0; i < 8; ++i) y[i] = std::sin(6.0 * x(0, i));
  const GpPosterior g = GpPosterior::condition(x, y, KernelParams{Eigen::VectorXd::Constant(1, 0.2), 1.0, 0.0});
  for (int i = 0; i < 8; ++i) {
    const Prediction p = g.predict(x.col(i));
    EXPECT_NEAR(p.mean, y[i], 1e-6);
    EXPECT_NEAR(p.std, 0.0, 1e-3);
  }
}

TEST(GpPosterior, RevertsToPriorFarFromData) {
  Eigen::MatrixXd x(1, 3);
  x << 0.0, 0.05, 0.1;
  const Eigen::Vector3d y(1.0, 2.0, 4.0);
  const GpPosterior g = GpPosterior::condition(x, y, KernelParams{Eigen::VectorXd::Constant(1, 0.01), 2.0, 0.0});
  const Prediction p = g.predict(Eigen::VectorXd::Constant(1, 1.0));
  EXPECT_NEAR(p.mean, g.standardizer().offset, 1e-3);
  EXPECT_NEAR(p.std, g.standardizer().scale * std::sqrt(2.0), 1e-3);
}

TEST(GpPosterior, SymmetricLayoutGivesZeroMidpoint) {
  Eigen::MatrixXd x(1, 2);
  x << 0.3, 0.7;
  const GpPosterior g = GpPosterior::condition(x, Eigen::Vector2d(-1.0, 1.0),
                                               KernelParams{Eigen::VectorXd::Constant(1, 0.25), 1.0, 1e-6});
  EXPECT_NEAR(g.predict(Eigen::VectorXd::Constant(1, 0.5)).mean, 0.0, 1e-9);
}

TEST(GpPosterior, VarianceNeverIncreasesWhenAddingPoints) {
  RandomStream s(6);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::MatrixXd x = random_inputs(s, 1, 6);
    Eigen::VectorXd y(6);
    for (int i = 0; i < 6; ++i) y[i] = s.normal();
    const KernelParams p{Eigen::VectorXd::Constant(1, 0.05 + 0.3 * s.uniform()), 1.0, 1e-4};
    const GpPosterior small = GpPosterior::condition(x.leftCols(5), y.head(5), p);
    const GpPosterior grown = small.with_observation(x.col(5), y[5]);
    for (int k = 0; k < 100; ++k) {
      const Eigen::VectorXd q = Eigen::VectorXd::Constant(1, k / 99.0);
      // The new point refits the target scale; compare in standardized units.
      EXPECT_LE(grown.predict(q).std / grown.standardizer().scale,
                small.predict(q).std / small.standardizer().scale + 1e-8);
    }
  }
}

TEST(GpPosterior, WithObservationMatchesFullConditioning) {
  RandomStream s(7);
  const Eigen::MatrixXd x = random_inputs(s, 2, 9);
  Eigen::VectorXd y(9);
  for (int i = 0; i < 9; ++i) y[i] = s.normal();
  const KernelParams p{Eigen::Vector2d(0.3, 0.5), 1.0, 1e-3};
  const GpPosterior inc = GpPosterior::condition(x.leftCols(8), y.head(8), p).with_observation(x.col(8), y[8]);
  const GpPosterior full = GpPosterior::condition(x, y, p);
  EXPECT_EQ(inc.size(), 9);
  // Incremental conditioning keeps the earlier standardization; compare
  // through the oracle in each posterior's own units.
  for (const GpPosterior* g : {&inc, &full}) {
    const Standardizer& st = g->standardizer();
    const Eigen::VectorXd ys = (y.array() - st.offset) / st.scale;
    const Eigen::Vector2d q(0.2, 0.6);
    const auto m = oracle::gp_posterior(p.lengthscales, 1.0, 1e-3 + g->jitter(), x, ys, q);
    EXPECT_NEAR(g->predict(q).mean, st.offset + st.scale * m.mean, 1e-8);
  }
}

TEST(GpPosterior, PermutationInvariant) {
  RandomStream s(8);
  const Eigen::MatrixXd x = random_inputs(s, 2, 12);
  Eigen::VectorXd y(12);
  for (int i = 0; i < 12; ++i) y[i] = s.normal();
  std::vector<int> perm(12);
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  std::swap(perm[2], perm[7]);
  Eigen::MatrixXd xp(2, 12);
  Eigen::VectorXd yp(12);
  for (int i = 0; i < 12; ++i) {
    xp.col(i) = x.col(perm[i]);
    yp[i] = y[perm[i]];
  }
  const KernelParams p{Eigen::Vector2d(0.3, 0.4), 1.0, 1e-4};
  const GpPosterior a = GpPosterior::condition(x, y, p), b = GpPosterior::condition(xp, yp, p);
  for (int k = 0; k < 30; ++k) {
    const Eigen::Vector2d q(s.uniform(), s.uniform());
    EXPECT_NEAR(a.predict(q).mean, b.predict(q).mean, 1e-10);
    EXPECT_NEAR(a.predict(q).std, b.predict(q).std, 1e-10);
  }
}

TEST(GpPosterior, BatchPredictionMatchesPointwise) {
  RandomStream s(9);
  const Eigen::MatrixXd x = random_inputs(s, 3, 10);
  Eigen::VectorXd y(10);
  for (int i = 0; i < 10; ++i) y[i] = s.normal();
  const GpPosterior g = GpPosterior::condition(x, y, KernelParams{Eigen::Vector3d(0.3, 0.4, 0.5), 1.2, 1e-3});
  const Eigen::MatrixXd q = random_inputs(s, 3, 25);
  Eigen::VectorXd m, sd;
  g.predict(q, m, sd);
  for (int i = 0; i < 25; ++i) {
    EXPECT_NEAR(m[i], g.predict(q.col(i)).mean, 1e-12);
    EXPECT_NEAR(sd[i], g.predict(q.col(i)).std, 1e-12);
  }
}

TEST(FitGp, RecoversLengthscaleOfSelfGeneratedData) {
  // Data drawn from the model itself: l = 0.2, sv = 1, noise = 1e-6, n = 40.
  int recovered = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    RandomStream s(100 + seed);
    const Eigen::MatrixXd x = random_inputs(s, 1, 40);
    const Eigen::VectorXd y = gp_draw(s, x, 0.2, 1.0, 1e-6);
    ObservationSet data(1);
    for (int i = 0; i < 40; ++i) data.add(x.col(i), 1, y[i]);
    RandomStream fit(seed);
    const GpPosterior g = fit_gp(data, fit);
    const double ls = g.params().lengthscales[0];
    if (ls > 0.1 && ls < 0.4) ++recovered;
  }
  EXPECT_EQ(recovered, 5);
}

TEST(FitGp, GradientIsStationaryAtOptimum) {
  RandomStream s(12);
  const Eigen::MatrixXd x = random_inputs(s, 2, 25);
  const Eigen::VectorXd y = gp_draw(s, x, 0.3, 1.0, 1e-4);
  ObservationSet data(2);
  for (int i = 0; i < 25; ++i) data.add(x.col(i), 1, y[i]);
  RandomStream fit(1);
  const GpPosterior g = fit_gp(data, fit);
  const Eigen::VectorXd ys = g.standardizer().apply(y);
  Eigen::VectorXd grad;
  const KernelParams& p = g.params();
  log_marginal_likelihood_gradient(x, ys, p, g.jitter() / p.signal_variance, &grad);
  // Components whose parameter sits on a bound are excluded.
  const double lnoise = std::log(p.noise_variance);
  for (int k = 0; k < 4; ++k) {
    const double v = k < 2 ? std::log(p.lengthscales[k]) : k == 2 ? std::log(p.signal_variance) : lnoise;
    const double lo = k < 2 ? std::log(kernel_bounds::kLengthscaleMin)
                            : k == 2 ? std::log(kernel_bounds::kSignalMin) : std::log(kernel_bounds::kNoiseMin);
    if (v - lo < 1e-3) continue;
    EXPECT_LT(std::abs(grad[k]), 1e-2) << "component " << k;
  }
}

TEST(FitGp, TwoPointsAreInterpolated) {
  ObservationSet data(1);
  data.add(Eigen::VectorXd::Constant(1, 0.2), 1, 1.0);
  data.add(Eigen::VectorXd::Constant(1, 0.8), 1, -2.0);
  RandomStream s(3);
  const GpPosterior g = fit_gp(data, s);
  if (g.params().noise_variance <= 1e-8) {
    EXPECT_NEAR(g.predict(Eigen::VectorXd::Constant(1, 0.2)).mean, 1.0, 1e-4);
    EXPECT_NEAR(g.predict(Eigen::VectorXd::Constant(1, 0.8)).mean, -2.0, 1e-4);
  }
  EXPECT_GT(g.predict(Eigen::VectorXd::Constant(1, 0.2)).mean, g.predict(Eigen::VectorXd::Constant(1, 0.8)).mean);
}

TEST(FitGp, DeterministicForSameSeed) {
  RandomStream s(13);
  ObservationSet data(2);
  for (int i = 0; i < 15; ++i) {
    const Eigen::Vector2d x(s.uniform(), s.uniform());
    data.add(x, 1, std::sin(5 * x[0]) + x[1]);
  }
  RandomStream a(77), b(77);
  const GpPosterior ga = fit_gp(data, a), gb = fit_gp(data, b);
  EXPECT_EQ(ga.params().lengthscales, gb.params().lengthscales);
  EXPECT_EQ(ga.params().signal_variance, gb.params().signal_variance);
  EXPECT_EQ(ga.params().noise_variance, gb.params().noise_variance);
}

TEST(FitGp, DegenerateInputs) {
  ObservationSet one(1);
  one.add(Eigen::VectorXd::Constant(1, 0.5), 1, 1.0);
  RandomStream s(1);
  EXPECT_THROW(fit_gp(one, s), DegenerateData);

  ObservationSet flat(1);
  for (int i = 0; i < 5; ++i) flat.add(Eigen::VectorXd::Constant(1, 0.2 * i), 1, 3.0);
  const GpPosterior g = fit_gp(flat, s);
  EXPECT_TRUE(g.degenerate());
  EXPECT_NEAR(g.predict(Eigen::VectorXd::Constant(1, 0.33)).mean, 3.0, 1e-9);
}

TEST(FitGp, DuplicatePointsEscalateJitter) {
  ObservationSet data(1);
  for (int i = 0; i < 4; ++i) data.add(Eigen::VectorXd::Constant(1, 0.5), 1, 1.0 + 0.01 * i);
  data.add(Eigen::VectorXd::Constant(1, 0.1), 1, 0.0);
  RandomStream s(2);
  EXPECT_NO_THROW(fit_gp(data, s));
  // Noise-free conditioning on exact duplicates needs extra jitter.
  const GpPosterior g = GpPosterior::condition(data.points(), data.targets(),
                                               KernelParams{Eigen::VectorXd::Constant(1, 0.3), 1.0, 0.0});
  EXPECT_GT(g.jitter(), 0.0);
  EXPECT_TRUE(std::isfinite(g.predict(Eigen::VectorXd::Constant(1, 0.3)).mean));
}
