#include <gtest/gtest.h>

#include <cmath>

#include "mfbo/errors.hpp"
#include "mfbo/mf_gp.hpp"
#include "oracles.hpp"

using namespace mfbo;

namespace {

MfKernelParams random_params(RandomStream& s, Eigen::Index d, int nl) {
  MfKernelParams p;
  for (int l = 0; l < nl; ++l) {
    KernelParams k;
    k.lengthscales = Eigen::VectorXd(d);
    for (Eigen::Index i = 0; i < d; ++i) k.lengthscales[i] = 0.1 + 0.6 * s.uniform();
    k.signal_variance = 0.1 + s.uniform();
    p.levels.push_back(k);
  }
  for (int l = 1; l < nl; ++l) p.rho.push_back(-2.0 + 4.0 * s.uniform());
  p.noise_variance = 1e-4 + 1e-2 * s.uniform();
  return p;
}

struct MixedSet {
  Eigen::MatrixXd x;
  std::vector<int> levels;
  Eigen::VectorXd y;
};

MixedSet random_set(RandomStream& s, Eigen::Index d, int nl, int n) {
  MixedSet m{Eigen::MatrixXd(d, n), {}, Eigen::VectorXd(n)};
  for (int i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) m.x(k, i) = s.uniform();
    // Every level gets at least two points.
    m.levels.push_back(i < 2 * nl ? 1 + i % nl : 1 + static_cast<int>(s.below(static_cast<std::uint64_t>(nl))));
    m.y[i] = std::sin(3.0 * m.x.col(i).sum()) * m.levels.back() + s.normal() * 0.1;
  }
  return m;
}

std::vector<Eigen::VectorXd> lengthscales_of(const MfKernelParams& p) {
  std::vector<Eigen::VectorXd> v;
  for (const auto& k : p.levels) v.push_back(k.lengthscales);
  return v;
}
std::vector<double> variances_of(const MfKernelParams& p) {
  std::vector<double> v;
  for (const auto& k : p.levels) v.push_back(k.signal_variance);
  return v;
}

// Dense joint-posterior oracle in standardized units.
struct DenseMf {
  Eigen::MatrixXd kinv;
  Eigen::VectorXd ys;
  const MfGpPosterior* g;

  explicit DenseMf(const MfGpPosterior& post) : g(&post) {
    const auto& p = post.params();
    const Eigen::Index n = post.size();
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index a = 0; a < n; ++a)
      for (Eigen::Index b = 0; b < n; ++b)
        k(a, b) = oracle::ar_cov(lengthscales_of(p), variances_of(p), p.rho, post.inputs().col(a),
                                 post.levels()[a], post.inputs().col(b), post.levels()[b]);
    for (Eigen::Index a = 0; a < n; ++a) {
      const int l = post.levels()[a];
      k(a, a) += p.noise_variance +
                 post.relative_jitter() * oracle::ar_cov(lengthscales_of(p), variances_of(p), p.rho,
                                                         post.inputs().col(a), l, post.inputs().col(a), l);
    }
    kinv = k.fullPivLu().inverse();
    ys.resize(n);
    for (Eigen::Index a = 0; a < n; ++a) {
      const Standardizer& st = post.standardizer(post.levels()[a]);
      ys[a] = (post.targets()[a] - st.offset) / st.scale;
    }
  }

  Eigen::VectorXd cross(const Eigen::VectorXd& q, int l) const {
    const auto& p = g->params();
    Eigen::VectorXd c(g->size());
    for (Eigen::Index a = 0; a < g->size(); ++a)
      c[a] = oracle::ar_cov(lengthscales_of(p), variances_of(p), p.rho, g->inputs().col(a), g->levels()[a], q, l);
    return c;
  }
  double cov(const Eigen::VectorXd& q, int l, int m) const {
    const auto& p = g->params();
    return oracle::ar_cov(lengthscales_of(p), variances_of(p), p.rho, q, l, q, m) - cross(q, l).dot(kinv * cross(q, m));
  }
  double mean(const Eigen::VectorXd& q, int l) const {
    const Standardizer& st = g->standardizer(l);
    return st.offset + st.scale * cross(q, l).dot(kinv * ys);
  }
};

}  // namespace

TEST(MfKernel, MatchesRecursiveDefinition) {
  RandomStream s(1);
  for (int trial = 0; trial < 20; ++trial) {
    const MfKernelParams p = random_params(s, 2, 3);
    const Eigen::Vector2d a(s.uniform(), s.uniform()), b(s.uniform(), s.uniform());
    for (int l = 1; l <= 3; ++l)
      for (int m = 1; m <= 3; ++m) {
        const double expected = oracle::ar_cov(lengthscales_of(p), variances_of(p), p.rho, a, l, b, m);
        EXPECT_NEAR(mf_kernel_eval(p, a, l, b, m), expected, 1e-12);
        EXPECT_NEAR(mf_kernel_eval(p, a, l, b, m), mf_kernel_eval(p, b, m, a, l), 1e-14);
      }
  }
}

TEST(MfKernel, DocumentedSpecialCases) {
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 0.3), x2 = Eigen::VectorXd::Constant(1, 0.45);
  MfKernelParams p;
  p.levels = {KernelParams{Eigen::VectorXd::Constant(1, 0.2), 1.5, 0}, KernelParams{Eigen::VectorXd::Constant(1, 0.4), 0.7, 0}};
  p.rho = {0.0};
  EXPECT_NEAR(mf_kernel_eval(p, x, 2, x2, 2), kernel_eval(p.levels[1], x, x2), 1e-15);
  EXPECT_EQ(mf_kernel_eval(p, x, 1, x2, 2), 0.0);

  p.rho = {1.0};
  p.levels[1].signal_variance = kernel_bounds::kSignalMin;
  EXPECT_NEAR(mf_kernel_eval(p, x, 1, x2, 2), kernel_eval(p.levels[0], x, x2), 1e-15);

  MfKernelParams q;
  q.levels.assign(3, KernelParams{Eigen::VectorXd::Constant(1, 0.3), 1.0, 0});
  q.rho = {0.5, 0.5};
  EXPECT_NEAR(mf_kernel_eval(q, x, 1, x, 3), 0.25, 1e-15);
  EXPECT_THROW(mf_kernel_eval(q, x, 0, x, 1), LevelOutOfRange);
  EXPECT_THROW(mf_kernel_eval(q, x, 1, x, 4), LevelOutOfRange);
}

TEST(MfKernel, JointCovarianceIsPositiveSemidefinite) {
  RandomStream s(2);
  for (int trial = 0; trial < 50; ++trial) {
    const int nl = 1 + static_cast<int>(s.below(4));
    const int n = 2 + static_cast<int>(s.below(39));
    const MfKernelParams p = random_params(s, 2, nl);
    Eigen::MatrixXd x(2, n);
    std::vector<int> lv;
    for (int i = 0; i < n; ++i) {
      x.col(i) = Eigen::Vector2d(s.uniform(), s.uniform());
      lv.push_back(1 + static_cast<int>(s.below(static_cast<std::uint64_t>(nl))));
    }
    const Eigen::MatrixXd k = mf_kernel_matrix(p, x, lv, x, lv);
    EXPECT_LT((k - k.transpose()).norm(), 1e-12);
    const double min_ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(k).eigenvalues().minCoeff();
    EXPECT_GE(min_ev, -1e-8 * k.trace());
  }
}

TEST(MfKernel, PackRoundTrip) {
  RandomStream s(3);
  const MfKernelParams p = random_params(s, 3, 3);
  const MfKernelParams q = unpack_mf_params(pack_mf_params(p), 3, 3);
  for (int l = 0; l < 3; ++l) {
    EXPECT_LT((q.levels[l].lengthscales - p.levels[l].lengthscales).norm(), 1e-14);
    EXPECT_NEAR(q.levels[l].signal_variance, p.levels[l].signal_variance, 1e-14);
  }
  EXPECT_EQ(q.rho, p.rho);
  EXPECT_NEAR(q.noise_variance, p.noise_variance, 1e-17);
}

TEST(MfLikelihood, GradientMatchesCentralDifferences) {
  RandomStream s(4);
  for (int trial = 0; trial < 4; ++trial) {
    const int nl = 2 + trial % 2;
    const MixedSet m = random_set(s, 2, nl, 14);
    const MfKernelParams p = random_params(s, 2, nl);
    const Eigen::VectorXd theta = pack_mf_params(p);
    Eigen::VectorXd grad;
    const double v = mf_log_marginal_likelihood(m.x, m.levels, m.y, p, 0.0, &grad);
    EXPECT_NEAR(v, mf_log_marginal_likelihood(m.x, m.levels, m.y, p, 0.0), 1e-12);
    ASSERT_EQ(grad.size(), theta.size());
    for (Eigen::Index k = 0; k < theta.size(); ++k) {
      const double h = 1e-5;
      Eigen::VectorXd tp = theta, tm = theta;
      tp[k] += h;
      tm[k] -= h;
      const double fd = (mf_log_marginal_likelihood(m.x, m.levels, m.y, unpack_mf_params(tp, 2, nl), 0.0) -
                         mf_log_marginal_likelihood(m.x, m.levels, m.y, unpack_mf_params(tm, 2, nl), 0.0)) /
                        (2 * h);
      EXPECT_NEAR(grad[k], fd, 1e-4 * std::max(1.0, std::abs(fd))) << "component " << k;
    }
  }
}

TEST(MfPosterior, MatchesDenseJointOracle) {
  RandomStream s(5);
  const MixedSet m = random_set(s, 2, 3, 18);
  const MfGpPosterior g = MfGpPosterior::condition(m.x, m.levels, m.y, random_params(s, 2, 3));
  const DenseMf dense(g);
  for (int k = 0; k < 10; ++k) {
    const Eigen::Vector2d q(s.uniform(), s.uniform());
    for (int l = 1; l <= 3; ++l) {
      const Prediction pr = g.predict_level(q, l);
      const double sc = g.standardizer(l).scale;
      EXPECT_NEAR(pr.mean, dense.mean(q, l), 1e-8);
      EXPECT_NEAR(pr.std, sc * std::sqrt(std::max(dense.cov(q, l, l), 0.0)), 1e-6);
      const double c3 = dense.cov(q, l, 3), v1 = dense.cov(q, l, l), v3 = dense.cov(q, 3, 3);
      EXPECT_NEAR(g.posterior_correlation(q, l), c3 / std::sqrt(v1 * v3), 1e-6);
    }
  }
}

TEST(MfPosterior, StandardizersArePerLevel) {
  RandomStream s(6);
  const MixedSet m = random_set(s, 1, 2, 12);
  const MfGpPosterior g = MfGpPosterior::condition(m.x, m.levels, m.y, random_params(s, 1, 2));
  for (int l = 1; l <= 2; ++l) {
    std::vector<double> v;
    for (std::size_t a = 0; a < m.levels.size(); ++a)
      if (m.levels[a] == l) v.push_back(m.y[static_cast<Eigen::Index>(a)]);
    const Standardizer ref = Standardizer::fit(Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
    EXPECT_NEAR(g.standardizer(l).offset, ref.offset, 1e-12);
    EXPECT_NEAR(g.standardizer(l).scale, ref.scale, 1e-12);
  }
}

TEST(MfPosterior, InterpolatesObservedPoints) {
  RandomStream s(7);
  MixedSet m = random_set(s, 1, 2, 10);
  MfKernelParams p = random_params(s, 1, 2);
  p.noise_variance = 0.0;
  // Short lengthscales keep the jittered system well conditioned.
  for (auto& k : p.levels) k.lengthscales.setConstant(0.03);
  const MfGpPosterior g = MfGpPosterior::condition(m.x, m.levels, m.y, p);
  for (int i = 0; i < 10; ++i) {
    const Prediction pr = g.predict_level(m.x.col(i), m.levels[static_cast<std::size_t>(i)]);
    EXPECT_NEAR(pr.mean, m.y[i], 1e-6);
  }
}

TEST(MfPosterior, ZeroRhoDecouplesTopLevel) {
  RandomStream s(8);
  const MixedSet m = random_set(s, 1, 2, 16);
  MfKernelParams p = random_params(s, 1, 2);
  p.rho = {0.0};
  const MfGpPosterior g = MfGpPosterior::condition(m.x, m.levels, m.y, p);
  ObservationSet hf(1);
  for (std::size_t a = 0; a < m.levels.size(); ++a)
    if (m.levels[a] == 2) hf.add(m.x.col(static_cast<Eigen::Index>(a)), 1, m.y[static_cast<Eigen::Index>(a)]);
  KernelParams k = p.levels[1];
  k.noise_variance = p.noise_variance;
  const GpPosterior sf = GpPosterior::condition(hf.points(), hf.targets(), k);
  for (int i = 0; i <= 20; ++i) {
    const Eigen::VectorXd q = Eigen::VectorXd::Constant(1, i / 20.0);
    EXPECT_NEAR(g.predict_level(q, 2).mean, sf.predict(q).mean, 1e-8);
    EXPECT_NEAR(g.predict_level(q, 2).std, sf.predict(q).std, 1e-8);
    EXPECT_EQ(g.posterior_correlation(q, 1), 0.0);
    EXPECT_EQ(g.posterior_correlation(q, 2), 1.0);
  }
}

TEST(MfPosterior, PriorCorrelationClosedForm) {
  MfKernelParams p;
  p.levels.assign(2, KernelParams{Eigen::VectorXd::Constant(1, 0.2), 1.0, 0});
  p.rho = {1.0};
  const MfGpPosterior g = MfGpPosterior::condition(Eigen::MatrixXd(1, 0), {}, Eigen::VectorXd(0), p);
  EXPECT_NEAR(g.posterior_correlation(Eigen::VectorXd::Constant(1, 0.4), 1), 1.0 / std::sqrt(2.0), 1e-12);
}

TEST(MfPosterior, LowFidelityDataShrinksTopLevelVariance) {
  MfKernelParams p;
  p.levels = {KernelParams{Eigen::VectorXd::Constant(1, 0.2), 1.0, 0}, KernelParams{Eigen::VectorXd::Constant(1, 0.2), 0.01, 0}};
  p.rho = {1.0};
  p.noise_variance = 1e-8;
  Eigen::MatrixXd x(1, 12);
  std::vector<int> lv;
  Eigen::VectorXd y(12);
  for (int i = 0; i < 10; ++i) {
    x(0, i) = 0.5 + 0.05 * i;
    lv.push_back(1);
    y[i] = std::sin(6 * x(0, i));
  }
  x(0, 10) = 0.0;
  x(0, 11) = 0.05;
  lv.push_back(2);
  lv.push_back(2);
  y[10] = 0.1;
  y[11] = 0.2;
  const MfGpPosterior g = MfGpPosterior::condition(x, lv, y, p);
  const Eigen::VectorXd q = Eigen::VectorXd::Constant(1, 0.72);
  const double prior_sd = g.standardizer(2).scale * std::sqrt(p.prior_variance(2));
  EXPECT_LT(g.predict_level(q, 2).std, prior_sd);
}

TEST(MfPosterior, AddingTopLevelPointNeverIncreasesVariance) {
  RandomStream s(9);
  for (int trial = 0; trial < 10; ++trial) {
    const MixedSet m = random_set(s, 1, 2, 10);
    const MfGpPosterior g = MfGpPosterior::condition(m.x, m.levels, m.y, random_params(s, 1, 2));
    const MfGpPosterior h = g.with_observation(Eigen::VectorXd::Constant(1, s.uniform()), 2, s.normal());
    for (int k = 0; k < 100; ++k) {
      const Eigen::VectorXd q = Eigen::VectorXd::Constant(1, k / 99.0);
      // Adding a point refits the level scale; compare in standardized units.
      EXPECT_LE(h.predict_level(q, 2).std / h.standardizer(2).scale,
                g.predict_level(q, 2).std / g.standardizer(2).scale + 1e-8);
    }
  }
}

TEST(MfPosterior, WithObservationMatchesOracle) {
  RandomStream s(10);
  const MixedSet m = random_set(s, 2, 2, 12);
  const MfGpPosterior g = MfGpPosterior::condition(m.x, m.levels, m.y, random_params(s, 2, 2));
  const MfGpPosterior h = g.with_observation(Eigen::Vector2d(0.4, 0.6), 1, 0.3);
  EXPECT_EQ(h.size(), 13);
  const DenseMf dense(h);
  const Eigen::Vector2d q(0.45, 0.5);
  EXPECT_NEAR(h.predict_level(q, 2).mean, dense.mean(q, 2), 1e-8);
}

TEST(MfPosterior, LevelPairsAgreeWithPointQueries) {
  RandomStream s(11);
  const MixedSet m = random_set(s, 2, 3, 15);
  const MfGpPosterior g = MfGpPosterior::condition(m.x, m.levels, m.y, random_params(s, 2, 3));
  Eigen::MatrixXd q(2, 6);
  for (int i = 0; i < 6; ++i) q.col(i) = Eigen::Vector2d(s.uniform(), s.uniform());
  for (int l = 1; l <= 3; ++l) {
    const auto pairs = g.level_pairs(q, l);
    for (int i = 0; i < 6; ++i) {
      EXPECT_NEAR(pairs[i].level.mean, g.predict_level(q.col(i), l).mean, 1e-10);
      EXPECT_NEAR(pairs[i].top.std, g.predict_level(q.col(i), 3).std, 1e-10);
      EXPECT_NEAR(pairs[i].correlation, g.posterior_correlation(q.col(i), l), 1e-10);
      EXPECT_GE(pairs[i].correlation, -1.0);
      EXPECT_LE(pairs[i].correlation, 1.0);
    }
  }
  EXPECT_THROW(g.predict_level(q.col(0), 4), LevelOutOfRange);
  EXPECT_THROW(g.predict_level(q.col(0), 0), LevelOutOfRange);
}

TEST(FitMfGp, SingleLevelReducesToFitGp) {
  RandomStream s(12);
  ObservationSet data(2);
  for (int i = 0; i < 12; ++i) {
    const Eigen::Vector2d x(s.uniform(), s.uniform());
    data.add(x, 1, std::cos(4 * x[0]) * x[1]);
  }
  RandomStream a(5), b(5);
  const MfGpPosterior mf = fit_mf_gp(data, a);
  const GpPosterior sf = fit_gp(data, b);
  EXPECT_NEAR(mf.log_likelihood(), sf.log_likelihood(), 1e-10);
  for (int k = 0; k < 20; ++k) {
    const Eigen::Vector2d q(s.uniform(), s.uniform());
    EXPECT_NEAR(mf.predict_level(q, 1).mean, sf.predict(q).mean, 1e-10);
    EXPECT_NEAR(mf.predict_level(q, 1).std, sf.predict(q).std, 1e-10);
  }
}

TEST(FitMfGp, RecoversLinearScaling) {
  // Top level exactly twice the low level at shared inputs. rho acts on
  // standardized targets, so the objective-unit factor carries the ratio
  // of the level scales.
  RandomStream s(13);
  ObservationSet data(1);
  std::vector<double> xs;
  for (int i = 0; i < 12; ++i) xs.push_back((i + s.uniform()) / 12.0);
  auto f = [](double x) { return std::sin(8.0 * x) + x; };
  for (double x : xs) data.add(Eigen::VectorXd::Constant(1, x), 1, f(x));
  for (int i = 0; i < 12; i += 3) data.add(Eigen::VectorXd::Constant(1, xs[i]), 2, 2.0 * f(xs[i]));
  RandomStream fit(1);
  const MfGpPosterior g = fit_mf_gp(data, fit);
  const double rho = g.params().rho[0] * g.standardizer(2).scale / g.standardizer(1).scale;
  EXPECT_NEAR(rho, 2.0, 0.2);
}

TEST(FitMfGp, DeterministicForSameSeed) {
  RandomStream s(14);
  ObservationSet data(1);
  for (int i = 0; i < 8; ++i) data.add(Eigen::VectorXd::Constant(1, s.uniform()), 1, s.normal());
  for (int i = 0; i < 4; ++i) data.add(Eigen::VectorXd::Constant(1, s.uniform()), 2, s.normal());
  RandomStream a(3), b(3);
  const MfGpPosterior ga = fit_mf_gp(data, a), gb = fit_mf_gp(data, b);
  EXPECT_EQ(pack_mf_params(ga.params()), pack_mf_params(gb.params()));
}

TEST(FitMfGp, RejectsDegenerateLevels) {
  RandomStream s(15);
  ObservationSet one_low(1);
  one_low.add(Eigen::VectorXd::Constant(1, 0.1), 1, 0.0);
  one_low.add(Eigen::VectorXd::Constant(1, 0.5), 2, 1.0);
  one_low.add(Eigen::VectorXd::Constant(1, 0.7), 2, 2.0);
  EXPECT_THROW(fit_mf_gp(one_low, s), DegenerateData);
  ObservationSet gap(1);
  gap.add(Eigen::VectorXd::Constant(1, 0.1), 1, 0.0);
  gap.add(Eigen::VectorXd::Constant(1, 0.2), 1, 1.0);
  gap.add(Eigen::VectorXd::Constant(1, 0.5), 3, 1.0);
  EXPECT_THROW(fit_mf_gp(gap, s), DegenerateData);
}
