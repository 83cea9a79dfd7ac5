#include "mfbo/mf_gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "mfbo/errors.hpp"

namespace mfbo {

namespace {

constexpr double kLog2Pi = 1.83787706640934548356;
constexpr double kStdFloor = 1e-12;

void check_level(int l, int num_levels, const char* where) {
  if (l < 1 || l > num_levels) throw LevelOutOfRange(std::string(where) + ": level out of range");
}

Eigen::MatrixXd unit_correlation(const Eigen::VectorXd& lengthscales, const Eigen::MatrixXd& a,
                                 const Eigen::MatrixXd& b) {
  return kernel_matrix(KernelParams{lengthscales, 1.0, 0.0}, a, b);
}

// Per-observation chain coefficients c_j(l_a) for one level j.
Eigen::VectorXd chain_vector(const MfKernelParams& p, int j, const std::vector<int>& levels) {
  Eigen::VectorXd c(static_cast<Eigen::Index>(levels.size()));
  for (std::size_t a = 0; a < levels.size(); ++a) c[static_cast<Eigen::Index>(a)] = p.chain(j, levels[a]);
  return c;
}

// d c_j(l) / d rho_i.
double chain_derivative(const MfKernelParams& p, int j, int l, int i) {
  if (!(j < i && i <= l)) return 0.0;
  double v = 1.0;
  for (int k = j + 1; k <= l; ++k)
    if (k != i) v *= p.rho[static_cast<std::size_t>(k - 2)];
  return v;
}

Eigen::MatrixXd joint_covariance(const MfKernelParams& p, const Eigen::MatrixXd& x, const std::vector<int>& levels,
                                 double relative_jitter) {
  Eigen::MatrixXd k = mf_kernel_matrix(p, x, levels, x, levels);
  for (Eigen::Index a = 0; a < k.rows(); ++a) {
    const double prior = p.prior_variance(levels[static_cast<std::size_t>(a)]);
    k(a, a) += p.noise_variance + relative_jitter * prior;
  }
  return k;
}

// Level-by-level start point: fit level 1 alone, then regress each level on
// the previous level's single-fidelity mean and fit the residual.
MfKernelParams recursive_start(const Eigen::MatrixXd& x, const std::vector<int>& levels, const Eigen::VectorXd& ys,
                               int nl, RandomStream& stream, const GpFitSettings& settings) {
  const Eigen::Index d = x.rows();
  MfKernelParams p;
  std::optional<GpPosterior> previous;
  double noise = 1e-6;
  for (int l = 1; l <= nl; ++l) {
    std::vector<Eigen::Index> idx;
    for (std::size_t a = 0; a < levels.size(); ++a)
      if (levels[a] == l) idx.push_back(static_cast<Eigen::Index>(a));
    const auto n = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd xl(d, n);
    Eigen::VectorXd yl(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      xl.col(i) = x.col(idx[static_cast<std::size_t>(i)]);
      yl[i] = ys[idx[static_cast<std::size_t>(i)]];
    }

    Eigen::VectorXd residual = yl;
    if (previous) {
      Eigen::VectorXd m, sd;
      previous->predict(xl, m, sd);
      const double mm = m.squaredNorm();
      const double rho = std::clamp(mm > 0.0 ? m.dot(yl) / mm : 1.0, kRhoMin, kRhoMax);
      p.rho.push_back(rho);
      residual = yl - rho * m;
    }

    KernelParams delta{Eigen::VectorXd::Constant(d, 0.3), 0.1, 0.0};
    if (n >= 2) {
      ObservationSet rs(d);
      for (Eigen::Index i = 0; i < n; ++i) rs.add(xl.col(i), 1, residual[i]);
      const GpPosterior g = fit_gp(rs, stream, settings);
      const double s2 = g.standardizer().scale * g.standardizer().scale;
      delta.lengthscales = g.params().lengthscales;
      delta.signal_variance = std::clamp(g.params().signal_variance * s2, kernel_bounds::kSignalMin,
                                         kernel_bounds::kSignalMax);
      if (l == 1) noise = std::max(g.params().noise_variance * s2, kernel_bounds::kNoiseMin);
      if (l == 1) {
        previous = g;
      } else if (l < nl) {
        ObservationSet ls(d);
        for (Eigen::Index i = 0; i < n; ++i) ls.add(xl.col(i), 1, yl[i]);
        previous = fit_gp(ls, stream, settings);
      }
    }
    p.levels.push_back(delta);
  }
  p.noise_variance = std::clamp(noise, kernel_bounds::kNoiseMin, kernel_bounds::kNoiseMax);
  return p;
}

}  // namespace

double MfKernelParams::chain(int j, int l) const {
  if (j > l) return 0.0;
  double v = 1.0;
  for (int k = j + 1; k <= l; ++k) v *= rho[static_cast<std::size_t>(k - 2)];
  return v;
}

double MfKernelParams::prior_variance(int l) const {
  double v = 0.0;
  for (int j = 1; j <= l; ++j) {
    const double c = chain(j, l);
    v += c * c * levels[static_cast<std::size_t>(j - 1)].signal_variance;
  }
  return v;
}

double mf_kernel_eval(const MfKernelParams& p, const Eigen::VectorXd& x, int l, const Eigen::VectorXd& x2, int l2) {
  check_level(l, p.num_levels(), "mf_kernel_eval");
  check_level(l2, p.num_levels(), "mf_kernel_eval");
  double v = 0.0;
  for (int j = 1; j <= std::min(l, l2); ++j)
    v += p.chain(j, l) * p.chain(j, l2) * kernel_eval(p.levels[static_cast<std::size_t>(j - 1)], x, x2);
  return v;
}

Eigen::MatrixXd mf_kernel_matrix(const MfKernelParams& p, const Eigen::MatrixXd& a, const std::vector<int>& la,
                                 const Eigen::MatrixXd& b, const std::vector<int>& lb) {
  if (static_cast<Eigen::Index>(la.size()) != a.cols() || static_cast<Eigen::Index>(lb.size()) != b.cols())
    throw DimensionMismatch("mf_kernel_matrix: level tags disagree with point count");
  for (int l : la) check_level(l, p.num_levels(), "mf_kernel_matrix");
  for (int l : lb) check_level(l, p.num_levels(), "mf_kernel_matrix");
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(a.cols(), b.cols());
  for (int j = 1; j <= p.num_levels(); ++j) {
    const Eigen::VectorXd ca = chain_vector(p, j, la);
    const Eigen::VectorXd cb = chain_vector(p, j, lb);
    if (ca.isZero(0.0) || cb.isZero(0.0)) continue;
    const Eigen::MatrixXd kj = kernel_matrix(p.levels[static_cast<std::size_t>(j - 1)], a, b);
    k.array() += (ca * cb.transpose()).array() * kj.array();
  }
  return k;
}

Eigen::VectorXd pack_mf_params(const MfKernelParams& p) {
  const int nl = p.num_levels();
  const Eigen::Index d = p.levels.front().lengthscales.size();
  Eigen::VectorXd theta(nl * (d + 1) + (nl - 1) + 1);
  Eigen::Index k = 0;
  for (const auto& lv : p.levels) {
    theta.segment(k, d) = lv.lengthscales.array().log();
    k += d;
    theta[k++] = std::log(lv.signal_variance);
  }
  for (double r : p.rho) theta[k++] = r;
  theta[k] = std::log(std::max(p.noise_variance, kernel_bounds::kNoiseMin));
  return theta;
}

MfKernelParams unpack_mf_params(const Eigen::VectorXd& theta, Eigen::Index d, int num_levels) {
  MfKernelParams p;
  Eigen::Index k = 0;
  for (int l = 0; l < num_levels; ++l) {
    KernelParams lv;
    lv.lengthscales = theta.segment(k, d).array().exp();
    k += d;
    lv.signal_variance = std::exp(theta[k++]);
    p.levels.push_back(std::move(lv));
  }
  for (int l = 1; l < num_levels; ++l) p.rho.push_back(theta[k++]);
  p.noise_variance = std::exp(theta[k]);
  return p;
}

double mf_log_marginal_likelihood(const Eigen::MatrixXd& x, const std::vector<int>& levels,
                                  const Eigen::VectorXd& y, const MfKernelParams& p, double relative_jitter,
                                  Eigen::VectorXd* gradient) {
  const int nl = p.num_levels();
  const Eigen::Index d = x.rows();
  const Eigen::Index n = x.cols();
  if (y.size() != n) throw DimensionMismatch("mf_log_marginal_likelihood: inputs and targets disagree");

  std::vector<Eigen::MatrixXd> corr;
  std::vector<Eigen::VectorXd> chains;
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
  for (int j = 1; j <= nl; ++j) {
    const auto& lv = p.levels[static_cast<std::size_t>(j - 1)];
    corr.push_back(unit_correlation(lv.lengthscales, x, x));
    chains.push_back(chain_vector(p, j, levels));
    const Eigen::VectorXd& c = chains.back();
    k.array() += lv.signal_variance * (c * c.transpose()).array() * corr.back().array();
  }
  Eigen::VectorXd diag_prior(n);
  for (Eigen::Index a = 0; a < n; ++a) diag_prior[a] = p.prior_variance(levels[static_cast<std::size_t>(a)]);
  k.diagonal().array() += p.noise_variance + relative_jitter * diag_prior.array();

  const Evidence e = gaussian_evidence(k, y, gradient != nullptr);
  if (!gradient) return e.value;

  const Eigen::MatrixXd& w = e.w;
  const Eigen::VectorXd wdiag = w.diagonal();
  gradient->setZero(nl * (d + 1) + (nl - 1) + 1);
  const Eigen::Index rho_offset = nl * (d + 1);
  for (int j = 1; j <= nl; ++j) {
    const auto& lv = p.levels[static_cast<std::size_t>(j - 1)];
    const Eigen::VectorXd& c = chains[static_cast<std::size_t>(j - 1)];
    const Eigen::MatrixXd& r = corr[static_cast<std::size_t>(j - 1)];
    const Eigen::MatrixXd m = w.cwiseProduct(r);
    const Eigen::VectorXd mc = m * c;
    const Eigen::Index base = (j - 1) * (d + 1);

    for (Eigen::Index b = 0; b < n; ++b) {
      if (c[b] == 0.0) continue;
      for (Eigen::Index a = b + 1; a < n; ++a) {
        const double s = m(a, b) * lv.signal_variance * c[a] * c[b];
        if (s == 0.0) continue;
        for (Eigen::Index q = 0; q < d; ++q) {
          const double t = (x(q, a) - x(q, b)) / lv.lengthscales[q];
          (*gradient)[base + q] += s * t * t;
        }
      }
    }
    (*gradient)[base + d] =
        0.5 * lv.signal_variance * (c.dot(mc) + relative_jitter * (wdiag.array() * c.array().square()).sum());

    for (int i = 2; i <= nl; ++i) {
      Eigen::VectorXd dc(n);
      for (Eigen::Index a = 0; a < n; ++a) dc[a] = chain_derivative(p, j, levels[static_cast<std::size_t>(a)], i);
      if (dc.isZero(0.0)) continue;
      (*gradient)[rho_offset + (i - 2)] +=
          lv.signal_variance * (dc.dot(mc) + relative_jitter * (wdiag.array() * c.array() * dc.array()).sum());
    }
  }
  (*gradient)[gradient->size() - 1] = 0.5 * p.noise_variance * w.trace();
  return e.value;
}

// ---------------------------------------------------------------------------

MfGpPosterior MfGpPosterior::condition(Eigen::MatrixXd x, std::vector<int> levels, Eigen::VectorXd y,
                                       MfKernelParams params) {
  if (x.cols() != y.size() || static_cast<Eigen::Index>(levels.size()) != y.size())
    throw DimensionMismatch("MfGpPosterior::condition: inputs, levels and targets disagree");
  if (params.num_levels() < 1) throw LevelOutOfRange("MfGpPosterior::condition: no levels");
  if (static_cast<int>(params.rho.size()) != params.num_levels() - 1)
    throw DimensionMismatch("MfGpPosterior::condition: need one rho per adjacent level pair");
  for (int l : levels) check_level(l, params.num_levels(), "MfGpPosterior::condition");

  MfGpPosterior g;
  g.x_ = std::move(x);
  g.levels_ = std::move(levels);
  g.y_ = std::move(y);
  g.params_ = std::move(params);
  g.fit_standardizers();
  for (double rel = jitter::kInitial;; rel *= 10.0) {
    try {
      g.relative_jitter_ = rel;
      g.factor_ = spd_factor(joint_covariance(g.params_, g.x_, g.levels_, rel));
      break;
    } catch (const NotPositiveDefinite&) {
      if (rel * 10.0 > jitter::kMax * (1.0 + 1e-9)) throw;
    }
  }
  g.refresh_weights();
  return g;
}

void MfGpPosterior::fit_standardizers() {
  const int nl = params_.num_levels();
  const Standardizer pooled = Standardizer::fit(y_);
  standardizers_.assign(static_cast<std::size_t>(nl), Standardizer{});
  for (int l = 1; l <= nl; ++l) {
    std::vector<double> vals;
    for (std::size_t a = 0; a < levels_.size(); ++a)
      if (levels_[a] == l) vals.push_back(y_[static_cast<Eigen::Index>(a)]);
    Standardizer s;
    if (!vals.empty()) {
      const Eigen::Map<const Eigen::VectorXd> v(vals.data(), static_cast<Eigen::Index>(vals.size()));
      s = Standardizer::fit(v);
      // A level with a single or constant value borrows the pooled scale.
      if (s.scale == 1.0 && (vals.size() < 2 || (v.array() == v[0]).all())) s.scale = pooled.scale;
    } else {
      s = pooled;
    }
    standardizers_[static_cast<std::size_t>(l - 1)] = s;
  }
}

Eigen::VectorXd MfGpPosterior::standardized_targets() const {
  Eigen::VectorXd ys(y_.size());
  for (Eigen::Index a = 0; a < y_.size(); ++a) {
    const Standardizer& s = standardizers_[static_cast<std::size_t>(levels_[static_cast<std::size_t>(a)] - 1)];
    ys[a] = (y_[a] - s.offset) / s.scale;
  }
  return ys;
}

void MfGpPosterior::refresh_weights() {
  const Eigen::VectorXd ys = standardized_targets();
  alpha_ = factor_.solve(ys);
  log_likelihood_ = -0.5 * ys.dot(alpha_) - 0.5 * factor_.log_determinant() -
                    0.5 * static_cast<double>(ys.size()) * kLog2Pi;
}

const Standardizer& MfGpPosterior::standardizer(int l) const {
  check_level(l, num_levels(), "MfGpPosterior::standardizer");
  return standardizers_[static_cast<std::size_t>(l - 1)];
}

MfGpPosterior MfGpPosterior::with_observation(const Eigen::VectorXd& x, int l, double y) const {
  check_level(l, num_levels(), "MfGpPosterior::with_observation");
  if (x.size() != dim()) throw DimensionMismatch("with_observation: point has wrong dimension");
  MfGpPosterior g = *this;
  g.x_.conservativeResize(Eigen::NoChange, size() + 1);
  g.x_.col(size()) = x;
  g.levels_.push_back(l);
  g.y_.conservativeResize(size() + 1);
  g.y_[size()] = y;
  g.fit_standardizers();
  const Eigen::VectorXd cross = mf_kernel_matrix(params_, x_, levels_, Eigen::MatrixXd(x), {l}).col(0);
  const double prior = params_.prior_variance(l);
  try {
    g.factor_.append(cross, prior + params_.noise_variance + relative_jitter_ * prior);
  } catch (const NotPositiveDefinite&) {
    return condition(g.x_, g.levels_, g.y_, params_);
  }
  g.refresh_weights();
  return g;
}

Prediction MfGpPosterior::predict_level(const Eigen::VectorXd& x, int l) const {
  Eigen::VectorXd mean, sd;
  predict_level(Eigen::MatrixXd(x), l, mean, sd);
  return {mean[0], sd[0]};
}

void MfGpPosterior::predict_level(const Eigen::MatrixXd& x, int l, Eigen::VectorXd& mean, Eigen::VectorXd& sd) const {
  check_level(l, num_levels(), "predict_level");
  if (x.rows() != dim()) throw DimensionMismatch("predict_level: point has wrong dimension");
  const std::vector<int> tags(static_cast<std::size_t>(x.cols()), l);
  const Eigen::MatrixXd ks = mf_kernel_matrix(params_, x_, levels_, x, tags);
  const Eigen::MatrixXd v = factor_.solve_lower(ks);
  const double prior = params_.prior_variance(l);
  const Standardizer& s = standardizer(l);
  mean = ((ks.transpose() * alpha_).array() * s.scale + s.offset).matrix();
  sd = ((prior - v.colwise().squaredNorm().transpose().array()).cwiseMax(0.0).sqrt() * s.scale).matrix();
}

std::vector<LevelPair> MfGpPosterior::level_pairs(const Eigen::MatrixXd& x, int l) const {
  const int top = num_levels();
  check_level(l, top, "level_pairs");
  if (x.rows() != dim()) throw DimensionMismatch("level_pairs: point has wrong dimension");
  const Eigen::Index m = x.cols();

  const std::vector<int> top_tags(static_cast<std::size_t>(m), top);
  const Eigen::MatrixXd k_top = mf_kernel_matrix(params_, x_, levels_, x, top_tags);
  const Eigen::MatrixXd v_top = factor_.solve_lower(k_top);
  const Eigen::VectorXd mean_top = k_top.transpose() * alpha_;
  const double prior_top = params_.prior_variance(top);
  const Eigen::VectorXd var_top =
      (prior_top - v_top.colwise().squaredNorm().transpose().array()).cwiseMax(0.0).matrix();

  Eigen::MatrixXd k_lvl, v_lvl;
  Eigen::VectorXd mean_lvl, var_lvl, cov;
  const double prior_lvl = params_.prior_variance(l);
  if (l == top) {
    mean_lvl = mean_top;
    var_lvl = var_top;
    cov = var_top;
  } else {
    const std::vector<int> tags(static_cast<std::size_t>(m), l);
    k_lvl = mf_kernel_matrix(params_, x_, levels_, x, tags);
    v_lvl = factor_.solve_lower(k_lvl);
    mean_lvl = k_lvl.transpose() * alpha_;
    var_lvl = (prior_lvl - v_lvl.colwise().squaredNorm().transpose().array()).cwiseMax(0.0).matrix();
    double prior_cross = 0.0;
    for (int j = 1; j <= l; ++j)
      prior_cross += params_.chain(j, l) * params_.chain(j, top) * params_.levels[static_cast<std::size_t>(j - 1)].signal_variance;
    cov = (prior_cross - (v_lvl.array() * v_top.array()).colwise().sum().transpose()).matrix();
  }

  const Standardizer& s_top = standardizer(top);
  const Standardizer& s_lvl = standardizer(l);
  std::vector<LevelPair> out(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) {
    LevelPair& p = out[static_cast<std::size_t>(i)];
    const double sd_top = std::sqrt(var_top[i]);
    const double sd_lvl = std::sqrt(var_lvl[i]);
    p.top = {mean_top[i] * s_top.scale + s_top.offset, sd_top * s_top.scale};
    p.level = {mean_lvl[i] * s_lvl.scale + s_lvl.offset, sd_lvl * s_lvl.scale};
    p.level_std_standardized = sd_lvl;
    if (l == top) {
      p.correlation = 1.0;
    } else if (sd_top < kStdFloor || sd_lvl < kStdFloor) {
      p.correlation = 0.0;
    } else {
      p.correlation = std::clamp(cov[i] / (sd_top * sd_lvl), -1.0, 1.0);
    }
  }
  return out;
}

double MfGpPosterior::posterior_correlation(const Eigen::VectorXd& x, int l) const {
  return level_pairs(Eigen::MatrixXd(x), l).front().correlation;
}

// ---------------------------------------------------------------------------

MfGpPosterior fit_mf_gp(const ObservationSet& data, RandomStream& stream, const GpFitSettings& settings,
                        const MfKernelParams* warm_start) {
  const int nl = data.max_level();
  if (nl < 1) throw DegenerateData("fit_mf_gp: empty data");
  for (int l = 1; l <= nl; ++l)
    if (data.count(l) == 0) throw DegenerateData("fit_mf_gp: level " + std::to_string(l) + " has no observations");
  if (data.count(1) < 2) throw DegenerateData("fit_mf_gp: need at least two level-1 observations");

  const Eigen::MatrixXd x = data.points();
  const std::vector<int> levels = data.levels();
  const Eigen::VectorXd y = data.targets();
  const Eigen::Index d = x.rows();

  if (nl == 1) {
    // Same objective, parameter layout and start points as fit_gp.
    const GpPosterior sf = fit_gp(data, stream, settings,
                                  warm_start ? &warm_start->levels.front() : nullptr);
    MfKernelParams p;
    p.levels.push_back(KernelParams{sf.params().lengthscales, sf.params().signal_variance, 0.0});
    p.noise_variance = sf.params().noise_variance;
    return MfGpPosterior::condition(x, levels, y, std::move(p));
  }

  // Standardized targets, one transform per level.
  MfKernelParams probe;
  probe.levels.assign(static_cast<std::size_t>(nl), KernelParams{Eigen::VectorXd::Ones(d), 1.0, 0.0});
  probe.rho.assign(static_cast<std::size_t>(nl - 1), 1.0);
  const MfGpPosterior shape = MfGpPosterior::condition(x, levels, y, probe);
  Eigen::VectorXd ys(y.size());
  for (Eigen::Index a = 0; a < y.size(); ++a) {
    const Standardizer& s = shape.standardizer(levels[static_cast<std::size_t>(a)]);
    ys[a] = (y[a] - s.offset) / s.scale;
  }

  const Eigen::Index np = nl * (d + 1) + (nl - 1) + 1;
  Eigen::VectorXd lo(np), hi(np);
  {
    Eigen::Index k = 0;
    for (int l = 0; l < nl; ++l) {
      lo.segment(k, d).setConstant(std::log(kernel_bounds::kLengthscaleMin));
      hi.segment(k, d).setConstant(std::log(kernel_bounds::kLengthscaleMax));
      k += d;
      lo[k] = std::log(kernel_bounds::kSignalMin);
      hi[k] = std::log(kernel_bounds::kSignalMax);
      ++k;
    }
    for (int l = 1; l < nl; ++l) {
      lo[k] = kRhoMin;
      hi[k] = kRhoMax;
      ++k;
    }
    lo[k] = std::log(kernel_bounds::kNoiseMin);
    hi[k] = std::log(kernel_bounds::kNoiseMax);
  }

  BoxObjective objective = [&](const Eigen::VectorXd& theta, Eigen::VectorXd* grad) {
    const MfKernelParams p = unpack_mf_params(theta, d, nl);
    for (double rel = jitter::kInitial; rel <= jitter::kMax * (1.0 + 1e-9); rel *= 10.0) {
      try {
        return mf_log_marginal_likelihood(x, levels, ys, p, rel, grad);
      } catch (const NotPositiveDefinite&) {
      }
    }
    return -std::numeric_limits<double>::infinity();
  };

  const Eigen::Index n_lhs = std::max(settings.restarts, 1);
  const Eigen::MatrixXd unit = latin_hypercube(n_lhs, np, stream);
  Eigen::MatrixXd starts(np, n_lhs + 2 + (warm_start ? 1 : 0));
  for (Eigen::Index s = 0; s < n_lhs; ++s) starts.col(s) = lo.array() + unit.col(s).array() * (hi - lo).array();
  {
    // Neutral start: moderate lengthscales, small discrepancies, rho = 1.
    MfKernelParams neutral;
    neutral.levels.assign(static_cast<std::size_t>(nl), KernelParams{Eigen::VectorXd::Constant(d, 0.3), 0.1, 0.0});
    neutral.levels.front().signal_variance = 1.0;
    neutral.rho.assign(static_cast<std::size_t>(nl - 1), 1.0);
    neutral.noise_variance = 1e-6;
    starts.col(n_lhs) = pack_mf_params(neutral);
  }
  try {
    starts.col(n_lhs + 1) =
        pack_mf_params(recursive_start(x, levels, ys, nl, stream, settings)).cwiseMax(lo).cwiseMin(hi);
  } catch (const Error&) {
    starts.col(n_lhs + 1) = starts.col(n_lhs);
  }
  if (warm_start) starts.col(n_lhs + 2) = pack_mf_params(*warm_start).cwiseMax(lo).cwiseMin(hi);

  const HyperoptResult best = maximize_in_box(objective, lo, hi, starts, settings.local);
  if (best.theta.size() == 0) throw NotPositiveDefinite("fit_mf_gp: no start point produced a factorizable covariance");
  return MfGpPosterior::condition(x, levels, y, unpack_mf_params(best.theta, d, nl));
}

}  // namespace mfbo
