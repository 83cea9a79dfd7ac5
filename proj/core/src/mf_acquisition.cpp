#include "mfbo/mf_acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mfbo/errors.hpp"

namespace mfbo {

CostSchedule::CostSchedule(std::vector<double> costs) : costs_(std::move(costs)) {
  if (costs_.empty()) throw InvalidConfig("cost schedule is empty");
  for (std::size_t i = 0; i < costs_.size(); ++i) {
    if (!(costs_[i] > 0.0) || !std::isfinite(costs_[i])) throw InvalidConfig("costs must be positive");
    if (i > 0 && !(costs_[i] > costs_[i - 1])) throw InvalidConfig("costs must be strictly increasing");
  }
  if (costs_.back() != 1.0) throw InvalidConfig("the top-level cost must be 1");
}

double CostSchedule::cost(int l) const {
  if (l < 1 || l > num_levels()) throw LevelOutOfRange("CostSchedule: level out of range");
  return costs_[static_cast<std::size_t>(l - 1)];
}

namespace {

void check(const MfGpPosterior& g, const CostSchedule& costs, int l) {
  if (l < 1 || l > g.num_levels()) throw LevelOutOfRange("acquisition level out of range");
  if (costs.num_levels() != g.num_levels()) throw DimensionMismatch("cost schedule and model disagree on level count");
}

double noise_factor(const MfGpPosterior& g, double level_std_standardized) {
  const double noise = g.params().noise_variance;
  if (noise <= kernel_bounds::kNoiseMin) return 1.0;
  return 1.0 - std::sqrt(noise) / std::sqrt(level_std_standardized * level_std_standardized + noise);
}

}  // namespace

Eigen::VectorXd mfei(const MfGpPosterior& g, const Incumbent& inc, const CostSchedule& costs,
                     const Eigen::MatrixXd& x, int l) {
  check(g, costs, l);
  const std::vector<LevelPair> pairs = g.level_pairs(x, l);
  const double ratio = costs.cost(g.num_levels()) / costs.cost(l);
  Eigen::VectorXd out(x.cols());
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    const LevelPair& p = pairs[static_cast<std::size_t>(i)];
    const double ei = expected_improvement(p.top.mean, p.top.std, inc.value);
    out[i] = ei * std::abs(p.correlation) * noise_factor(g, p.level_std_standardized) * ratio;
  }
  return out;
}

double mfei(const MfGpPosterior& g, const Incumbent& inc, const CostSchedule& costs, const Eigen::VectorXd& x, int l) {
  return mfei(g, inc, costs, Eigen::MatrixXd(x), l)[0];
}

MfeiFactors mfei_factors(const MfGpPosterior& g, const Incumbent& inc, const CostSchedule& costs,
                         const Eigen::VectorXd& x, int l) {
  check(g, costs, l);
  const LevelPair p = g.level_pairs(Eigen::MatrixXd(x), l).front();
  return {expected_improvement(p.top.mean, p.top.std, inc.value), p.correlation,
          noise_factor(g, p.level_std_standardized), costs.cost(g.num_levels()) / costs.cost(l)};
}

double sample_density(const MfGpPosterior& g, const Eigen::VectorXd& x, int l) {
  if (l < 1 || l > g.num_levels()) throw LevelOutOfRange("sample_density: level out of range");
  const Eigen::VectorXd& ls = g.params().levels.front().lengthscales;
  double v = 1.0;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    if (g.levels()[static_cast<std::size_t>(i)] != l) continue;
    v *= 1.0 - se_correlation(ls, x, g.inputs().col(i));
    if (v <= 0.0) return 0.0;
  }
  return v;
}

Eigen::VectorXd mfpi(const MfGpPosterior& g, const Incumbent& inc, const CostSchedule& costs,
                     const Eigen::MatrixXd& x, int l) {
  check(g, costs, l);
  const std::vector<LevelPair> pairs = g.level_pairs(x, l);
  const double ratio = costs.cost(g.num_levels()) / costs.cost(l);
  Eigen::VectorXd out(x.cols());
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    const LevelPair& p = pairs[static_cast<std::size_t>(i)];
    const double pi = probability_of_improvement(p.top.mean, p.top.std, inc.value);
    if (pi == 0.0 || p.correlation == 0.0) {
      out[i] = 0.0;
      continue;
    }
    out[i] = pi * std::abs(p.correlation) * ratio * sample_density(g, x.col(i), l);
  }
  return out;
}

double mfpi(const MfGpPosterior& g, const Incumbent& inc, const CostSchedule& costs, const Eigen::VectorXd& x, int l) {
  return mfpi(g, inc, costs, Eigen::MatrixXd(x), l)[0];
}

Eigen::VectorXd mfmes(const MfGpPosterior& g, const std::vector<double>& min_values, const CostSchedule& costs,
                      const Eigen::MatrixXd& x, int l) {
  check(g, costs, l);
  if (min_values.empty()) throw EmptyInput("mfmes: no min-value draws");
  const std::vector<LevelPair> pairs = g.level_pairs(x, l);
  const double cost = costs.cost(l);
  Eigen::VectorXd out(x.cols());
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    const LevelPair& p = pairs[static_cast<std::size_t>(i)];
    const double r2 = p.correlation * p.correlation;
    out[i] = r2 == 0.0 ? 0.0 : r2 * max_value_entropy_search(p.top.mean, p.top.std, min_values) / cost;
  }
  return out;
}

double mfmes(const MfGpPosterior& g, const std::vector<double>& min_values, const CostSchedule& costs,
             const Eigen::VectorXd& x, int l) {
  return mfmes(g, min_values, costs, Eigen::MatrixXd(x), l)[0];
}

std::vector<double> sample_min_values(const MfGpPosterior& g, const MesSettings& settings, RandomStream& stream) {
  const int top = g.num_levels();
  Eigen::Index n_top = 0;
  double incumbent = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    if (g.levels()[static_cast<std::size_t>(i)] != top) continue;
    ++n_top;
    incumbent = std::min(incumbent, g.targets()[i]);
  }
  Eigen::MatrixXd top_inputs(g.dim(), n_top);
  for (Eigen::Index i = 0, k = 0; i < g.size(); ++i)
    if (g.levels()[static_cast<std::size_t>(i)] == top) top_inputs.col(k++) = g.inputs().col(i);

  const Eigen::MatrixXd grid = min_value_grid(g.dim(), settings.resolved_grid_size(g.dim()), top_inputs, stream);
  const BatchPredictor predictor = [&g, top](const Eigen::MatrixXd& x, Eigen::VectorXd& m, Eigen::VectorXd& s) {
    g.predict_level(x, top, m, s);
  };
  return sample_min_values(predictor, grid, incumbent, settings.num_min_samples, stream);
}

MfRecommendation maximize_mf_acquisition(const MfBatchEvaluator& acquisition, const Box& domain, int num_levels,
                                         RandomStream& stream, const MaximizerSettings& settings) {
  if (num_levels < 1) throw LevelOutOfRange("maximize_mf_acquisition: no levels");
  const Eigen::Index count = std::max<Eigen::Index>(1, settings.candidates_per_dim * domain.dim());
  const Eigen::MatrixXd cand = uniform_candidates(domain, count, stream);

  MfRecommendation best;
  best.score = -std::numeric_limits<double>::infinity();
  bool have = false;
  for (int l = num_levels; l >= 1; --l) {
    const BatchEvaluator at_level = [&acquisition, l](const Eigen::MatrixXd& x) { return acquisition(x, l); };
    AcquisitionOptimum level_best = polish_candidates(at_level, domain, cand, at_level(cand), settings);
    // Levels are visited top-down, so a strict comparison keeps the higher level on ties.
    if (!have || level_best.value > best.score) {
      best = {std::move(level_best.x), l, level_best.value};
      have = true;
    }
  }
  return best;
}

}  // namespace mfbo
