#include "mfbo/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "mfbo/errors.hpp"
#include "mfbo/math_stats.hpp"

namespace mfbo {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double finite_or_floor(double v) { return std::isfinite(v) ? v : kNegInf; }

}  // namespace

Incumbent incumbent_at_level(const ObservationSet& data, int level) {
  Incumbent inc;
  bool found = false;
  for (const auto& o : data) {
    if (o.level != level) continue;
    if (!found || o.y < inc.value) {
      inc.location = o.x;
      inc.value = o.y;
      found = true;
    }
  }
  if (!found) throw EmptyInput("incumbent_at_level: no observation at level " + std::to_string(level));
  return inc;
}

int MesSettings::resolved_grid_size(Eigen::Index dim) const {
  return grid_size > 0 ? grid_size : static_cast<int>(100 * dim);
}

double expected_improvement(double mean, double sd, double best) {
  if (!(sd >= kSigmaFloor)) return std::max(best - mean, 0.0);
  const double i = (best - mean) / sd;
  return std::max(sd * (i * norm_cdf(i) + norm_pdf(i)), 0.0);
}

double probability_of_improvement(double mean, double sd, double best) {
  if (!(sd >= kSigmaFloor)) {
    if (mean < best) return 1.0;
    return mean == best ? 0.5 : 0.0;
  }
  return norm_cdf((best - mean) / sd);
}

double truncated_entropy_reduction(double gamma) {
  if (gamma < -5.0) {
    // The two gamma^2 / 2 terms cancel analytically.
    const double u = -gamma;
    const double c = mills_tail(u);
    return -0.5 * u * c + 0.5 * std::log(2.0 * std::numbers::pi) + std::log(u + c);
  }
  const double v = 0.5 * gamma * inverse_mills_ratio(gamma) - log_norm_cdf(gamma);
  return std::max(v, 0.0);
}

double max_value_entropy_search(double mean, double sd, const std::vector<double>& min_values) {
  if (min_values.empty()) throw EmptyInput("max_value_entropy_search: no min-value draws");
  if (!(sd >= kSigmaFloor)) return 0.0;
  double total = 0.0;
  for (double f : min_values) total += truncated_entropy_reduction((mean - f) / sd);
  return std::max(total / static_cast<double>(min_values.size()), 0.0);
}

double expected_improvement(const GpPosterior& g, const Incumbent& inc, const Eigen::VectorXd& x) {
  const Prediction p = g.predict(x);
  return expected_improvement(p.mean, p.std, inc.value);
}

double probability_of_improvement(const GpPosterior& g, const Incumbent& inc, const Eigen::VectorXd& x) {
  const Prediction p = g.predict(x);
  return probability_of_improvement(p.mean, p.std, inc.value);
}

double max_value_entropy_search(const GpPosterior& g, const std::vector<double>& min_values,
                                const Eigen::VectorXd& x) {
  const Prediction p = g.predict(x);
  return max_value_entropy_search(p.mean, p.std, min_values);
}

Eigen::MatrixXd min_value_grid(Eigen::Index dim, int grid_size, const Eigen::MatrixXd& extra, RandomStream& stream) {
  Eigen::MatrixXd grid(dim, grid_size + extra.cols());
  grid.leftCols(grid_size) = latin_hypercube(grid_size, dim, stream);
  if (extra.cols() > 0) grid.rightCols(extra.cols()) = extra;
  return grid;
}

std::vector<double> sample_min_values(const BatchPredictor& predictor, const Eigen::MatrixXd& grid,
                                      double incumbent, int num_samples, RandomStream& stream) {
  if (num_samples < 1) throw InvalidConfig("sample_min_values: need at least one sample");
  Eigen::VectorXd mu, sd;
  predictor(grid, mu, sd);

  // log P(min > y) = sum_i log Phi((mu_i - y) / sigma_i)
  auto log_survival = [&](double y) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < mu.size(); ++i) {
      if (sd[i] < kSigmaFloor) {
        if (mu[i] <= y) return kNegInf;
        continue;
      }
      s += log_norm_cdf((mu[i] - y) / sd[i]);
    }
    return s;
  };

  double lo = std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    lo = std::min(lo, mu[i] - 10.0 * sd[i]);
    hi = std::min(hi, mu[i] + 10.0 * sd[i]);
  }
  lo -= 1e-9 * std::max(1.0, std::abs(lo));
  hi = std::min(hi, incumbent);

  auto quantile = [&](double q) {
    const double target = std::log1p(-q);
    double a = lo, b = hi;
    if (!(b > a)) return b;
    for (int it = 0; it < 200 && b - a > 1e-12 * std::max(1.0, std::abs(a) + std::abs(b)); ++it) {
      const double m = 0.5 * (a + b);
      if (log_survival(m) > target) a = m; else b = m;
    }
    return 0.5 * (a + b);
  };

  const double q1 = quantile(0.25);
  const double q2 = quantile(0.5);
  const double q3 = quantile(0.75);
  const double b = (q3 - q1) / (std::log(-std::log(0.25)) - std::log(-std::log(0.75)));
  const double a = q2 - b * std::log(-std::log(0.5));

  std::vector<double> draws(static_cast<std::size_t>(num_samples));
  for (double& d : draws) {
    const double u = stream.uniform_open();
    d = b > 0.0 ? a + b * std::log(-std::log(u)) : q2;
    d = std::min(d, incumbent);
  }
  return draws;
}

std::vector<double> sample_min_values(const GpPosterior& g, const MesSettings& settings, RandomStream& stream) {
  if (g.size() == 0) throw EmptyInput("sample_min_values: empty posterior");
  const Eigen::MatrixXd grid = min_value_grid(g.dim(), settings.resolved_grid_size(g.dim()), g.inputs(), stream);
  const BatchPredictor predictor = [&g](const Eigen::MatrixXd& x, Eigen::VectorXd& m, Eigen::VectorXd& s) {
    g.predict(x, m, s);
  };
  return sample_min_values(predictor, grid, g.targets().minCoeff(), settings.num_min_samples, stream);
}

Eigen::MatrixXd uniform_candidates(const Box& domain, Eigen::Index count, RandomStream& stream) {
  const Eigen::Index d = domain.dim();
  Eigen::MatrixXd c(d, count);
  for (Eigen::Index j = 0; j < count; ++j)
    for (Eigen::Index i = 0; i < d; ++i) c(i, j) = stream.uniform(domain.lower[i], domain.upper[i]);
  return c;
}

AcquisitionOptimum pattern_search(const BatchEvaluator& acquisition, const Box& domain, Eigen::VectorXd start,
                                  double start_value, const MaximizerSettings& settings) {
  const Eigen::Index d = domain.dim();
  const Eigen::VectorXd width = domain.upper - domain.lower;
  AcquisitionOptimum best{std::move(start), finite_or_floor(start_value)};
  double step = settings.initial_step;
  Eigen::MatrixXd trial(d, 2 * d);
  for (int it = 0; it < settings.polish_iterations && step >= settings.min_step; ++it) {
    for (Eigen::Index i = 0; i < d; ++i) {
      trial.col(2 * i) = best.x;
      trial.col(2 * i + 1) = best.x;
      trial(i, 2 * i) = std::min(best.x[i] + step * width[i], domain.upper[i]);
      trial(i, 2 * i + 1) = std::max(best.x[i] - step * width[i], domain.lower[i]);
    }
    const Eigen::VectorXd v = acquisition(trial);
    Eigen::Index arg = -1;
    double top = best.value;
    for (Eigen::Index k = 0; k < v.size(); ++k) {
      const double vk = finite_or_floor(v[k]);
      if (vk > top) {
        top = vk;
        arg = k;
      }
    }
    if (arg >= 0) {
      best.x = trial.col(arg);
      best.value = top;
    } else {
      step *= 0.5;
    }
  }
  return best;
}

AcquisitionOptimum polish_candidates(const BatchEvaluator& acquisition, const Box& domain,
                                     const Eigen::MatrixXd& candidates, const Eigen::VectorXd& values,
                                     const MaximizerSettings& settings) {
  const Eigen::Index count = candidates.cols();
  if (count == 0 || values.size() != count) throw DimensionMismatch("polish_candidates: bad candidate set");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(count));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const auto starts =
      std::min<std::size_t>(order.size(), static_cast<std::size_t>(std::max(settings.polish_starts, 1)));
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(starts), order.end(),
                    [&](Eigen::Index a, Eigen::Index b) {
                      const double va = finite_or_floor(values[a]), vb = finite_or_floor(values[b]);
                      return va > vb || (va == vb && a < b);
                    });

  AcquisitionOptimum best{candidates.col(order[0]), finite_or_floor(values[order[0]])};
  for (std::size_t s = 0; s < starts; ++s) {
    const Eigen::Index k = order[s];
    AcquisitionOptimum local = pattern_search(acquisition, domain, candidates.col(k), values[k], settings);
    if (local.value > best.value) best = std::move(local);
  }
  return best;
}

AcquisitionOptimum maximize_acquisition(const BatchEvaluator& acquisition, const Box& domain, RandomStream& stream,
                                        const MaximizerSettings& settings) {
  const Eigen::Index count = std::max<Eigen::Index>(1, settings.candidates_per_dim * domain.dim());
  const Eigen::MatrixXd cand = uniform_candidates(domain, count, stream);
  return polish_candidates(acquisition, domain, cand, acquisition(cand), settings);
}

}  // namespace mfbo
