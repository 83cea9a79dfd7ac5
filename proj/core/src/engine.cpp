#include "mfbo/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <exception>
#include <thread>

#include "mfbo/errors.hpp"
#include "mfbo/metrics.hpp"

namespace mfbo {

namespace {

constexpr double kBudgetSlack = 1e-9;

// Sub-stream tags within a trial.
constexpr std::uint64_t kDesignPoints = 0x100;
constexpr std::uint64_t kDesignNoise = 0x200;
constexpr std::uint64_t kNoise = 1;
constexpr std::uint64_t kFit = 2;
constexpr std::uint64_t kAcquisition = 3;

}  // namespace

const char* to_string(AcquisitionKind k) noexcept {
  switch (k) {
    case AcquisitionKind::EI: return "ei";
    case AcquisitionKind::PI: return "pi";
    case AcquisitionKind::MES: return "mes";
    case AcquisitionKind::MFEI: return "mfei";
    case AcquisitionKind::MFPI: return "mfpi";
    case AcquisitionKind::MFMES: return "mfmes";
  }
  return "?";
}

AcquisitionKind parse_acquisition(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  for (auto k : {AcquisitionKind::EI, AcquisitionKind::PI, AcquisitionKind::MES, AcquisitionKind::MFEI,
                 AcquisitionKind::MFPI, AcquisitionKind::MFMES})
    if (lower == to_string(k)) return k;
  throw UnknownAcquisition("unknown acquisition '" + std::string(name) + "'");
}

bool is_multifidelity(AcquisitionKind k) noexcept {
  return k == AcquisitionKind::MFEI || k == AcquisitionKind::MFPI || k == AcquisitionKind::MFMES;
}

ExperimentConfig resolve(const ExperimentConfig& in) {
  ExperimentConfig c = in;
  const FidelityFamily& fam = find_benchmark(c.benchmark);
  const int top = fam.num_levels();
  const auto d = static_cast<int>(fam.dim());
  const bool mf = is_multifidelity(c.acquisition);

  if (c.levels.empty()) {
    if (mf) {
      for (int l = 1; l <= top; ++l) c.levels.push_back(l);
    } else {
      c.levels = {top};
    }
  }
  for (std::size_t i = 0; i < c.levels.size(); ++i) {
    if (c.levels[i] < 1 || c.levels[i] > top)
      throw InvalidConfig("level " + std::to_string(c.levels[i]) + " does not exist for " + c.benchmark);
    if (i > 0 && c.levels[i] <= c.levels[i - 1]) throw InvalidConfig("levels must be strictly increasing");
  }
  if (c.levels.back() != top) throw InvalidConfig("the active levels must include the top level");
  if (mf && c.levels.size() < 2) throw InvalidConfig("multifidelity acquisitions need at least two levels");
  if (!mf && c.levels.size() != 1) throw InvalidConfig("single-fidelity acquisitions use the top level only");

  if (c.costs.empty()) c.costs = fam.costs();
  if (static_cast<int>(c.costs.size()) != top)
    throw InvalidConfig("expected " + std::to_string(top) + " costs for " + c.benchmark);
  (void)CostSchedule(c.costs);

  if (c.initial_sizes.empty()) {
    for (int l : c.levels) c.initial_sizes.push_back(l == top ? d + 2 : 2 * (d + 2));
  }
  if (c.initial_sizes.size() != c.levels.size()) throw InvalidConfig("one initial design size per active level");
  for (int n : c.initial_sizes)
    if (n < 1) throw InvalidConfig("initial design sizes must be positive");
  if (c.initial_sizes.back() < 2) throw InvalidConfig("the top level needs at least two initial points");
  if (mf && c.initial_sizes.front() < 2) throw InvalidConfig("the lowest level needs at least two initial points");

  if (c.budget_max == 0.0) c.budget_max = 100.0 * d;
  if (!(c.budget_max > 0.0) || !std::isfinite(c.budget_max)) throw InvalidConfig("budget_max must be positive");
  if (c.trials < 1) throw InvalidConfig("trials must be positive");
  if (c.mes.num_min_samples < 1) throw InvalidConfig("mes samples must be positive");
  if (c.mes.grid_size == 0) c.mes.grid_size = 100 * d;
  if (c.mes.grid_size < 50 * d) throw InvalidConfig("mes grid must hold at least 50 D points");
  if (!(c.refit_growth >= 0.0)) throw InvalidConfig("refit_growth must be nonnegative");
  if (c.fit_restarts < 1 || c.refit_restarts < 0) throw InvalidConfig("invalid restart counts");
  if (c.maximizer.candidates_per_dim < 1 || c.maximizer.polish_starts < 1)
    throw InvalidConfig("invalid maximizer settings");
  return c;
}

RandomStream trial_stream(std::uint64_t base_seed, int trial_index) {
  return RandomStream(base_seed).derive(static_cast<std::uint64_t>(trial_index));
}

ObservationSet initial_design(const ExperimentConfig& cfg, const FidelityFamily& family, RandomStream& stream) {
  ObservationSet data(family.dim());
  for (std::size_t k = 0; k < cfg.levels.size(); ++k) {
    const int level = cfg.levels[k];
    RandomStream points = stream.derive(kDesignPoints + static_cast<std::uint64_t>(level));
    RandomStream noise = stream.derive(kDesignNoise + static_cast<std::uint64_t>(level));
    const Eigen::MatrixXd u = latin_hypercube(cfg.initial_sizes[k], family.dim(), points);
    for (Eigen::Index i = 0; i < u.cols(); ++i) {
      const Eigen::VectorXd x = family.domain().from_unit(u.col(i));
      data.add(x, level, family.evaluate(level, x, noise), cfg.costs[static_cast<std::size_t>(level - 1)]);
    }
  }
  return data;
}

Trial::Trial(const ExperimentConfig& cfg, int trial_index)
    : cfg_(resolve(cfg)),
      family_(&find_benchmark(cfg_.benchmark)),
      active_(cfg_.levels),
      noise_(0),
      fit_(0),
      acq_(0) {
  std::vector<double> model_costs;
  for (int l : active_) model_costs.push_back(cfg_.costs[static_cast<std::size_t>(l - 1)]);
  costs_ = CostSchedule(model_costs);

  RandomStream stream = trial_stream(cfg_.seed, trial_index);
  const ObservationSet design = initial_design(cfg_, *family_, stream);
  noise_ = stream.derive(kNoise);
  fit_ = stream.derive(kFit);
  acq_ = stream.derive(kAcquisition);

  data_ = ObservationSet(family_->dim());
  for (const auto& o : design) {
    const auto model_level =
        static_cast<int>(std::find(active_.begin(), active_.end(), o.level) - active_.begin()) + 1;
    data_.add(family_->domain().to_unit(o.x), model_level, o.y);
  }
  budget_ = cfg_.charge_initial_design ? design.budget() : 0.0;

  trace_.benchmark = cfg_.benchmark;
  trace_.acquisition = to_string(cfg_.acquisition);
  trace_.trial = trial_index;
  trace_.seed = cfg_.seed;
  trace_.budget_max = cfg_.budget_max;
  trace_.status = "running";

  refit();
  update_incumbent();
  record(0, family_->domain().from_unit(incumbent_.location), incumbent_.value);
}

bool Trial::can_step() const { return budget_ + costs_.min_cost() <= cfg_.budget_max + kBudgetSlack; }

void Trial::refit() {
  GpFitSettings settings;
  settings.restarts = refits_ == 0 ? cfg_.fit_restarts : cfg_.refit_restarts;
  if (is_multifidelity(cfg_.acquisition)) {
    const MfKernelParams* warm = mf_ ? &mf_->params() : nullptr;
    const MfKernelParams previous = warm ? *warm : MfKernelParams{};
    mf_ = fit_mf_gp(data_, fit_, settings, warm ? &previous : nullptr);
  } else {
    const KernelParams previous = sf_ ? sf_->params() : KernelParams{};
    sf_ = fit_gp(data_, fit_, settings, sf_ ? &previous : nullptr);
  }
  fitted_size_ = data_.size();
  ++refits_;
}

void Trial::update_surrogate(const Eigen::VectorXd& unit_x, int model_level, double y) {
  const auto threshold = static_cast<double>(fitted_size_) * (1.0 + cfg_.refit_growth);
  if (static_cast<double>(data_.size()) >= threshold - 1e-9) {
    refit();
    return;
  }
  if (mf_) {
    mf_ = mf_->with_observation(unit_x, model_level, y);
  } else {
    sf_ = sf_->with_observation(unit_x, y);
  }
}

void Trial::update_incumbent() { incumbent_ = incumbent_at_level(data_, costs_.num_levels()); }

void Trial::record(int level, const Eigen::VectorXd& x, double y) {
  TrialRecord r;
  r.iteration = iteration_;
  r.budget = budget_;
  r.level = level;
  r.x = x;
  r.y = y;
  r.incumbent = incumbent_.value;
  r.incumbent_x = family_->domain().from_unit(incumbent_.location);
  r.metrics = compute_metrics(*family_, r.incumbent_x, budget_);
  trace_.records.push_back(std::move(r));
}

void Trial::observe(const Eigen::VectorXd& unit_x, int model_level, double y) {
  data_.add(unit_x, model_level, y);
  update_surrogate(unit_x, model_level, y);
}

void Trial::step() {
  if (!can_step()) {
    trace_.status = "budget exhausted";
    throw BudgetExhausted("no affordable level remains");
  }
  const Box unit = Box::unit(family_->dim());
  const int top = costs_.num_levels();
  Eigen::VectorXd x;
  int level = top;

  switch (cfg_.acquisition) {
    case AcquisitionKind::EI:
    case AcquisitionKind::PI:
    case AcquisitionKind::MES: {
      std::vector<double> minvals;
      if (cfg_.acquisition == AcquisitionKind::MES) minvals = sample_min_values(*sf_, cfg_.mes, acq_);
      const GpPosterior& g = *sf_;
      const double best = incumbent_.value;
      const AcquisitionKind kind = cfg_.acquisition;
      const BatchEvaluator eval = [&](const Eigen::MatrixXd& xs) {
        Eigen::VectorXd m, s;
        g.predict(xs, m, s);
        Eigen::VectorXd v(xs.cols());
        for (Eigen::Index i = 0; i < xs.cols(); ++i) {
          if (kind == AcquisitionKind::EI) v[i] = expected_improvement(m[i], s[i], best);
          else if (kind == AcquisitionKind::PI) v[i] = probability_of_improvement(m[i], s[i], best);
          else v[i] = max_value_entropy_search(m[i], s[i], minvals);
        }
        return v;
      };
      x = maximize_acquisition(eval, unit, acq_, cfg_.maximizer).x;
      break;
    }
    default: {
      std::vector<double> minvals;
      if (cfg_.acquisition == AcquisitionKind::MFMES) minvals = sample_min_values(*mf_, cfg_.mes, acq_);
      const MfGpPosterior& g = *mf_;
      const MfBatchEvaluator eval = [&](const Eigen::MatrixXd& xs, int l) -> Eigen::VectorXd {
        if (budget_ + costs_.cost(l) > cfg_.budget_max + kBudgetSlack)
          return Eigen::VectorXd::Constant(xs.cols(), -std::numeric_limits<double>::infinity());
        switch (cfg_.acquisition) {
          case AcquisitionKind::MFEI: return mfei(g, incumbent_, costs_, xs, l);
          case AcquisitionKind::MFPI: return mfpi(g, incumbent_, costs_, xs, l);
          default: return mfmes(g, minvals, costs_, xs, l);
        }
      };
      const MfRecommendation rec = maximize_mf_acquisition(eval, unit, top, acq_, cfg_.maximizer);
      x = rec.location;
      level = rec.level;
      break;
    }
  }

  x = unit.clamp(x);
  const Eigen::VectorXd domain_x = family_->domain().from_unit(x);
  const int family_level = active_[static_cast<std::size_t>(level - 1)];
  const double y = family_->evaluate(family_level, domain_x, noise_);
  budget_ += costs_.cost(level);
  ++iteration_;
  observe(x, level, y);
  update_incumbent();
  record(family_level, domain_x, y);
}

TrialTrace run_trial(const ExperimentConfig& cfg, int trial_index) {
  Trial t(cfg, trial_index);
  while (t.can_step()) t.step();
  TrialTrace trace = t.take_trace();
  trace.status = "budget exhausted";
  return trace;
}

std::vector<TrialTrace> run_trials(const ExperimentConfig& cfg, int parallelism) {
  const ExperimentConfig c = resolve(cfg);
  std::vector<TrialTrace> out(static_cast<std::size_t>(c.trials));
  std::vector<std::exception_ptr> errors(out.size());
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < c.trials; i = next++) {
      try {
        out[static_cast<std::size_t>(i)] = run_trial(c, i);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };
  const int threads = std::clamp(parallelism, 1, c.trials);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace mfbo
