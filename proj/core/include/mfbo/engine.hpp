#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mfbo/acquisition.hpp"
#include "mfbo/benchmarks.hpp"
#include "mfbo/gp.hpp"
#include "mfbo/mf_acquisition.hpp"
#include "mfbo/mf_gp.hpp"
#include "mfbo/trace.hpp"

namespace mfbo {

enum class AcquisitionKind { EI, PI, MES, MFEI, MFPI, MFMES };

/// Lower-case name ("ei", "mfmes", ...).
const char* to_string(AcquisitionKind k) noexcept;
/// Case-insensitive. Throws UnknownAcquisition.
AcquisitionKind parse_acquisition(std::string_view name);
bool is_multifidelity(AcquisitionKind k) noexcept;

struct ExperimentConfig {
  std::string benchmark;
  AcquisitionKind acquisition = AcquisitionKind::EI;
  /// Active family levels, ascending. Empty: every level for multifidelity
  /// acquisitions, the top level otherwise.
  std::vector<int> levels;
  /// Initial design size per active level. Empty: D + 2 at the top, 2 (D + 2) below.
  std::vector<int> initial_sizes;
  /// Budget cap in cost units; 0 selects 100 D.
  double budget_max = 0.0;
  int trials = 10;
  std::uint64_t seed = 0;
  MesSettings mes;
  /// Cost per family level. Empty: the registry defaults.
  std::vector<double> costs;
  /// Charge the initial design to the budget.
  bool charge_initial_design = false;
  /// Refit hyperparameters once the data has grown by this fraction since
  /// the last fit; 0 refits every step.
  double refit_growth = 0.25;
  /// Random restarts of the first fit and of later refits (which also start
  /// from the previous optimum).
  int fit_restarts = 10;
  int refit_restarts = 2;
  MaximizerSettings maximizer;
};

/// Copy with every default materialized. Throws UnknownBenchmark,
/// InvalidConfig.
ExperimentConfig resolve(const ExperimentConfig& cfg);

/// Stream owned by one trial.
RandomStream trial_stream(std::uint64_t base_seed, int trial_index);

/// Latin hypercube design per active level (domain coordinates, family
/// levels). Each level draws from its own sub-stream so that runs sharing
/// a level share its design. `cfg` must be resolved.
ObservationSet initial_design(const ExperimentConfig& cfg, const FidelityFamily& family, RandomStream& stream);

/// Optimization state of one trial. The surrogate sees unit-cube inputs
/// and model levels 1..K for the K active family levels.
class Trial {
 public:
  /// Runs the initial design and fits the first surrogate.
  Trial(const ExperimentConfig& cfg, int trial_index);

  /// One query. Throws BudgetExhausted when no active level is affordable.
  void step();
  bool can_step() const;

  const TrialTrace& trace() const noexcept { return trace_; }
  TrialTrace take_trace() { return std::move(trace_); }
  double budget() const noexcept { return budget_; }
  /// Observations in unit-cube coordinates with model levels.
  const ObservationSet& data() const noexcept { return data_; }
  const Incumbent& incumbent() const noexcept { return incumbent_; }
  const CostSchedule& costs() const noexcept { return costs_; }
  const std::vector<int>& active_levels() const noexcept { return active_; }
  int refits() const noexcept { return refits_; }

 private:
  void observe(const Eigen::VectorXd& unit_x, int model_level, double y);
  void update_surrogate(const Eigen::VectorXd& unit_x, int model_level, double y);
  void refit();
  void update_incumbent();
  void record(int level, const Eigen::VectorXd& x, double y);

  ExperimentConfig cfg_;
  const FidelityFamily* family_;
  std::vector<int> active_;
  CostSchedule costs_;
  ObservationSet data_;
  RandomStream noise_;
  RandomStream fit_;
  RandomStream acq_;
  std::optional<GpPosterior> sf_;
  std::optional<MfGpPosterior> mf_;
  std::size_t fitted_size_ = 0;
  int refits_ = 0;
  double budget_ = 0.0;
  int iteration_ = 0;
  Incumbent incumbent_;
  TrialTrace trace_;
};

/// Initial design, then steps until no active level is affordable.
TrialTrace run_trial(const ExperimentConfig& cfg, int trial_index);

/// Runs trials 0..cfg.trials-1 on up to `parallelism` threads. The result
/// is ordered by trial index and does not depend on the schedule.
std::vector<TrialTrace> run_trials(const ExperimentConfig& cfg, int parallelism = 1);

}  // namespace mfbo
