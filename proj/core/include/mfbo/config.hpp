#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mfbo/engine.hpp"

namespace mfbo {

/// A set of experiments run together.
struct SuiteSpec {
  std::vector<ExperimentConfig> experiments;
  std::filesystem::path output_dir;
  int parallelism = 1;
};

/// Parses a suite document (YAML; JSON manifests are accepted as well).
///
///   output: results            # optional
///   parallelism: 2             # optional
///   defaults: { trials: 5 }    # optional, merged into every experiment
///   experiments:
///     - benchmark: forrester
///       acquisition: mfei
///       levels: [1, 2, 3, 4]
///
/// A document with `benchmark` and `acquisition` at the top level is a
/// one-experiment suite. Experiment keys: benchmark, acquisition, levels,
/// initial_sizes, budget_max, trials, seed, costs, mes_samples, mes_grid,
/// charge_initial_design, refit_growth, fit_restarts, refit_restarts,
/// candidates_per_dim, polish_starts, polish_iterations.
///
/// Every experiment is returned resolved. Throws ParseError (with line),
/// UnknownBenchmark, UnknownAcquisition, InvalidConfig.
SuiteSpec parse_config_text(const std::string& text);
SuiteSpec parse_config(const std::filesystem::path& file);

/// Directory name of one experiment's artifacts, e.g. "forrester_mfei_l1-2-3-4".
std::string experiment_id(const ExperimentConfig& cfg);

/// JSON run manifest: the resolved experiment, per-trial stream seeds and
/// the library version. Parsing it with parse_config replays the run.
std::string manifest_json(const ExperimentConfig& resolved);

/// Library version string.
const char* library_version() noexcept;

}  // namespace mfbo
