#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

#include "mfbo/benchmarks.hpp"
#include "mfbo/trace.hpp"

namespace mfbo {

/// sqrt((eps_x^2 + eps_f^2) / 2)
double total_error(double eps_x, double eps_f);

/// Errors of an incumbent at `location` (domain coordinates). eps_x is the
/// distance to x* in unit-cube coordinates divided by sqrt(D); eps_f uses
/// the noise-free top-level value measured from the family reference value
/// up to f_max, floored at 0.
MetricPoint compute_metrics(const FidelityFamily& family, const Eigen::VectorXd& location, double budget = 0.0);

struct AggregateCurve {
  std::vector<double> budget;
  std::vector<double> median;
  std::vector<double> p25;
  std::vector<double> p75;
};

/// Percentile with linear interpolation between order statistics; q in [0, 1].
double percentile(std::vector<double> values, double q);

/// eps_t of each trace as a right-continuous step function of the budget,
/// sampled at `grid_size` uniform points over [0, budget_max]. Throws EmptyInput.
AggregateCurve aggregate(const std::vector<TrialTrace>& traces, int grid_size, double budget_max);

/// Shortest-round-trip-safe decimal form (17 significant digits).
std::string format_double(double v);

void write_trial_csv(const std::filesystem::path& path, const TrialTrace& trace);
void write_aggregate_csv(const std::filesystem::path& path, const AggregateCurve& curve);
AggregateCurve read_aggregate_csv(const std::filesystem::path& path);
/// Whitespace-separated "budget median p25 p75" series with a comment header.
void write_plot_data(const std::filesystem::path& path, const AggregateCurve& curve, const std::string& title);

/// Writes trial_NN.csv per trace, aggregate.csv, plot.dat and
/// manifest.json into `dir`. Throws EmptyInput before touching the disk
/// when `traces` is empty and IoFailure on write errors.
void emit(const AggregateCurve& curve, const std::vector<TrialTrace>& traces, const std::filesystem::path& dir,
          const std::string& manifest_json);

/// File name of a trial CSV.
std::string trial_file_name(int trial);

}  // namespace mfbo
