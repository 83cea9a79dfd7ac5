#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "mfbo/observation.hpp"
#include "mfbo/random.hpp"

namespace mfbo {

/// Where a stored optimum value or location comes from.
enum class Source { Published, Derived };
const char* to_string(Source s) noexcept;

struct OptimumRecord {
  Eigen::VectorXd x;
  double f = 0.0;
  Source x_source = Source::Published;
  Source f_source = Source::Published;
};

struct SpringMassConfig {
  double m1 = 1.0, m2 = 1.0;
  double k1 = 1.0, k2 = 1.0;
  double dt = 0.01;
  double t_end = 6.0;
  double h1 = 1.0, h2 = 0.0;
  double v1 = 0.0, v2 = 0.0;
};

/// h1(t_end) from classic fourth-order Runge-Kutta on
///   m1 h1'' = -(k1 + k2) h1 + k2 h2,  m2 h2'' = k2 h1 - (k1 + k2) h2.
/// A shorter final step covers any remainder of t_end / dt.
double spring_mass_simulate(const SpringMassConfig& cfg);

/// Time steps of the spring-mass levels (low, high).
inline constexpr double kSpringMassDtLow = 0.6;
inline constexpr double kSpringMassDtHigh = 0.01;

/// Noise standard deviations of the Paciorek levels.
inline constexpr double kPaciorekNoiseHigh = 0.0125;
inline constexpr double kPaciorekNoiseLow = 0.075;

/// An objective with L ordered fidelity levels (L is the most accurate).
class FidelityFamily {
 public:
  /// Noise-free value at (level, x); x in domain coordinates.
  using Function = std::function<double(int level, const Eigen::VectorXd& x)>;
  /// Additive noise at a level, drawn from the stream.
  using NoiseModel = std::function<double(int level, RandomStream& stream)>;

  FidelityFamily(std::string name, Box domain, int num_levels, Function f, std::vector<double> costs,
                 OptimumRecord optimum, NoiseModel noise = {});

  const std::string& name() const noexcept { return name_; }
  Eigen::Index dim() const noexcept { return domain_.dim(); }
  const Box& domain() const noexcept { return domain_; }
  int num_levels() const noexcept { return num_levels_; }
  const std::vector<double>& costs() const noexcept { return costs_; }
  const OptimumRecord& optimum() const noexcept { return optimum_; }
  /// Noise-free top-level value at optimum().x. The recorded f is rounded;
  /// metrics measure against this value.
  double reference_value() const noexcept { return reference_value_; }
  bool noisy() const noexcept { return static_cast<bool>(noise_); }

  /// Observed value. Throws OutOfDomain and LevelOutOfRange.
  double evaluate(int level, const Eigen::VectorXd& x, RandomStream& stream) const;
  /// Value with noise disabled.
  double evaluate_noise_free(int level, const Eigen::VectorXd& x) const;

  /// Largest noise-free top-level value over a 10^6-point Latin hypercube,
  /// computed on first use and cached.
  double f_max() const;

 private:
  void check(int level, const Eigen::VectorXd& x) const;

  struct Cache;
  std::string name_;
  Box domain_;
  int num_levels_;
  Function f_;
  std::vector<double> costs_;
  OptimumRecord optimum_;
  double reference_value_;
  NoiseModel noise_;
  std::shared_ptr<Cache> cache_;
};

/// Tolerance for points on the domain boundary.
inline constexpr double kDomainTolerance = 1e-12;

/// Every registered family, in a fixed order.
const std::vector<FidelityFamily>& registry();
/// Throws UnknownBenchmark.
const FidelityFamily& find_benchmark(const std::string& name);

/// Closed-form family members, exposed for tests.
namespace formulas {
double forrester(int level, double x);
double jump_forrester(int level, double x);
double rosenbrock(int level, const Eigen::VectorXd& x);
double rastrigin_sr(int level, const Eigen::VectorXd& x);
double alos(int level, const Eigen::VectorXd& x);
double paciorek(int level, const Eigen::VectorXd& x);
double spring_mass(int level, const Eigen::VectorXd& x);
}  // namespace formulas

/// Outcome of one registry self-check.
struct VerifyResult {
  std::string family;
  std::string check;
  double expected = 0.0;
  double actual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string note;
  /// Reported for inspection only; does not count as a failure.
  bool informational = false;
};

/// Argmin of the top level on a regular grid with about `points` nodes.
struct GridMinimum {
  Eigen::VectorXd x;
  double f = 0.0;
};
GridMinimum grid_minimum(const FidelityFamily& family, std::size_t points);

/// Re-evaluates every noise-free optimum record (tolerance 1e-3) and runs
/// the grid oracles for jump_forrester and the multi-dimensional ALOS
/// families. Oracle results that disagree with the record are reported
/// as failures, not adjusted.
std::vector<VerifyResult> verify_registry(std::size_t grid_points = 1000000);

}  // namespace mfbo
