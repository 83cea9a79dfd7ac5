#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include "mfbo/benchmarks.hpp"
#include "mfbo/config.hpp"
#include "mfbo/engine.hpp"
#include "mfbo/errors.hpp"
#include "mfbo/metrics.hpp"

namespace mfbo::cli {

namespace {

namespace fs = std::filesystem;

constexpr int kAggregateGrid = 201;
constexpr double kTarget = 0.05;

struct ExperimentResult {
  ExperimentConfig cfg;
  AggregateCurve curve;
  fs::path dir;
};

fs::path default_output_dir() {
  const char* env = std::getenv(kOutputDirEnv);
  return env && *env ? fs::path(env) : fs::path("mfbo_results");
}

std::string join(const std::vector<double>& v) {
  std::ostringstream s;
  for (std::size_t i = 0; i < v.size(); ++i) s << (i ? "," : "") << v[i];
  return s.str();
}

// Runs every (experiment, trial) pair on a shared pool, then writes artifacts in suite order.
std::vector<ExperimentResult> execute(const SuiteSpec& spec, std::ostream& out) {
  struct Task {
    std::size_t experiment;
    int trial;
  };
  std::vector<Task> tasks;
  std::vector<std::vector<TrialTrace>> traces(spec.experiments.size());
  for (std::size_t e = 0; e < spec.experiments.size(); ++e) {
    traces[e].resize(static_cast<std::size_t>(spec.experiments[e].trials));
    for (int t = 0; t < spec.experiments[e].trials; ++t) tasks.push_back({e, t});
  }
  std::vector<std::exception_ptr> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      const Task& task = tasks[i];
      try {
        traces[task.experiment][static_cast<std::size_t>(task.trial)] =
            run_trial(spec.experiments[task.experiment], task.trial);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int threads = std::clamp<int>(spec.parallelism, 1, static_cast<int>(std::max<std::size_t>(tasks.size(), 1)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const std::exception& e) {
      const auto& cfg = spec.experiments[tasks[i].experiment];
      throw Error(experiment_id(cfg) + " trial " + std::to_string(tasks[i].trial) + ": " + e.what());
    }
  }

  std::vector<ExperimentResult> results;
  for (std::size_t e = 0; e < spec.experiments.size(); ++e) {
    const ExperimentConfig& cfg = spec.experiments[e];
    ExperimentResult r{cfg, aggregate(traces[e], kAggregateGrid, cfg.budget_max), spec.output_dir / experiment_id(cfg)};
    emit(r.curve, traces[e], r.dir, manifest_json(cfg));
    out << "wrote " << r.dir.string() << "\n";
    results.push_back(std::move(r));
  }
  return results;
}

std::string budget_to_target(const AggregateCurve& c) {
  for (std::size_t k = 0; k < c.budget.size(); ++k)
    if (c.median[k] <= kTarget) return format_double(c.budget[k]);
  return "-";
}

void print_summary(const std::vector<ExperimentResult>& results, std::ostream& out) {
  std::map<std::string, std::vector<std::pair<double, std::string>>> by_benchmark;
  for (const auto& r : results)
    by_benchmark[r.cfg.benchmark].emplace_back(r.curve.median.back(), experiment_id(r.cfg));
  std::map<std::string, std::string> rank;
  for (auto& [name, entries] : by_benchmark) {
    std::stable_sort(entries.begin(), entries.end());
    if (entries.size() > 1) {
      rank[entries[0].second] = "best";
      rank[entries[1].second] = "second";
    }
  }

  out << "\n" << std::left << std::setw(36) << "experiment" << std::right << std::setw(8) << "trials"
      << std::setw(14) << "median eps_t" << std::setw(10) << "p25" << std::setw(10) << "p75" << std::setw(14)
      << "B(eps_t<=.05)" << "  rank\n";
  for (const auto& r : results) {
    const std::string id = experiment_id(r.cfg);
    out << std::left << std::setw(36) << id << std::right << std::setw(8) << r.cfg.trials << std::setw(14)
        << std::setprecision(4) << r.curve.median.back() << std::setw(10) << r.curve.p25.back() << std::setw(10)
        << r.curve.p75.back() << std::setw(14) << budget_to_target(r.curve) << "  "
        << (rank.count(id) ? rank[id] : "") << "\n";
  }
}

int cmd_list(std::ostream& out) {
  out << std::left << std::setw(16) << "name" << std::setw(4) << "D" << std::setw(4) << "L" << std::setw(26)
      << "domain" << std::setw(26) << "costs"
      << "optimum\n";
  for (const auto& f : registry()) {
    std::ostringstream dom, opt;
    dom << "[" << f.domain().lower[0] << "," << f.domain().upper[0] << "]";
    if (f.dim() > 1) dom << "^" << f.dim();
    opt << "f*=" << f.optimum().f << " at (";
    for (Eigen::Index i = 0; i < f.dim(); ++i) opt << (i ? "," : "") << f.optimum().x[i];
    opt << ")";
    out << std::left << std::setw(16) << f.name() << std::setw(4) << f.dim() << std::setw(4) << f.num_levels()
        << std::setw(26) << dom.str() << std::setw(26) << join(f.costs()) << opt.str() << "\n";
  }
  return kExitOk;
}

int cmd_verify(std::size_t grid, std::ostream& out) {
  bool ok = true;
  for (const auto& r : verify_registry(grid)) {
    const char* tag = r.informational ? "INFO" : (r.pass ? "PASS" : "FAIL");
    if (!r.informational && !r.pass) ok = false;
    out << std::left << std::setw(6) << tag << std::setw(16) << r.family << std::setw(20) << r.check
        << "expected " << format_double(r.expected) << "  got " << format_double(r.actual) << "  tol "
        << r.tolerance << "  " << r.note << "\n";
  }
  out << (ok ? "verify: all checks passed\n" : "verify: some checks failed\n");
  return ok ? kExitOk : kExitRuntime;
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> v;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    std::size_t used = 0;
    const int n = std::stoi(item, &used);
    if (used != item.size()) throw InvalidConfig("bad integer '" + item + "'");
    v.push_back(n);
  }
  return v;
}

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    std::size_t used = 0;
    const double x = std::stod(item, &used);
    if (used != item.size()) throw InvalidConfig("bad number '" + item + "'");
    v.push_back(x);
  }
  return v;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multifidelity Bayesian optimization benchmark harness", "mfbo"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(library_version()));

  auto* list = app.add_subcommand("list", "Print the benchmark registry");

  std::size_t grid = 1000000;
  auto* verify = app.add_subcommand("verify", "Check registry optimum records and grid oracles");
  verify->add_option("--grid", grid, "Grid oracle size")->check(CLI::PositiveNumber);

  std::string benchmark, acquisition, levels, costs, initial;
  ExperimentConfig bench_cfg;
  std::string output;
  int parallel = 1;
  auto* bench = app.add_subcommand("bench", "Run one benchmark/acquisition configuration");
  bench->add_option("--benchmark,-b", benchmark, "Registry name")->required();
  bench->add_option("--acq,-a", acquisition, "ei | pi | mes | mfei | mfpi | mfmes")->required();
  bench->add_option("--levels", levels, "Active levels, e.g. 1,2,3,4");
  bench->add_option("--trials", bench_cfg.trials, "Number of trials");
  bench->add_option("--seed", bench_cfg.seed, "Base seed");
  bench->add_option("--budget", bench_cfg.budget_max, "Budget cap (default 100 D)");
  bench->add_option("--costs", costs, "Cost per level, e.g. 0.1,1");
  bench->add_option("--initial", initial, "Initial design size per active level");
  bench->add_option("--mes-samples", bench_cfg.mes.num_min_samples, "Min-value draws for MES");
  bench->add_option("--refit-growth", bench_cfg.refit_growth, "Refit when the data grew by this fraction");
  bench->add_flag("--charge-initial", bench_cfg.charge_initial_design, "Charge the initial design to the budget");
  bench->add_option("--output,-o", output, "Output directory");
  bench->add_option("--parallel,-j", parallel, "Worker threads")->check(CLI::PositiveNumber);

  std::string config_file;
  std::string suite_output;
  int suite_parallel = 0;
  auto* suite = app.add_subcommand("suite", "Run every experiment of a config file or manifest");
  suite->add_option("config", config_file, "Suite config (YAML) or manifest (JSON)")->required();
  suite->add_option("--output,-o", suite_output, "Output directory (overrides the file)");
  suite->add_option("--parallel,-j", suite_parallel, "Worker threads (overrides the file)")
      ->check(CLI::PositiveNumber);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << library_version() << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "mfbo: " << e.what() << "\n" << "run 'mfbo --help' for usage\n";
    return kExitUsage;
  }

  SuiteSpec spec;
  try {
    if (*bench) {
      bench_cfg.benchmark = benchmark;
      bench_cfg.acquisition = parse_acquisition(acquisition);
      if (!levels.empty()) bench_cfg.levels = parse_int_list(levels);
      if (!costs.empty()) bench_cfg.costs = parse_double_list(costs);
      if (!initial.empty()) bench_cfg.initial_sizes = parse_int_list(initial);
      spec.experiments.push_back(resolve(bench_cfg));
      spec.output_dir = output.empty() ? default_output_dir() : fs::path(output);
      spec.parallelism = parallel;
    } else if (*suite) {
      spec = parse_config(config_file);
      if (!suite_output.empty()) spec.output_dir = suite_output;
      if (spec.output_dir.empty()) spec.output_dir = default_output_dir();
      if (suite_parallel > 0) spec.parallelism = suite_parallel;
    }
  } catch (const IoFailure& e) {
    err << "mfbo: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "mfbo: invalid configuration: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "mfbo: invalid configuration: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::out_of_range& e) {
    err << "mfbo: invalid configuration: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (*list) return cmd_list(out);
    if (*verify) return cmd_verify(grid, out);
    print_summary(execute(spec, out), out);
    return kExitOk;
  } catch (const std::exception& e) {
    err << "mfbo: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace mfbo::cli
