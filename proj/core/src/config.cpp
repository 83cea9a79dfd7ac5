#include "mfbo/config.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mfbo/errors.hpp"

namespace mfbo {

const char* library_version() noexcept { return MFBO_VERSION; }

namespace {

int line_of(const YAML::Node& n) { return n.Mark().line >= 0 ? n.Mark().line + 1 : 0; }

template <typename T>
T scalar(const YAML::Node& n, const std::string& key) {
  if (!n.IsScalar()) throw ParseError("'" + key + "' must be a scalar", line_of(n));
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    throw ParseError("'" + key + "' has an invalid value '" + n.Scalar() + "'", line_of(n));
  }
}

template <typename T>
std::vector<T> sequence(const YAML::Node& n, const std::string& key) {
  if (!n.IsSequence()) throw ParseError("'" + key + "' must be a list", line_of(n));
  std::vector<T> out;
  for (const auto& item : n) out.push_back(scalar<T>(item, key));
  return out;
}

const std::set<std::string> kExperimentKeys = {
    "benchmark",   "acquisition",      "levels",          "initial_sizes",     "budget_max",
    "trials",      "seed",             "costs",           "mes_samples",       "mes_grid",
    "charge_initial_design", "refit_growth", "fit_restarts", "refit_restarts", "candidates_per_dim",
    "polish_starts", "polish_iterations"};

// Keys written into manifests for the record; ignored on input.
const std::set<std::string> kInformationalKeys = {"library_version", "format", "trial_seeds"};

const std::set<std::string> kSuiteKeys = {"output", "parallelism", "experiments", "defaults"};

void apply_keys(ExperimentConfig& c, const YAML::Node& map, bool skip_suite_keys = false) {
  if (!map.IsMap()) throw ParseError("experiment must be a mapping", line_of(map));
  for (const auto& kv : map) {
    const std::string key = kv.first.as<std::string>();
    if (skip_suite_keys && kSuiteKeys.count(key)) continue;
    const YAML::Node& v = kv.second;
    if (key == "benchmark") c.benchmark = scalar<std::string>(v, key);
    else if (key == "acquisition") c.acquisition = parse_acquisition(scalar<std::string>(v, key));
    else if (key == "levels") c.levels = sequence<int>(v, key);
    else if (key == "initial_sizes") c.initial_sizes = sequence<int>(v, key);
    else if (key == "budget_max") c.budget_max = scalar<double>(v, key);
    else if (key == "trials") c.trials = scalar<int>(v, key);
    else if (key == "seed") c.seed = scalar<std::uint64_t>(v, key);
    else if (key == "costs") c.costs = sequence<double>(v, key);
    else if (key == "mes_samples") c.mes.num_min_samples = scalar<int>(v, key);
    else if (key == "mes_grid") c.mes.grid_size = scalar<int>(v, key);
    else if (key == "charge_initial_design") c.charge_initial_design = scalar<bool>(v, key);
    else if (key == "refit_growth") c.refit_growth = scalar<double>(v, key);
    else if (key == "fit_restarts") c.fit_restarts = scalar<int>(v, key);
    else if (key == "refit_restarts") c.refit_restarts = scalar<int>(v, key);
    else if (key == "candidates_per_dim") c.maximizer.candidates_per_dim = scalar<int>(v, key);
    else if (key == "polish_starts") c.maximizer.polish_starts = scalar<int>(v, key);
    else if (key == "polish_iterations") c.maximizer.polish_iterations = scalar<int>(v, key);
    else if (!kInformationalKeys.count(key)) throw ParseError("unknown key '" + key + "'", line_of(kv.first));
  }
}

ExperimentConfig resolve_at(ExperimentConfig c, const YAML::Node& where) {
  if (c.benchmark.empty()) throw ParseError("experiment has no benchmark", line_of(where));
  try {
    return resolve(c);
  } catch (const InvalidConfig& e) {
    throw InvalidConfig(std::string(e.what()) + " (line " + std::to_string(line_of(where)) + ")");
  }
}

}  // namespace

SuiteSpec parse_config_text(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ParseError(e.msg, e.mark.line + 1);
  }
  if (!root.IsMap()) throw ParseError("config must be a mapping", line_of(root));

  SuiteSpec spec;
  YAML::Node experiments, defaults;
  bool has_experiments = false, has_defaults = false, single = false;
  for (const auto& kv : root) {
    const std::string key = kv.first.as<std::string>();
    if (key == "output") {
      spec.output_dir = scalar<std::string>(kv.second, key);
    } else if (key == "parallelism") {
      spec.parallelism = scalar<int>(kv.second, key);
    } else if (key == "experiments") {
      experiments = kv.second;
      has_experiments = true;
    } else if (key == "defaults") {
      defaults = kv.second;
      has_defaults = true;
    } else if (kExperimentKeys.count(key)) {
      single = true;
    } else if (!kInformationalKeys.count(key)) {
      throw ParseError("unknown key '" + key + "'", line_of(kv.first));
    }
  }
  if (spec.parallelism < 1) throw ParseError("parallelism must be positive", line_of(root["parallelism"]));

  ExperimentConfig base;
  if (has_defaults) apply_keys(base, defaults);

  if (has_experiments) {
    if (single) throw ParseError("experiment keys at top level next to 'experiments'", line_of(root));
    if (!experiments.IsSequence()) throw ParseError("'experiments' must be a list", line_of(experiments));
    for (const auto& e : experiments) {
      ExperimentConfig c = base;
      apply_keys(c, e);
      spec.experiments.push_back(resolve_at(c, e));
    }
  } else {
    ExperimentConfig c = base;
    apply_keys(c, root, true);
    spec.experiments.push_back(resolve_at(c, root));
  }
  if (spec.experiments.empty()) throw ParseError("no experiments", line_of(root));

  std::set<std::string> seen;
  for (const auto& c : spec.experiments)
    if (!seen.insert(experiment_id(c)).second)
      throw InvalidConfig("duplicate experiment " + experiment_id(c));
  return spec;
}

SuiteSpec parse_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoFailure("cannot open " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string experiment_id(const ExperimentConfig& cfg) {
  std::string id = cfg.benchmark + "_" + to_string(cfg.acquisition) + "_l";
  for (std::size_t i = 0; i < cfg.levels.size(); ++i) id += (i ? "-" : "") + std::to_string(cfg.levels[i]);
  return id;
}

std::string manifest_json(const ExperimentConfig& c) {
  nlohmann::ordered_json e;
  e["benchmark"] = c.benchmark;
  e["acquisition"] = to_string(c.acquisition);
  e["levels"] = c.levels;
  e["initial_sizes"] = c.initial_sizes;
  e["budget_max"] = c.budget_max;
  e["trials"] = c.trials;
  e["seed"] = c.seed;
  e["costs"] = c.costs;
  e["mes_samples"] = c.mes.num_min_samples;
  e["mes_grid"] = c.mes.grid_size;
  e["charge_initial_design"] = c.charge_initial_design;
  e["refit_growth"] = c.refit_growth;
  e["fit_restarts"] = c.fit_restarts;
  e["refit_restarts"] = c.refit_restarts;
  e["candidates_per_dim"] = c.maximizer.candidates_per_dim;
  e["polish_starts"] = c.maximizer.polish_starts;
  e["polish_iterations"] = c.maximizer.polish_iterations;
  std::vector<std::uint64_t> seeds;
  for (int t = 0; t < c.trials; ++t) seeds.push_back(trial_stream(c.seed, t).seed());
  e["trial_seeds"] = seeds;

  nlohmann::ordered_json m;
  m["format"] = "mfbo-manifest-1";
  m["library_version"] = library_version();
  m["experiments"] = nlohmann::ordered_json::array({e});
  return m.dump(2);
}

}  // namespace mfbo
