#include "mfbo/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mfbo/errors.hpp"

namespace mfbo {

namespace fs = std::filesystem;

double total_error(double eps_x, double eps_f) { return std::sqrt((eps_x * eps_x + eps_f * eps_f) / 2.0); }

MetricPoint compute_metrics(const FidelityFamily& family, const Eigen::VectorXd& location, double budget) {
  const OptimumRecord& opt = family.optimum();
  const Box& box = family.domain();
  MetricPoint m;
  m.budget = budget;
  m.eps_x = (box.to_unit(opt.x) - box.to_unit(location)).norm() / std::sqrt(static_cast<double>(family.dim()));
  const double f = family.evaluate_noise_free(family.num_levels(), location);
  // Incumbents may beat the rounded recorded optimum by a rounding error.
  const double gap = f - family.reference_value();
  if (gap > 0.0) {
    const double range = family.f_max() - family.reference_value();
    m.eps_f = range > 0.0 ? gap / range : 0.0;
  }
  m.eps_t = total_error(m.eps_x, m.eps_f);
  return m;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw EmptyInput("percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

AggregateCurve aggregate(const std::vector<TrialTrace>& traces, int grid_size, double budget_max) {
  if (traces.empty()) throw EmptyInput("aggregate: no traces");
  if (grid_size < 2) throw InvalidConfig("aggregate: grid needs at least two points");
  for (const auto& t : traces)
    if (t.records.empty()) throw EmptyInput("aggregate: trace without records");

  AggregateCurve c;
  std::vector<std::size_t> cursor(traces.size(), 0);
  std::vector<double> sample(traces.size());
  for (int k = 0; k < grid_size; ++k) {
    const double b = budget_max * static_cast<double>(k) / static_cast<double>(grid_size - 1);
    for (std::size_t t = 0; t < traces.size(); ++t) {
      const auto& rec = traces[t].records;
      std::size_t& i = cursor[t];
      while (i + 1 < rec.size() && rec[i + 1].budget <= b + 1e-12) ++i;
      sample[t] = rec[i].metrics.eps_t;
    }
    c.budget.push_back(b);
    c.median.push_back(percentile(sample, 0.5));
    c.p25.push_back(percentile(sample, 0.25));
    c.p75.push_back(percentile(sample, 0.75));
  }
  return c;
}

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, r.ptr);
}

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot open " + path.string() + " for writing");
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoFailure("write failed: " + path.string());
}

double parse_double(const std::string& s, const fs::path& path, int line) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end)
    throw ParseError(path.string() + ": bad number '" + s + "'", line);
  return v;
}

}  // namespace

void write_trial_csv(const fs::path& path, const TrialTrace& trace) {
  std::ofstream out = open_out(path);
  const Eigen::Index d = trace.records.empty() ? 0 : trace.records.front().x.size();
  out << "iteration,budget,level";
  for (Eigen::Index i = 0; i < d; ++i) out << ",x" << (i + 1);
  out << ",y,incumbent,eps_x,eps_f,eps_t\n";
  for (const auto& r : trace.records) {
    out << r.iteration << ',' << format_double(r.budget) << ',' << r.level;
    for (Eigen::Index i = 0; i < r.x.size(); ++i) out << ',' << format_double(r.x[i]);
    out << ',' << format_double(r.y) << ',' << format_double(r.incumbent) << ',' << format_double(r.metrics.eps_x)
        << ',' << format_double(r.metrics.eps_f) << ',' << format_double(r.metrics.eps_t) << '\n';
  }
  finish(out, path);
}

void write_aggregate_csv(const fs::path& path, const AggregateCurve& c) {
  std::ofstream out = open_out(path);
  out << "budget,median,p25,p75\n";
  for (std::size_t k = 0; k < c.budget.size(); ++k)
    out << format_double(c.budget[k]) << ',' << format_double(c.median[k]) << ',' << format_double(c.p25[k]) << ','
        << format_double(c.p75[k]) << '\n';
  finish(out, path);
}

AggregateCurve read_aggregate_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "budget,median,p25,p75")
    throw ParseError(path.string() + ": unexpected header", 1);
  AggregateCurve c;
  int n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 4) throw ParseError(path.string() + ": expected 4 columns", n);
    c.budget.push_back(parse_double(f[0], path, n));
    c.median.push_back(parse_double(f[1], path, n));
    c.p25.push_back(parse_double(f[2], path, n));
    c.p75.push_back(parse_double(f[3], path, n));
  }
  return c;
}

void write_plot_data(const fs::path& path, const AggregateCurve& c, const std::string& title) {
  std::ofstream out = open_out(path);
  out << "# " << title << "\n# budget median p25 p75\n";
  for (std::size_t k = 0; k < c.budget.size(); ++k)
    out << format_double(c.budget[k]) << ' ' << format_double(c.median[k]) << ' ' << format_double(c.p25[k]) << ' '
        << format_double(c.p75[k]) << '\n';
  finish(out, path);
}

std::string trial_file_name(int trial) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "trial_%02d.csv", trial);
  return buf;
}

void emit(const AggregateCurve& curve, const std::vector<TrialTrace>& traces, const fs::path& dir,
          const std::string& manifest_json) {
  if (traces.empty()) throw EmptyInput("emit: no traces");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoFailure("cannot create " + dir.string() + ": " + ec.message());
  for (const auto& t : traces) write_trial_csv(dir / trial_file_name(t.trial), t);
  write_aggregate_csv(dir / "aggregate.csv", curve);
  write_plot_data(dir / "plot.dat", curve, traces.front().benchmark + " " + traces.front().acquisition);
  std::ofstream out = open_out(dir / "manifest.json");
  out << manifest_json << '\n';
  finish(out, dir / "manifest.json");
}

}  // namespace mfbo
