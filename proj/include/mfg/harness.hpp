#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mfg/diagnostics.hpp"
#include "mfg/instance_io.hpp"

namespace mfg {

struct ExperimentResult {
  std::filesystem::path trace_path;
  std::filesystem::path summary_path;
  IterateTrace trace;
  NESolution ne;
  double runtime_seconds = 0.0;
  // endpoint metrics used by the sweeps
  double final_sigma_mu = 0.0;
  double final_dist_d = 0.0;
  double avg_iterate_sigma_mu = 0.0;  // ||(1/T) sum L_t - L*||_H
  double avg_iterate_dist_d = 0.0;    // D((1/T) sum pi_t, pi*)
  double avg_iterate_dist_w = 0.0;
  double final_dist_d_ne = 0.0;  // D(pi_T, pi*)
  double final_dist_w_ne = 0.0;  // W(pi_T, pi*)
};

/// Solves the NE reference, executes the configured run (single-loop or
/// baseline), and writes `<label>_trace.csv` plus `<label>_summary.json`
/// into the output directory.
ExperimentResult run_experiment(const RunConfig& config);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::string metric;
  bool valid = false;  // needs at least 3 points
};

struct SweepPoint {
  double axis_value = 0.0;
  std::vector<ExperimentResult> replications;
  double mean_metric = 0.0;  // replication mean of the fitted metric
};

struct SweepResult {
  std::vector<SweepPoint> points;
  RateFit fit;
  std::filesystem::path summary_path;
};

/// Runs the axis grid, replications included, in parallel across points
/// (bounded by MFG_THREADS), then fits a log-log line through the
/// per-point mean errors.
SweepResult run_sweep(const SweepSpec& spec);

/// Least-squares line through (log x, log y); points with non-positive or
/// non-finite coordinates are dropped.
RateFit fit_log_log(const std::vector<double>& x, const std::vector<double>& y,
                    const std::string& metric);

/// Columnar view of a trace CSV (for plotting and recompute checks).
struct TraceTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  int column_index(const std::string& name) const;
};

TraceTable read_trace_csv(const std::filesystem::path& path);

/// Renders sigma_mu, sigma_pi and dist_D against t as log-log polylines in a
/// standalone SVG file.
void emit_plot(const TraceTable& trace, const std::filesystem::path& out_svg);

/// d1*d2 + d3 estimate for the instance; the generated defaults are tuned so
/// this is below 1.
double contraction_screen(const Instance& instance, double lambda, int n_pairs,
                          std::uint64_t seed);

}  // namespace mfg
