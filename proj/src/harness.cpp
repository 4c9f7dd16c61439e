#include "mfg/harness.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

namespace mfg {

using nlohmann::json;

namespace {

Instance resolve_instance(const RunConfig& config) {
  if (!config.instance_path.empty())
    return load_instance(config.instance_path);
  return generate_instance(*config.generator, config.kernel);
}

int thread_budget() {
  if (const char* env = std::getenv("MFG_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

json summary_json(const RunConfig& config, const ExperimentResult& result,
                  const Schedule& schedule) {
  const IterateRecord& last = result.trace.records.back();
  json j = {
      {"schema", "mfg-summary-v1"},
      {"config", json::parse(run_config_to_json(config))},
      {"schedule",
       {{"alpha", schedule.alpha},
        {"beta", schedule.beta},
        {"eta", schedule.eta},
        {"lambda", schedule.lambda},
        {"T", schedule.T},
        {"mode", schedule.mode == Mode::D ? "D" : "W"}}},
      {"final",
       {{"sigma_mu", last.sigma_mu},
        {"sigma_pi", last.sigma_pi},
        {"dist_D", last.dist_d},
        {"dist_W", last.dist_w},
        {"J", last.j}}},
      {"averaged_iterates",
       {{"sigma_mu", result.avg_iterate_sigma_mu},
        {"dist_D", result.avg_iterate_dist_d},
        {"dist_W", result.avg_iterate_dist_w}}},
      {"final_vs_ne",
       {{"dist_D", result.final_dist_d_ne},
        {"dist_W", result.final_dist_w_ne}}},
      {"ne",
       {{"lambda_residual", result.ne.lambda_residual},
        {"rationality_gap", result.ne.rationality_gap}}},
      {"runtime_seconds", result.runtime_seconds}};
  return j;
}

}  // namespace

ExperimentResult run_experiment(const RunConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  const Instance instance = resolve_instance(config);
  const GramMatrix gm = gram(instance.kernel, instance.model.states());

  ExperimentResult result{
      {}, {}, IterateTrace{}, compute_ne(instance.model, gm, config.lambda,
                                         config.ne_tol)};

  if (config.baseline) {
    result.trace = run_fixed_point_baseline(instance.model, gm, config.lambda,
                                            config.T, config.inner_tol,
                                            instance.model.nu0(), &result.ne);
    // Report under the schedule the single-loop method would have used.
  } else {
    const Schedule schedule =
        Schedule::make(config.lambda, config.T, config.mode, config.c_alpha,
                       config.c_beta, config.c_eta);
    Evaluator evaluator(config.evaluator);
    result.trace = run(instance.model, gm, schedule, evaluator,
                       Policy::uniform(instance.model.states().size(),
                                       instance.model.actions().size()),
                       instance.model.nu0(), &result.ne, config.diagnostics);
  }

  result.final_sigma_mu = result.trace.records.back().sigma_mu;
  result.final_dist_d = result.trace.records.back().dist_d;
  result.avg_iterate_sigma_mu = result.trace.final_avg_sigma_mu;
  result.avg_iterate_dist_d = result.trace.final_avg_dist_d;
  result.avg_iterate_dist_w = result.trace.final_avg_dist_w;
  if (result.trace.records.back().policy.size() > 0) {
    result.final_dist_d_ne =
        distance_d(result.trace.records.back().policy,
                   result.ne.policy.probs(), result.ne.visitation_star);
    result.final_dist_w_ne =
        distance_w(result.trace.records.back().policy,
                   result.ne.policy.probs(), result.ne.visitation_star);
  }
  result.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();

  std::filesystem::create_directories(config.output_dir);
  result.trace_path = std::filesystem::path(config.output_dir) /
                      (config.label + "_trace.csv");
  result.summary_path = std::filesystem::path(config.output_dir) /
                        (config.label + "_summary.json");
  {
    std::ofstream out(result.trace_path);
    if (!out) throw BadParams("cannot write " + result.trace_path.string());
    result.trace.write_csv(out);
  }
  {
    // baseline runs have no step sizes; report a zeroed schedule
    const Schedule schedule =
        config.baseline
            ? Schedule::explicit_constants(config.lambda, config.T, 0.0, 0.0,
                                           0.0, config.mode)
            : Schedule::make(config.lambda, config.T, config.mode,
                             config.c_alpha, config.c_beta, config.c_eta);
    std::ofstream out(result.summary_path);
    if (!out) throw BadParams("cannot write " + result.summary_path.string());
    out << summary_json(config, result, schedule).dump(2) << '\n';
  }
  return result;
}

RateFit fit_log_log(const std::vector<double>& x, const std::vector<double>& y,
                    const std::string& metric) {
  RateFit fit;
  fit.metric = metric;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
    if (x[i] > 0.0 && y[i] > 0.0 && std::isfinite(x[i]) && std::isfinite(y[i])) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  }
  const std::size_t k = lx.size();
  if (k < 3) return fit;  // refuses: needs at least 3 usable points

  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= k;
  my /= k;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (sxx == 0.0) return fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  fit.valid = true;
  return fit;
}

SweepResult run_sweep(const SweepSpec& spec) {
  struct Task {
    std::size_t point;
    int replication;
    RunConfig config;
  };
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < spec.values.size(); ++i) {
    const double v = spec.values[i];
    for (int rep = 0; rep < spec.replications; ++rep) {
      RunConfig c = spec.base;
      c.seed = derive_seed(spec.base.seed, i * 1000 + rep);
      if (c.evaluator.kind != EvaluatorConfig::Kind::Exact)
        c.evaluator.seed = c.seed;
      if (spec.axis == "T") {
        c.T = static_cast<int>(v);
      } else if (spec.axis == "epsilon") {
        if (c.evaluator.kind != EvaluatorConfig::Kind::Noisy)
          throw BadParams("sweep: epsilon axis needs the noisy evaluator");
        c.evaluator.epsilon = v;
      } else if (spec.axis == "lambda") {
        c.lambda = v;
      } else {
        if (c.instance_path.empty() && !c.generator)
          throw BadParams("sweep: coupling axis needs a generator config");
        if (!c.generator)
          throw BadParams(
              "sweep: coupling axis cannot rewrite a fixed instance file");
        c.generator->coupling = v;
      }
      c.label = spec.base.label + "_" + spec.axis + std::to_string(i) + "_r" +
                std::to_string(rep);
      tasks.push_back({i, rep, std::move(c)});
    }
  }

  std::vector<std::optional<ExperimentResult>> outcomes(tasks.size());
  std::vector<std::string> failures(tasks.size());
  std::atomic<std::size_t> cursor{0};
  const int workers =
      std::min<int>(thread_budget(), static_cast<int>(tasks.size()));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (true) {
        const std::size_t i = cursor.fetch_add(1);
        if (i >= tasks.size()) return;
        try {
          outcomes[i] = run_experiment(tasks[i].config);
        } catch (const std::exception& e) {
          failures[i] = e.what();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (std::size_t i = 0; i < tasks.size(); ++i)
    if (!failures[i].empty())
      throw Error("sweep point " + tasks[i].config.label + " failed: " +
                  failures[i]);

  SweepResult result;
  result.points.resize(spec.values.size());
  for (std::size_t i = 0; i < spec.values.size(); ++i)
    result.points[i].axis_value = spec.values[i];
  for (std::size_t i = 0; i < tasks.size(); ++i)
    result.points[tasks[i].point].replications.push_back(
        std::move(*outcomes[i]));

  // Convergence error per axis. The T/lambda/coupling axes use the averaged
  // iterates; the epsilon axis fits the final policy distance, the quantity
  // the sqrt(epsilon) term governs.
  const bool eps_axis = spec.axis == "epsilon";
  std::vector<double> xs, ys;
  for (SweepPoint& point : result.points) {
    double acc = 0.0;
    for (const ExperimentResult& r : point.replications)
      acc += eps_axis ? r.final_dist_d_ne
                      : r.avg_iterate_dist_d + r.avg_iterate_sigma_mu;
    point.mean_metric = acc / point.replications.size();
    xs.push_back(point.axis_value);
    ys.push_back(point.mean_metric);
  }
  result.fit = fit_log_log(
      xs, ys,
      (eps_axis ? std::string("final_dist_D_vs_") :
                  std::string("avg_iterate_error_vs_")) + spec.axis);

  json points = json::array();
  for (const SweepPoint& point : result.points) {
    json reps = json::array();
    for (const ExperimentResult& r : point.replications)
      reps.push_back({{"trace", r.trace_path.string()},
                      {"summary", r.summary_path.string()},
                      {"avg_iterate_dist_D", r.avg_iterate_dist_d},
                      {"avg_iterate_sigma_mu", r.avg_iterate_sigma_mu},
                      {"final_sigma_mu", r.final_sigma_mu},
                      {"final_dist_D", r.final_dist_d_ne}});
    points.push_back({{"value", point.axis_value},
                      {"mean_metric", point.mean_metric},
                      {"replications", std::move(reps)}});
  }
  json j = {{"schema", "mfg-sweep-v1"},
            {"axis", spec.axis},
            {"points", std::move(points)},
            {"fit",
             {{"valid", result.fit.valid},
              {"slope", result.fit.slope},
              {"intercept", result.fit.intercept},
              {"r_squared", result.fit.r_squared},
              {"metric", result.fit.metric}}}};
  std::filesystem::create_directories(spec.base.output_dir);
  result.summary_path = std::filesystem::path(spec.base.output_dir) /
                        (spec.base.label + "_sweep.json");
  std::ofstream out(result.summary_path);
  if (!out) throw BadParams("cannot write " + result.summary_path.string());
  out << j.dump(2) << '\n';
  return result;
}

int TraceTable::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return static_cast<int>(i);
  throw BadTrace("trace has no column \"" + name + "\"");
}

TraceTable read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw BadTrace("cannot open trace " + path.string());
  TraceTable table;
  std::string line;
  if (!std::getline(in, line)) throw BadTrace("empty trace file");
  std::stringstream header(line);
  std::string cell;
  while (std::getline(header, cell, ',')) table.columns.push_back(cell);
  if (table.columns.empty()) throw BadTrace("trace header has no columns");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::vector<double> values;
    while (std::getline(row, cell, ',')) {
      try {
        values.push_back(cell == "nan" ? nan_value() : std::stod(cell));
      } catch (const std::exception&) {
        throw BadTrace("non-numeric cell \"" + cell + "\"");
      }
    }
    if (values.size() != table.columns.size())
      throw BadTrace("ragged trace row");
    table.rows.push_back(std::move(values));
  }
  if (table.rows.empty()) throw BadTrace("trace has no data rows");
  return table;
}

void emit_plot(const TraceTable& trace, const std::filesystem::path& out_svg) {
  const int t_col = trace.column_index("t");
  const char* metrics[3] = {"sigma_mu", "sigma_pi", "dist_D"};
  const char* colors[3] = {"#1f77b4", "#d62728", "#2ca02c"};

  struct Series {
    std::vector<std::pair<double, double>> pts;  // (log10 t, log10 v)
  };
  Series series[3];
  double x_min = infinity(), x_max = -infinity();
  double y_min = infinity(), y_max = -infinity();
  bool any = false;
  for (int k = 0; k < 3; ++k) {
    const int col = trace.column_index(metrics[k]);
    for (const auto& row : trace.rows) {
      const double t = row[t_col];
      const double v = row[col];
      if (!(t > 0.0) || !(v > 0.0) || !std::isfinite(v)) continue;
      const double lx = std::log10(t);
      const double ly = std::log10(v);
      series[k].pts.emplace_back(lx, ly);
      x_min = std::min(x_min, lx);
      x_max = std::max(x_max, lx);
      y_min = std::min(y_min, ly);
      y_max = std::max(y_max, ly);
      any = true;
    }
  }
  if (!any) throw BadTrace("no positive finite samples to plot");
  if (x_max - x_min < 1e-12) x_max = x_min + 1.0;
  if (y_max - y_min < 1e-12) y_max = y_min + 1.0;

  const double width = 640, height = 420;
  const double ml = 70, mr = 20, mt = 20, mb = 50;
  const auto sx = [&](double lx) {
    return ml + (lx - x_min) / (x_max - x_min) * (width - ml - mr);
  };
  const auto sy = [&](double ly) {
    return height - mb - (ly - y_min) / (y_max - y_min) * (height - mt - mb);
  };

  std::ofstream out(out_svg);
  if (!out) throw BadParams("cannot write " + out_svg.string());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << ' '
      << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\""
      << width - mr << "\" y2=\"" << height - mb
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml
      << "\" y2=\"" << height - mb << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << (ml + width - mr) / 2 << "\" y=\"" << height - 12
      << "\" text-anchor=\"middle\" font-size=\"13\">log10 t</text>\n";
  out << "<text x=\"16\" y=\"" << (mt + height - mb) / 2
      << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 "
         "16 "
      << (mt + height - mb) / 2 << ")\">log10 metric</text>\n";

  for (int k = 0; k < 3; ++k) {
    if (series[k].pts.empty()) continue;
    out << "<polyline fill=\"none\" stroke=\"" << colors[k]
        << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& [lx, ly] : series[k].pts)
      out << format_double(sx(lx)) << ',' << format_double(sy(ly)) << ' ';
    out << "\"/>\n";
    out << "<text x=\"" << width - mr - 120 << "\" y=\"" << mt + 18 + 18 * k
        << "\" font-size=\"12\" fill=\"" << colors[k] << "\">" << metrics[k]
        << "</text>\n";
  }
  out << "</svg>\n";
}

double contraction_screen(const Instance& instance, double lambda, int n_pairs,
                          std::uint64_t seed) {
  const GramMatrix gm = gram(instance.kernel, instance.model.states());
  const AssumptionEstimates est =
      estimate_lipschitz(instance.model, gm, lambda, n_pairs, seed);
  return est.d1 * est.d2 + est.d3;
}

}  // namespace mfg
