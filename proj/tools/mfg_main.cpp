// Command-line front end: generate instances, run the single-loop and
// baseline solvers, sweep schedules, check the lemma inequalities, and plot
// traces. Exit codes: 0 ok, 2 config error, 3 numerical failure,
// 4 no contraction.

#include "CLI11.hpp"
#include "json.hpp"

#include <fstream>
#include <iostream>

#include "mfg/diagnostics.hpp"
#include "mfg/harness.hpp"
#include "mfg/instance_io.hpp"

namespace {

using nlohmann::json;

int run_command(const std::string& config_path, const std::string& output,
                bool baseline) {
  mfg::RunConfig config = mfg::load_run_config(config_path);
  if (!output.empty()) config.output_dir = output;
  config.baseline = baseline;
  const mfg::ExperimentResult result = mfg::run_experiment(config);
  std::cout << "trace:   " << result.trace_path.string() << '\n'
            << "summary: " << result.summary_path.string() << '\n'
            << "final sigma_mu = " << mfg::format_double(result.final_sigma_mu)
            << ", avg-iterate sigma_mu = "
            << mfg::format_double(result.avg_iterate_sigma_mu)
            << ", avg-iterate D = "
            << mfg::format_double(result.avg_iterate_dist_d) << '\n';
  return 0;
}

int sweep_command(const std::string& spec_path, const std::string& output) {
  mfg::SweepSpec spec = mfg::load_sweep_spec(spec_path);
  if (!output.empty()) spec.base.output_dir = output;
  const mfg::SweepResult result = mfg::run_sweep(spec);
  std::cout << "sweep summary: " << result.summary_path.string() << '\n';
  if (result.fit.valid)
    std::cout << "log-log slope = " << mfg::format_double(result.fit.slope)
              << " (R^2 = " << mfg::format_double(result.fit.r_squared)
              << ")\n";
  else
    std::cout << "rate fit skipped: needs at least 3 usable points\n";
  return 0;
}

int gen_command(const mfg::GeneratorSpec& spec, const std::string& kernel_kind,
                double bandwidth, const std::string& out_path) {
  std::optional<mfg::Kernel> kernel;
  if (kernel_kind == "gaussian")
    kernel = mfg::Kernel::gaussian(bandwidth);
  else if (kernel_kind == "laplace")
    kernel = mfg::Kernel::laplace(bandwidth);
  else if (kernel_kind == "identity")
    kernel = mfg::Kernel::identity();
  else if (!kernel_kind.empty())
    throw mfg::BadParams("unknown kernel kind \"" + kernel_kind + "\"");
  const mfg::Instance instance = mfg::generate_instance(spec, kernel);
  mfg::save_instance(instance, out_path);
  const double screen = mfg::contraction_screen(instance, 0.5, 50, 1);
  std::cout << "wrote " << out_path
            << " (contraction screen d1*d2+d3 ~ " << mfg::format_double(screen)
            << " at lambda=0.5)\n";
  return 0;
}

int check_command(const std::string& instance_path, const std::string& lemmas,
                  int trials, std::uint64_t seed, double lambda,
                  const std::string& out_path) {
  const mfg::Instance instance = mfg::load_instance(instance_path);
  const mfg::GramMatrix gm =
      mfg::gram(instance.kernel, instance.model.states());
  const int m = instance.model.actions().size();
  std::mt19937_64 rng(seed);
  json reports = json::array();

  const auto wants = [&](const std::string& name) {
    return lemmas == "all" || lemmas == name;
  };

  if (wants("mix_diff_bound")) {
    int violations = 0;
    double worst = mfg::infinity();
    json witness;
    for (int i = 0; i < trials; ++i) {
      const mfg::Vector p_star = mfg::random_simplex(rng, m);
      const mfg::Vector p = mfg::random_simplex(rng, m);
      std::uniform_real_distribution<double> eta_dist(1e-4, 0.5);
      const double eta = eta_dist(rng);
      const auto rep = mfg::check_mix_diff_bound(p_star, p, eta);
      const double slack =
          std::min(rep.bound1 - rep.lhs1, rep.bound2 - rep.lhs2);
      if (slack < worst) {
        worst = slack;
        witness = {{"trial", i}, {"eta", eta}};
      }
      if (!rep.pass) ++violations;
    }
    reports.push_back({{"lemma", "mix_diff_bound"},
                       {"trials", trials},
                       {"violations", violations},
                       {"worst_slack", worst},
                       {"witnesses", witness}});
  }

  if (wants("mix_kl_lipschitz")) {
    int violations = 0;
    for (int i = 0; i < trials; ++i) {
      const double a1 = 0.5 / m, a2 = 0.3 / m;
      const auto floored = [&](double floor) {
        mfg::Vector v = mfg::random_simplex(rng, m);
        v = (1.0 - floor * m) * v + mfg::Vector::Constant(m, floor);
        return v;
      };
      const mfg::Vector x = floored(a1);
      const mfg::Vector y = floored(a1);
      const mfg::Vector z = floored(a2);
      if (!mfg::check_mix_kl_lipschitz(x, y, z, a1, a2)) ++violations;
    }
    reports.push_back({{"lemma", "mix_kl_lipschitz"},
                       {"trials", trials},
                       {"violations", violations},
                       {"worst_slack", nullptr},
                       {"witnesses", json::array()}});
  }

  if (wants("one_step_md")) {
    int violations = 0;
    for (int i = 0; i < trials; ++i) {
      const mfg::Vector p_star = mfg::random_simplex(rng, m);
      const mfg::Vector p = mfg::random_simplex(rng, m);
      mfg::Vector g(m);
      std::uniform_real_distribution<double> g_dist(-5.0, 5.0);
      for (int a = 0; a < m; ++a) g(a) = g_dist(rng);
      std::uniform_real_distribution<double> a_dist(1e-3, 1.0);
      if (!mfg::check_one_step_md(p_star, p, g, a_dist(rng))) ++violations;
    }
    reports.push_back({{"lemma", "one_step_md"},
                       {"trials", trials},
                       {"violations", violations},
                       {"worst_slack", nullptr},
                       {"witnesses", json::array()}});
  }

  if (wants("performance_difference")) {
    const int n = instance.model.states().size();
    int violations = 0;
    double worst = 0.0;
    const int pd_trials = std::min(trials, 200);
    for (int i = 0; i < pd_trials; ++i) {
      const mfg::Distribution L(mfg::random_simplex(rng, n));
      const mfg::Vector mu = gm.matrix() * L.weights();
      const mfg::InstantiatedMDP mdp =
          mfg::instantiate(instance.model, L, mu, lambda);
      mfg::Matrix a(n, m), b(n, m);
      for (int s = 0; s < n; ++s) {
        a.row(s) = mfg::random_simplex(rng, m).transpose();
        b.row(s) = mfg::random_simplex(rng, m).transpose();
      }
      const double residual = mfg::performance_difference_residual(
          mdp, mfg::Policy(a), mfg::Policy(b));
      worst = std::max(worst, residual);
      if (residual > 1e-9) ++violations;
    }
    reports.push_back({{"lemma", "performance_difference"},
                       {"trials", pd_trials},
                       {"violations", violations},
                       {"worst_slack", worst},
                       {"witnesses", json::array()}});
  }

  if (wants("lipz_lambda")) {
    const auto est = mfg::estimate_lipschitz(instance.model, gm, lambda,
                                             std::min(trials, 200), seed);
    const double composite = mfg::estimate_lambda_lipschitz(
        instance.model, gm, lambda, std::min(trials, 200), seed + 1);
    const double bound = est.d1 * est.d2 + est.d3;
    reports.push_back({{"lemma", "lipz_lambda"},
                       {"trials", std::min(trials, 200)},
                       {"violations", composite <= bound + 0.05 ? 0 : 1},
                       {"worst_slack", bound + 0.05 - composite},
                       {"witnesses",
                        {{"d1", est.d1},
                         {"d2", est.d2},
                         {"d3", est.d3},
                         {"composite", composite}}}});
  }

  const json out = {{"schema", "mfg-check-v1"}, {"reports", reports}};
  if (out_path.empty()) {
    std::cout << out.dump(2) << '\n';
  } else {
    std::ofstream f(out_path);
    if (!f) throw mfg::BadParams("cannot write " + out_path);
    f << out.dump(2) << '\n';
    std::cout << "wrote " << out_path << '\n';
  }
  for (const auto& rep : reports)
    if (rep.at("violations").get<int>() > 0) return 3;
  return 0;
}

int plot_command(const std::string& trace_path, const std::string& out_path) {
  const mfg::TraceTable table = mfg::read_trace_csv(trace_path);
  mfg::emit_plot(table, out_path);
  std::cout << "wrote " << out_path << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entropy-regularized mean-field game solver"};
  app.require_subcommand(1);

  std::string config_path, output, spec_path, instance_path, trace_path;
  std::string out_path = "instance.json";
  std::string lemmas = "all";
  std::string kernel_kind;
  double bandwidth = 2.0, lambda = 0.5;
  int trials = 10000;
  std::uint64_t seed = 0;

  mfg::GeneratorSpec gen_spec;
  CLI::App* run = app.add_subcommand("run", "single-loop fictitious play");
  run->add_option("config", config_path, "run config JSON")->required();
  run->add_option("-o,--output", output, "output directory");

  CLI::App* baseline =
      app.add_subcommand("baseline", "double-loop fixed-point baseline");
  baseline->add_option("config", config_path, "run config JSON")->required();
  baseline->add_option("-o,--output", output, "output directory");

  CLI::App* sweep = app.add_subcommand("sweep", "grid of runs plus rate fit");
  sweep->add_option("spec", spec_path, "sweep spec JSON")->required();
  sweep->add_option("-o,--output", output, "output directory");

  CLI::App* check = app.add_subcommand("check", "lemma checkers on an instance");
  check->add_option("instance", instance_path, "instance JSON")->required();
  check->add_option("--lemmas", lemmas, "all or one lemma name");
  check->add_option("--trials", trials, "random trials per lemma");
  check->add_option("--seed", seed, "RNG seed");
  check->add_option("--lambda", lambda, "regularization level");
  check->add_option("-o,--output", out_path, "report path (stdout if empty)")
      ->default_val("");

  CLI::App* gen = app.add_subcommand("gen", "write a problem instance");
  gen->add_option("kind", gen_spec.kind, "crowding|random_contractive|torus_nav")
      ->required();
  gen->add_option("--n", gen_spec.n, "states (or side length)");
  gen->add_option("--dims", gen_spec.dims, "1 or 2");
  gen->add_option("--m", gen_spec.m, "actions (random_contractive)");
  gen->add_option("--gamma", gen_spec.gamma, "discount");
  gen->add_option("--r-max", gen_spec.r_max, "reward bound");
  gen->add_option("--coupling", gen_spec.coupling, "congestion strength");
  gen->add_option("--slip", gen_spec.slip, "move noise");
  gen->add_option("--seed", gen_spec.seed, "generator seed");
  gen->add_option("--kernel", kernel_kind, "identity|gaussian|laplace");
  gen->add_option("--bandwidth", bandwidth, "kernel bandwidth/scale");
  gen->add_option("-o,--output", out_path, "instance path");

  CLI::App* plot = app.add_subcommand("plot", "render a trace CSV as SVG");
  plot->add_option("trace", trace_path, "trace CSV")->required();
  plot->add_option("-o,--output", out_path, "SVG path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return run_command(config_path, output, false);
    if (baseline->parsed()) return run_command(config_path, output, true);
    if (sweep->parsed()) return sweep_command(spec_path, output);
    if (check->parsed())
      return check_command(instance_path, lemmas, trials, seed, lambda,
                           out_path);
    if (gen->parsed())
      return gen_command(gen_spec, kernel_kind, bandwidth, out_path);
    if (plot->parsed()) return plot_command(trace_path, out_path);
  } catch (const mfg::NoContraction& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const mfg::NumericalFailure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const mfg::SolveFailure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const mfg::ConvergenceFailure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const mfg::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
