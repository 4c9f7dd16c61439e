#include "mfg/fictitious_play.hpp"

#include <chrono>
#include <cmath>
#include <deque>
#include <ostream>

#include "mfg/diagnostics.hpp"

namespace mfg {

namespace {

constexpr double kInnerDiagnosticsTol = 1e-10;

double pow_of_t(int T, double exponent) {
  return std::pow(static_cast<double>(T), exponent);
}

void validate_schedule(const Schedule& s, std::optional<double> d_bar) {
  if (s.T < 1) throw BadParams("Schedule: T < 1");
  if (!(s.lambda > 0.0)) throw BadParams("Schedule: lambda <= 0");
  if (s.alpha < 0.0 || s.beta < 0.0 || s.eta < 0.0)
    throw BadParams("Schedule: negative step size");
  if (s.alpha * s.lambda >= 1.0)
    throw StepTooLarge("Schedule: alpha * lambda = " +
                       format_double(s.alpha * s.lambda) + " >= 1");
  if (s.beta > 1.0) throw BadParams("Schedule: beta > 1");
  if (s.eta > 0.5) throw BadParams("Schedule: eta > 1/2");
  const double db = d_bar.value_or(1.0);
  if (s.beta * db >= 1.0 && s.beta > 0.0)
    throw BadParams("Schedule: beta * d_bar = " + format_double(s.beta * db) +
                    " >= 1");
}

struct ElapsedClock {
  std::chrono::steady_clock::time_point start =
      std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start)
        .count();
  }
};

}  // namespace

Schedule Schedule::make(double lambda, int T, Mode mode,
                        std::optional<double> c_alpha,
                        std::optional<double> c_beta,
                        std::optional<double> c_eta,
                        std::optional<double> d_bar) {
  if (T < 1) throw BadParams("Schedule: T < 1");
  if (!(lambda > 0.0)) throw BadParams("Schedule: lambda <= 0");
  const double alpha_exp = mode == Mode::D ? -2.0 / 5.0 : -4.0 / 9.0;
  const double beta_exp = mode == Mode::D ? -4.0 / 5.0 : -8.0 / 9.0;

  Schedule s;
  s.lambda = lambda;
  s.T = T;
  s.mode = mode;
  // Calibrated on the shipped instances; capped so alpha * lambda <= 1/2,
  // beta * d_bar < 1 and eta <= 1/2 at any T.
  const double beta_cap = mode == Mode::D ? 16.0 : 32.0;
  s.c_alpha =
      c_alpha.value_or(std::min(4.0, 0.5 / (lambda * pow_of_t(T, alpha_exp))));
  s.c_beta = c_beta.value_or(std::min(
      beta_cap, 0.9 / (d_bar.value_or(1.0) * pow_of_t(T, beta_exp))));
  s.c_eta = c_eta.value_or(std::min(1.0, 0.5 * T));
  if (!(s.c_alpha > 0.0 && s.c_beta > 0.0 && s.c_eta > 0.0))
    throw BadParams("Schedule: constants must be positive");
  s.alpha = s.c_alpha * pow_of_t(T, alpha_exp);
  s.beta = s.c_beta * pow_of_t(T, beta_exp);
  s.eta = s.c_eta / T;
  if (s.eta <= 0.0) throw BadParams("Schedule: eta must be positive");
  validate_schedule(s, d_bar);
  return s;
}

Schedule Schedule::explicit_constants(double lambda, int T, double alpha,
                                      double beta, double eta, Mode mode) {
  Schedule s;
  s.lambda = lambda;
  s.T = T;
  s.mode = mode;
  s.alpha = alpha;
  s.beta = beta;
  s.eta = eta;
  s.c_alpha = alpha;
  s.c_beta = beta;
  s.c_eta = eta * T;
  validate_schedule(s, std::nullopt);
  return s;
}

void IterateTrace::write_csv(std::ostream& out) const {
  out << "t,sigma_mu,sigma_pi,dist_D,dist_W,J,avg_sigma_mu,avg_dist_D\n";
  for (const IterateRecord& r : records) {
    out << r.t << ',' << format_double(r.sigma_mu) << ','
        << format_double(r.sigma_pi) << ',' << format_double(r.dist_d) << ','
        << format_double(r.dist_w) << ',' << format_double(r.j) << ','
        << format_double(r.avg_sigma_mu) << ',' << format_double(r.avg_dist_d)
        << '\n';
  }
}

Policy improvement_step(const Policy& pi, const QFunction& q_hat, double alpha,
                        double lambda, double eta) {
  if (alpha * lambda >= 1.0)
    throw StepTooLarge("improvement_step: alpha * lambda >= 1");
  if (alpha < 0.0) throw BadParams("improvement_step: alpha < 0");
  if (eta < 0.0 || eta > 0.5)
    throw BadParams("improvement_step: eta outside [0, 1/2]");
  if (!pi.strictly_positive())
    throw DegeneratePolicy("improvement_step: policy touches the boundary");
  if (q_hat.rows() != pi.num_states() || q_hat.cols() != pi.num_actions())
    throw BadParams("improvement_step: Q shape mismatch");

  const int n = pi.num_states();
  const int m = pi.num_actions();
  const double retain = 1.0 - alpha * lambda;
  const double floor = eta / m;
  Matrix out(n, m);
  for (int s = 0; s < n; ++s) {
    Eigen::RowVectorXd logits =
        retain * pi.probs().row(s).array().log().matrix() +
        alpha * q_hat.row(s);
    logits.array() -= log_sum_exp(logits);
    Eigen::RowVectorXd p_hat = logits.array().exp();
    p_hat /= p_hat.sum();
    out.row(s) = (1.0 - eta) * p_hat + Eigen::RowVectorXd::Constant(m, floor);
  }
  return Policy(std::move(out));
}

IterateTrace run(const MFGModel& model, const GramMatrix& gram,
                 const Schedule& schedule, Evaluator& evaluator,
                 const Policy& init_pi, const Distribution& init_L,
                 const NESolution* ne, DiagnosticsLevel level) {
  const int n = model.states().size();
  const int m = model.actions().size();
  if (init_pi.num_states() != n || init_pi.num_actions() != m ||
      init_L.size() != n)
    throw BadParams("run: initial iterate dimension mismatch");
  if (!init_pi.strictly_positive())
    throw DegeneratePolicy("run: initial policy must be strictly positive");

  const double alpha = schedule.alpha;
  const double beta = schedule.beta;
  const double eta = schedule.eta;
  const double lambda = schedule.lambda;
  const int T = schedule.T;
  const bool full = level == DiagnosticsLevel::Full;

  ElapsedClock clock;
  IterateTrace trace;
  trace.records.resize(T + 1);

  Distribution L_t = init_L;
  Policy pi_t = init_pi;
  Vector sum_L = Vector::Zero(n);
  Matrix sum_pi = Matrix::Zero(n, m);

  {
    IterateRecord& rec = trace.records[0];
    rec.t = 0;
    rec.mean_field = L_t.weights();
    rec.policy = pi_t.probs();
    rec.sigma_mu =
        ne ? rkhs_distance(gram, L_t, ne->mean_field) : nan_value();
    rec.sigma_pi = nan_value();
    rec.dist_d = nan_value();
    rec.dist_w = nan_value();
    rec.j = nan_value();
    rec.avg_sigma_mu = nan_value();
    rec.avg_dist_d = nan_value();
    rec.delta_mu = nan_value();
    rec.wall_time = clock.seconds();
  }

  for (int t = 0; t < T; ++t) {
    const Vector mu_t = gram.matrix() * L_t.weights();
    const InstantiatedMDP mdp = instantiate(model, L_t, mu_t, lambda);
    if (full) trace.records[t].j = expected_value(mdp, pi_t);

    const QFunction q_hat = evaluator.evaluate(mdp, pi_t);
    if (!q_hat.allFinite())
      throw NumericalFailure("run: evaluator produced non-finite Q");

    std::optional<SoftSolution> opt;  // Gamma1(mu_t) = pi*_{t+1}
    std::optional<Distribution> rho_t_star;
    if (full) {
      opt = soft_value_iteration(mdp, kInnerDiagnosticsTol);
      rho_t_star = visitation(mdp, opt->policy);
    }

    const Policy pi_next = improvement_step(pi_t, q_hat, alpha, lambda, eta);
    const Distribution L_plus = mean_field_step(mdp, pi_next, L_t);
    Vector next_w = (1.0 - beta) * L_t.weights() + beta * L_plus.weights();
    if (!next_w.allFinite())
      throw NumericalFailure("run: mean-field update produced NaN");
    const Distribution L_next(std::move(next_w), kSimplexTolArithmetic);

    sum_L += L_next.weights();
    sum_pi += pi_next.probs();
    const double count = t + 1;

    IterateRecord& rec = trace.records[t + 1];
    rec.t = t + 1;
    rec.mean_field = L_next.weights();
    rec.policy = pi_next.probs();
    rec.delta_mu = rkhs_distance(gram, L_next, L_t);
    rec.sigma_mu =
        ne ? rkhs_distance(gram, L_next, ne->mean_field) : nan_value();
    if (full) {
      double sig_pi = 0.0;
      for (int s = 0; s < n; ++s)
        sig_pi += (*rho_t_star)(s) * kl_divergence(opt->policy.probs().row(s),
                                                   pi_next.probs().row(s));
      rec.sigma_pi = sig_pi;
      rec.dist_d = ne ? distance_d(pi_next, opt->policy, ne->visitation_star)
                      : nan_value();
      rec.dist_w = ne ? distance_w(pi_next, opt->policy, ne->visitation_star)
                      : nan_value();
    } else {
      rec.sigma_pi = nan_value();
      rec.dist_d = nan_value();
      rec.dist_w = nan_value();
      rec.j = nan_value();
    }
    if (ne) {
      rec.avg_sigma_mu = rkhs_distance(gram, Vector(sum_L / count),
                                       ne->mean_field.weights());
      rec.avg_dist_d = distance_d(Matrix(sum_pi / count), ne->policy.probs(),
                                  ne->visitation_star);
    } else {
      rec.avg_sigma_mu = nan_value();
      rec.avg_dist_d = nan_value();
    }
    rec.wall_time = clock.seconds();

    pi_t = pi_next;
    L_t = L_next;
  }

  if (full) {
    const Vector mu_T = gram.matrix() * L_t.weights();
    const InstantiatedMDP mdp = instantiate(model, L_t, mu_T, lambda);
    trace.records[T].j = expected_value(mdp, pi_t);
  }

  trace.mean_field_avg = sum_L / T;
  trace.policy_avg = sum_pi / T;
  if (ne) {
    trace.final_avg_sigma_mu =
        rkhs_distance(gram, trace.mean_field_avg, ne->mean_field.weights());
    trace.final_avg_dist_d =
        distance_d(trace.policy_avg, ne->policy.probs(), ne->visitation_star);
    trace.final_avg_dist_w =
        distance_w(trace.policy_avg, ne->policy.probs(), ne->visitation_star);
  } else {
    trace.final_avg_sigma_mu = nan_value();
    trace.final_avg_dist_d = nan_value();
    trace.final_avg_dist_w = nan_value();
  }
  return trace;
}

IterateTrace run_fixed_point_baseline(const MFGModel& model,
                                      const GramMatrix& gram, double lambda,
                                      int T, double inner_tol,
                                      const Distribution& init_L,
                                      const NESolution* ne) {
  if (!(inner_tol > 0.0))
    throw BadParams("run_fixed_point_baseline: inner_tol <= 0");
  if (T < 1) throw BadParams("run_fixed_point_baseline: T < 1");
  const int n = model.states().size();

  ElapsedClock clock;
  IterateTrace trace;
  trace.records.resize(T + 1);
  Distribution L_t = init_L;

  {
    IterateRecord& rec = trace.records[0];
    rec.t = 0;
    rec.mean_field = L_t.weights();
    rec.policy = Matrix();
    rec.sigma_mu = ne ? rkhs_distance(gram, L_t, ne->mean_field) : nan_value();
    rec.sigma_pi = nan_value();
    rec.dist_d = nan_value();
    rec.dist_w = nan_value();
    rec.j = nan_value();
    rec.avg_sigma_mu = nan_value();
    rec.avg_dist_d = nan_value();
    rec.delta_mu = nan_value();
    rec.wall_time = clock.seconds();
  }

  Vector sum_L = Vector::Zero(n);
  Matrix sum_pi;
  int expansions = 0;
  for (int t = 0; t < T; ++t) {
    const Vector mu_t = gram.matrix() * L_t.weights();
    const InstantiatedMDP mdp = instantiate(model, L_t, mu_t, lambda);
    const SoftSolution sol = soft_value_iteration(mdp, inner_tol);
    const Distribution L_next = mean_field_step(mdp, sol.policy, L_t);

    sum_L += L_next.weights();
    if (sum_pi.size() == 0)
      sum_pi = sol.policy.probs();
    else
      sum_pi += sol.policy.probs();

    IterateRecord& rec = trace.records[t + 1];
    rec.t = t + 1;
    rec.mean_field = L_next.weights();
    rec.policy = sol.policy.probs();
    rec.delta_mu = rkhs_distance(gram, L_next, L_t);
    rec.sigma_mu =
        ne ? rkhs_distance(gram, L_next, ne->mean_field) : nan_value();
    rec.sigma_pi = nan_value();
    rec.dist_d = ne ? distance_d(sol.policy, ne->policy, ne->visitation_star)
                    : nan_value();
    rec.dist_w = ne ? distance_w(sol.policy, ne->policy, ne->visitation_star)
                    : nan_value();
    rec.j = expected_value(mdp, sol.policy);
    const double count = t + 1;
    rec.avg_sigma_mu = ne ? rkhs_distance(gram, Vector(sum_L / count),
                                          ne->mean_field.weights())
                          : nan_value();
    rec.avg_dist_d = ne ? distance_d(Matrix(sum_pi / count),
                                     ne->policy.probs(), ne->visitation_star)
                        : nan_value();
    rec.wall_time = clock.seconds();

    // Oscillation screen: count outer steps whose movement stopped shrinking.
    if (t >= 1) {
      const double prev = trace.records[t].delta_mu;
      if (prev > 0.0 && rec.delta_mu >= prev * (1.0 - 1e-12))
        ++expansions;
      else
        expansions = 0;
      if (expansions >= 5) trace.oscillation_flagged = true;
    }

    L_t = L_next;
  }

  trace.mean_field_avg = sum_L / T;
  trace.policy_avg = sum_pi / T;
  if (ne) {
    trace.final_avg_sigma_mu =
        rkhs_distance(gram, trace.mean_field_avg, ne->mean_field.weights());
    trace.final_avg_dist_d =
        distance_d(trace.policy_avg, ne->policy.probs(), ne->visitation_star);
    trace.final_avg_dist_w =
        distance_w(trace.policy_avg, ne->policy.probs(), ne->visitation_star);
  } else {
    trace.final_avg_sigma_mu = nan_value();
    trace.final_avg_dist_d = nan_value();
    trace.final_avg_dist_w = nan_value();
  }
  return trace;
}

NESolution compute_ne(const MFGModel& model, const GramMatrix& gram,
                      double lambda, double tol) {
  if (!(tol > 0.0)) throw BadParams("compute_ne: tol <= 0");
  // two orders tighter than the outer tolerance, floored where double
  // precision stops being meaningful for the value iterates
  const double inner_tol = std::clamp(tol * 1e-2, 1e-13, 1e-12);
  constexpr int kMaxIterations = 200000;
  constexpr int kMaxExpansions = 10;

  Distribution L = model.nu0();
  std::deque<double> ratios;
  double prev_delta = nan_value();
  int expansions = 0;
  bool converged = false;
  for (int k = 0; k < kMaxIterations; ++k) {
    const Vector mu = gram.matrix() * L.weights();
    const InstantiatedMDP mdp = instantiate(model, L, mu, lambda);
    const SoftSolution sol = soft_value_iteration(mdp, inner_tol);
    const Distribution L_next = mean_field_step(mdp, sol.policy, L);
    const double delta = rkhs_distance(gram, L_next, L);

    if (std::isfinite(prev_delta) && prev_delta > 0.0) {
      const double ratio = delta / prev_delta;
      ratios.push_back(ratio);
      if (ratios.size() > 5) ratios.pop_front();
      if (ratio > 1.0) {
        if (++expansions >= kMaxExpansions)
          throw NoContraction(
              "compute_ne: contraction ratio exceeded 1 for " +
              std::to_string(kMaxExpansions) + " consecutive steps");
      } else {
        expansions = 0;
      }
    }
    prev_delta = delta;
    L = L_next;

    double c_hat = 0.0;
    for (double r : ratios) c_hat = std::max(c_hat, std::min(r, 0.999));
    if (k >= 2 && delta < tol * (1.0 - c_hat)) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw ConvergenceFailure("compute_ne: fixed-point iteration cap reached");

  // Final consistency pass at the converged mean-field state.
  const Vector mu = gram.matrix() * L.weights();
  const InstantiatedMDP mdp = instantiate(model, L, mu, lambda);
  const SoftSolution sol = soft_value_iteration(mdp, inner_tol);
  const Distribution L_fix = mean_field_step(mdp, sol.policy, L);
  const double residual = rkhs_distance(gram, L_fix, L);

  // Exploitability of the returned policy: optimal soft value against the
  // exact (linear-solve) evaluation of pi*. Boundary policies only arise at
  // extreme lambda where the Boltzmann floor underflows; the soft value is
  // then the policy value to rounding.
  const double j_opt = mdp.nu0().weights().dot(sol.v);
  const double j_policy = sol.policy.strictly_positive()
                              ? expected_value(mdp, sol.policy)
                              : j_opt;
  NESolution ne{sol.policy, L, mu, visitation(mdp, sol.policy), residual,
                std::abs(j_opt - j_policy)};
  return ne;
}

}  // namespace mfg
