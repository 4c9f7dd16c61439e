#include "mfg/diagnostics.hpp"

#include <cmath>

#include "mfg/regularized_mdp.hpp"

namespace mfg {

namespace {

void check_policy_pair(const Matrix& a, const Matrix& b,
                       const Distribution& rho) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || rho.size() != a.rows())
    throw BadParams("policy distance: dimension mismatch");
}

// Optimal policy and visitation of the MDP induced by a raw mean-field law.
struct InducedOptimum {
  Policy policy;
  Distribution rho;
};

InducedOptimum induced_optimum(const MFGModel& model, const GramMatrix& gram,
                               double lambda, const Distribution& L) {
  const Vector mu = gram.matrix() * L.weights();
  const InstantiatedMDP mdp = instantiate(model, L, mu, lambda);
  SoftSolution sol = soft_value_iteration(mdp, 1e-10);
  Distribution rho = visitation(mdp, sol.policy);
  return {std::move(sol.policy), std::move(rho)};
}

}  // namespace

double distance_d(const Matrix& pi, const Matrix& pi_prime,
                  const Distribution& rho_star) {
  check_policy_pair(pi, pi_prime, rho_star);
  double acc = 0.0;
  for (Eigen::Index s = 0; s < pi.rows(); ++s)
    acc += rho_star(static_cast<int>(s)) *
           (pi.row(s) - pi_prime.row(s)).template lpNorm<1>();
  return acc;
}

double distance_d(const Policy& pi, const Policy& pi_prime,
                  const Distribution& rho_star) {
  return distance_d(pi.probs(), pi_prime.probs(), rho_star);
}

double distance_w(const Matrix& pi, const Matrix& pi_prime,
                  const Distribution& rho_star) {
  check_policy_pair(pi, pi_prime, rho_star);
  double acc = 0.0;
  for (Eigen::Index s = 0; s < pi.rows(); ++s) {
    const double l1 = (pi.row(s) - pi_prime.row(s)).template lpNorm<1>();
    acc += rho_star(static_cast<int>(s)) * l1 * l1;
  }
  return std::sqrt(acc);
}

double distance_w(const Policy& pi, const Policy& pi_prime,
                  const Distribution& rho_star) {
  return distance_w(pi.probs(), pi_prime.probs(), rho_star);
}

DiagnosticsConstants DiagnosticsConstants::compute(
    int m, double gamma, double lambda, double eta, double r_max,
    const AssumptionEstimates& est) {
  if (!(eta > 0.0 && eta <= 0.5))
    throw BadParams("DiagnosticsConstants: eta outside (0, 1/2]");
  if (!(lambda > 0.0)) throw BadParams("DiagnosticsConstants: lambda <= 0");
  DiagnosticsConstants c;
  const double log_m = std::log(static_cast<double>(m));
  c.q_max = (r_max + gamma * lambda * log_m) / (1.0 - gamma);
  c.kl_max = std::log(m / eta);
  c.kappa = 4.0 / (1.0 - gamma) * c.kl_max +
            2.0 * r_max / (lambda * (1.0 - gamma));
  c.c_bar_1 = 2.0 * (est.d0 * c.kl_max + c.kappa * est.c_rho * est.d1);
  c.d_bar = est.d_bar();
  return c;
}

SigmaMetrics sigma_metrics(const GramMatrix& gram, const Distribution& L_t,
                           const Distribution& L_star, const Policy& pi_opt,
                           const Policy& pi_next,
                           const Distribution& rho_t_star) {
  SigmaMetrics out;
  out.sigma_mu = rkhs_distance(gram, L_t, L_star);
  double acc = 0.0;
  for (int s = 0; s < pi_opt.num_states(); ++s)
    acc += rho_t_star(s) *
           kl_divergence(pi_opt.probs().row(s), pi_next.probs().row(s));
  out.sigma_pi = acc;
  return out;
}

MixDiffReport check_mix_diff_bound(const Vector& p_star, const Vector& p,
                                   double eta) {
  if (!(eta > 0.0 && eta <= 0.5))
    throw BadParams("check_mix_diff_bound: eta outside (0, 1/2]");
  const auto m = p.size();
  const Vector p_hat =
      (1.0 - eta) * p + Vector::Constant(m, eta / static_cast<double>(m));
  MixDiffReport rep;
  rep.lhs1 = kl_divergence(p_star, p_hat);
  rep.bound1 = std::log(static_cast<double>(m) / eta);
  const double kl_unmixed = kl_divergence(p_star, p);
  rep.lhs2 = rep.lhs1 - kl_unmixed;  // -inf when KL(p*||p) is infinite
  rep.bound2 = 2.0 * eta;
  rep.pass = rep.lhs1 <= rep.bound1 + 1e-12 && rep.lhs2 <= rep.bound2 + 1e-12;
  return rep;
}

bool check_mix_kl_lipschitz(const Vector& x, const Vector& y, const Vector& z,
                            double a1, double a2) {
  if (x.minCoeff() < a1 || y.minCoeff() < a1 || z.minCoeff() < a2)
    throw PreconditionViolated("check_mix_kl_lipschitz: floor violated");
  const double lhs = kl_divergence(x, z) - kl_divergence(y, z);
  const double lip = 1.0 + std::log(1.0 / std::min(a1, a2));
  const double rhs = lip * (x - y).lpNorm<1>();
  return lhs <= rhs + 1e-12;
}

bool check_one_step_md(const Vector& p_star, const Vector& p, const Vector& g,
                       double alpha, double slack_tol) {
  Vector logits = p.array().log().matrix() + alpha * g;
  logits.array() -= log_sum_exp(logits);
  Vector p_prime = logits.array().exp();
  p_prime /= p_prime.sum();
  const double lhs = kl_divergence(p_star, p_prime);
  const double g_inf = g.cwiseAbs().maxCoeff();
  const double rhs = kl_divergence(p_star, p) - alpha * g.dot(p_star - p) +
                     alpha * alpha * g_inf * g_inf / 2.0;
  return lhs <= rhs + slack_tol;
}

RecursionReport check_recursions(const IterateTrace& trace,
                                 const DiagnosticsConstants& constants,
                                 const AssumptionEstimates& estimates,
                                 const Schedule& schedule, double epsilon) {
  const int T = trace.horizon();
  if (T < 2) throw MissingDiagnostics("check_recursions: trace too short");
  for (int t = 1; t <= T; ++t)
    if (!std::isfinite(trace.records[t].sigma_pi))
      throw MissingDiagnostics(
          "check_recursions: needs a full-diagnostics trace (sigma_pi missing "
          "at t=" +
          std::to_string(t) + ")");
  if (!std::isfinite(trace.records[0].sigma_mu))
    throw MissingDiagnostics("check_recursions: needs sigma_mu (solved NE)");

  const double alpha = schedule.alpha;
  const double beta = schedule.beta;
  const double eta = schedule.eta;
  const double lambda = schedule.lambda;
  const double contraction = 1.0 - lambda * alpha;
  const double drift_coeff =
      contraction * (estimates.d0 * constants.kl_max +
                     constants.kappa * estimates.c_rho * estimates.d1);
  const double noise_terms = 2.0 * epsilon * alpha +
                             constants.q_max * constants.q_max * alpha *
                                 alpha / 2.0 +
                             2.0 * eta;

  RecursionReport rep;
  int both_ok = 0;
  // sigma_pi recursion needs t >= 1 (it references ||mu_{t-1} - mu_t||);
  // sigma_mu holds from t >= 0 but is checked on the same range so the
  // satisfied fraction counts whole iterations.
  for (int t = 1; t + 1 <= T; ++t) {
    const IterateRecord& cur = trace.records[t];
    const IterateRecord& next = trace.records[t + 1];
    ++rep.checked;

    const double pi_rhs = contraction * cur.sigma_pi +
                          drift_coeff * cur.delta_mu + noise_terms;
    const double pi_slack = pi_rhs - next.sigma_pi;
    rep.worst_pi_slack = std::min(rep.worst_pi_slack, pi_slack);
    const bool pi_ok = pi_slack >= -1e-12;
    if (!pi_ok) ++rep.pi_violations;

    double mu_rhs;
    if (schedule.mode == Mode::D) {
      mu_rhs = (1.0 - beta * constants.d_bar) * cur.sigma_mu +
               estimates.d2 * estimates.c_rho_bar * beta *
                   std::sqrt(next.sigma_pi);
    } else {
      mu_rhs = (1.0 - beta * constants.d_bar) * cur.sigma_mu +
               estimates.d2 * std::sqrt(estimates.c_rho_bar) * beta *
                   std::pow(next.sigma_pi, 0.25);
    }
    const double mu_slack = mu_rhs - next.sigma_mu;
    rep.worst_mu_slack = std::min(rep.worst_mu_slack, mu_slack);
    const bool mu_ok = mu_slack >= -1e-12;
    if (!mu_ok) ++rep.mu_violations;

    if (pi_ok && mu_ok) ++both_ok;
  }
  rep.satisfied_fraction =
      rep.checked > 0 ? static_cast<double>(both_ok) / rep.checked : 1.0;
  return rep;
}

AssumptionEstimates estimate_lipschitz(
    const MFGModel& model, const GramMatrix& gram, double lambda, int n_pairs,
    std::uint64_t seed, Mode mode,
    const std::optional<Distribution>& rho_star) {
  if (n_pairs < 1) throw BadParams("estimate_lipschitz: n_pairs < 1");
  const int n = model.states().size();
  const int m = model.actions().size();

  const Distribution weighting =
      rho_star.has_value()
          ? *rho_star
          : induced_optimum(model, gram, lambda, model.nu0()).rho;
  const auto policy_metric = [&](const Policy& a, const Policy& b) {
    return mode == Mode::D ? distance_d(a, b, weighting)
                           : distance_w(a, b, weighting);
  };

  AssumptionEstimates est;
  est.sample_count = n_pairs;
  for (int i = 0; i < n_pairs; ++i) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    const Distribution L(random_simplex(rng, n));
    const Distribution Lp(random_simplex(rng, n));
    Matrix pi_rows(n, m), pip_rows(n, m);
    for (int s = 0; s < n; ++s) {
      pi_rows.row(s) = random_simplex(rng, m).transpose();
      pip_rows.row(s) = random_simplex(rng, m).transpose();
    }
    const Policy pi(pi_rows), pip(pip_rows);

    const double mu_gap = rkhs_distance(gram, L, Lp);
    const InducedOptimum opt = induced_optimum(model, gram, lambda, L);
    const InducedOptimum opt_p = induced_optimum(model, gram, lambda, Lp);

    if (mu_gap > 1e-12) {
      const double r1 = policy_metric(opt.policy, opt_p.policy) / mu_gap;
      if (r1 > est.d1) {
        est.d1 = r1;
        est.max_ratio_witnesses[1] = i;
      }
      const double r0 =
          (opt.rho.weights() - opt_p.rho.weights()).lpNorm<1>() / mu_gap;
      if (r0 > est.d0) {
        est.d0 = r0;
        est.max_ratio_witnesses[0] = i;
      }
      const auto g2_mu = gamma2(model, gram, pi, L);
      const auto g2_mup = gamma2(model, gram, pi, Lp);
      const double r3 =
          rkhs_distance(gram, g2_mu.first, g2_mup.first) / mu_gap;
      if (r3 > est.d3) {
        est.d3 = r3;
        est.max_ratio_witnesses[3] = i;
      }
    }

    const double pi_gap = policy_metric(pi, pip);
    if (pi_gap > 1e-12) {
      const auto g2_pi = gamma2(model, gram, pi, L);
      const auto g2_pip = gamma2(model, gram, pip, L);
      const double r2 = rkhs_distance(gram, g2_pi.first, g2_pip.first) / pi_gap;
      if (r2 > est.d2) {
        est.d2 = r2;
        est.max_ratio_witnesses[2] = i;
      }
    }
  }
  return est;
}

double estimate_lambda_lipschitz(const MFGModel& model, const GramMatrix& gram,
                                 double lambda, int n_pairs,
                                 std::uint64_t seed) {
  if (n_pairs < 1) throw BadParams("estimate_lambda_lipschitz: n_pairs < 1");
  const int n = model.states().size();
  double worst = 0.0;
  for (int i = 0; i < n_pairs; ++i) {
    std::mt19937_64 rng(
        derive_seed(seed ^ 0x5851f42d4c957f2dULL, static_cast<std::uint64_t>(i)));
    const Distribution L(random_simplex(rng, n));
    const Distribution Lp(random_simplex(rng, n));
    const double gap = rkhs_distance(gram, L, Lp);
    if (gap <= 1e-12) continue;
    const InducedOptimum opt = induced_optimum(model, gram, lambda, L);
    const InducedOptimum opt_p = induced_optimum(model, gram, lambda, Lp);
    const auto lam = gamma2(model, gram, opt.policy, L);
    const auto lam_p = gamma2(model, gram, opt_p.policy, Lp);
    worst = std::max(worst,
                     rkhs_distance(gram, lam.first, lam_p.first) / gap);
  }
  return worst;
}

std::pair<double, double> estimate_concentrability(
    const MFGModel& model, const GramMatrix& gram, double lambda,
    const Distribution& rho_star, int n_samples, std::uint64_t seed,
    Mode mode) {
  if (n_samples < 1) throw BadParams("estimate_concentrability: n_samples < 1");
  const int n = model.states().size();
  if (mode == Mode::D && rho_star.weights().minCoeff() <= 0.0)
    throw DegenerateNu0(
        "estimate_concentrability: rho* has a zero entry; the sup-ratio "
        "coefficient is unbounded");

  double c_rho = 0.0, c_rho_bar = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    const Distribution L(random_simplex(rng, n));
    const Distribution rho_mu = induced_optimum(model, gram, lambda, L).rho;

    double sup_ratio = 0.0, l2_forward = 0.0, l2_inverse = 0.0;
    for (int s = 0; s < n; ++s) {
      const double ratio = rho_mu(s) / rho_star(s);
      sup_ratio = std::max(sup_ratio, ratio);
      l2_forward += rho_mu(s) * ratio * ratio;
      const double inv = rho_star(s) / rho_mu(s);
      l2_inverse += rho_mu(s) * inv * inv;
    }
    c_rho = std::max(c_rho, mode == Mode::D ? sup_ratio
                                            : std::sqrt(l2_forward));
    c_rho_bar = std::max(c_rho_bar, std::sqrt(l2_inverse));
  }
  return {c_rho, c_rho_bar};
}

}  // namespace mfg
