#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <utility>

#include "mfg/common.hpp"
#include "mfg/fictitious_play.hpp"
#include "mfg/kernel.hpp"
#include "mfg/model.hpp"

namespace mfg {

/// E_{s ~ rho}[ ||pi(.|s) - pi'(.|s)||_1 ].
double distance_d(const Matrix& pi, const Matrix& pi_prime,
                  const Distribution& rho_star);
double distance_d(const Policy& pi, const Policy& pi_prime,
                  const Distribution& rho_star);

/// sqrt( E_{s ~ rho}[ ||pi(.|s) - pi'(.|s)||_1^2 ] ); dominates distance_d
/// by Jensen's inequality.
double distance_w(const Matrix& pi, const Matrix& pi_prime,
                  const Distribution& rho_star);
double distance_w(const Policy& pi, const Policy& pi_prime,
                  const Distribution& rho_star);

/// Empirical lower bounds of the Lipschitz/concentrability constants,
/// obtained as suprema of ratio quotients over sampled pairs.
struct AssumptionEstimates {
  double d0 = 0.0;  // visitation sensitivity to mu
  double d1 = 0.0;  // Gamma1 sensitivity to mu
  double d2 = 0.0;  // Gamma2 sensitivity to pi
  double d3 = 0.0;  // Gamma2 sensitivity to mu
  double c_rho = 0.0;
  double c_rho_bar = 0.0;
  int sample_count = 0;
  // sample index attaining each maximum, aligned with {d0, d1, d2, d3}
  std::array<int, 4> max_ratio_witnesses = {-1, -1, -1, -1};

  double d_bar() const { return 1.0 - d1 * d2 - d3; }
};

/// Closed-form constants of the recursion lemmas.
struct DiagnosticsConstants {
  double q_max = 0.0;
  double kl_max = 0.0;  // log(m / eta)
  double kappa = 0.0;   // 4/(1-gamma) log(m/eta) + 2 R_max / (lambda (1-gamma))
  double c_bar_1 = 0.0; // 2 (d0 KL_max + kappa C_rho d1)
  double d_bar = 0.0;   // 1 - d1 d2 - d3

  static DiagnosticsConstants compute(int m, double gamma, double lambda,
                                      double eta, double r_max,
                                      const AssumptionEstimates& est);
};

struct SigmaMetrics {
  double sigma_mu = 0.0;
  double sigma_pi = 0.0;
};

/// sigma_mu = ||mu_t - mu*||_H and sigma_pi = E_{rho_t*}[KL(pi*_{t+1} ||
/// pi_{t+1})] for one iteration's ingredients.
SigmaMetrics sigma_metrics(const GramMatrix& gram, const Distribution& L_t,
                           const Distribution& L_star, const Policy& pi_opt,
                           const Policy& pi_next,
                           const Distribution& rho_t_star);

struct MixDiffReport {
  double lhs1 = 0.0;   // KL(p* || p_hat)
  double bound1 = 0.0; // log(m / eta)
  double lhs2 = 0.0;   // KL(p* || p_hat) - KL(p* || p)
  double bound2 = 0.0; // 2 eta
  bool pass = false;
};

/// Checks both inequalities of the uniform-mixing lemma for
/// p_hat = (1 - eta) p + eta / m.
MixDiffReport check_mix_diff_bound(const Vector& p_star, const Vector& p,
                                   double eta);

/// KL(x||z) - KL(y||z) <= (1 + log(1 / min{a1, a2})) ||x - y||_1 for
/// simplex vectors floored by a1 (x, y) and a2 (z).
bool check_mix_kl_lipschitz(const Vector& x, const Vector& y, const Vector& z,
                            double a1, double a2);

/// One-step mirror-descent inequality for p' ~ p exp(alpha g):
/// KL(p*||p') <= KL(p*||p) - alpha <g, p* - p> + alpha^2 ||g||_inf^2 / 2.
bool check_one_step_md(const Vector& p_star, const Vector& p, const Vector& g,
                       double alpha, double slack_tol = 1e-9);

struct RecursionReport {
  int checked = 0;
  int pi_violations = 0;
  int mu_violations = 0;
  double worst_pi_slack = infinity();  // min over t of RHS - LHS
  double worst_mu_slack = infinity();
  double satisfied_fraction = 1.0;  // iterations satisfying both
};

/// Verifies the per-iteration recursion inequalities for sigma_pi and
/// sigma_mu along a full-diagnostics trace, using estimated constants.
/// Violations are counted, not fatal: the estimates are lower bounds.
RecursionReport check_recursions(const IterateTrace& trace,
                                 const DiagnosticsConstants& constants,
                                 const AssumptionEstimates& estimates,
                                 const Schedule& schedule, double epsilon);

/// Samples random mean-field/policy pairs and records the largest observed
/// ratio quotients for d0, d1, d2, d3. The D (or W) metric needs a weighting
/// distribution; pass the NE visitation when known, otherwise the visitation
/// of the optimal policy at the embedded initial law is used.
AssumptionEstimates estimate_lipschitz(
    const MFGModel& model, const GramMatrix& gram, double lambda, int n_pairs,
    std::uint64_t seed, Mode mode = Mode::D,
    const std::optional<Distribution>& rho_star = {});

/// Largest observed Lambda ratio ||Lambda(mu) - Lambda(mu')||_H /
/// ||mu - mu'||_H over fresh sampled pairs (composite-map check).
double estimate_lambda_lipschitz(const MFGModel& model, const GramMatrix& gram,
                                 double lambda, int n_pairs,
                                 std::uint64_t seed);

/// Concentrability estimates against rho*: in D-mode the first component is
/// the sup-ratio, in W-mode the L2 form of the relaxed assumption; the
/// second component is the L2 inverse-ratio bound in both modes.
std::pair<double, double> estimate_concentrability(
    const MFGModel& model, const GramMatrix& gram, double lambda,
    const Distribution& rho_star, int n_samples, std::uint64_t seed,
    Mode mode = Mode::D);

}  // namespace mfg
