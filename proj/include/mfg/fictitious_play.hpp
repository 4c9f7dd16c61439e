#pragma once

#include <optional>
#include <vector>

#include "mfg/common.hpp"
#include "mfg/evaluators.hpp"
#include "mfg/kernel.hpp"
#include "mfg/model.hpp"
#include "mfg/regularized_mdp.hpp"

namespace mfg {

/// D-mode follows the T^{-2/5}/T^{-4/5} step exponents with the
/// rho*-weighted L1 policy metric; W-mode uses T^{-4/9}/T^{-8/9} and the
/// root-mean-square variant.
enum class Mode { D, W };

enum class DiagnosticsLevel { Full, Endpoint };

/// Constant step sizes alpha (policy), beta (mean-field) and mixing weight
/// eta = c_eta / T derived from the iteration budget.
struct Schedule {
  double lambda = 0.5;
  int T = 1000;
  double c_alpha = 1.0;
  double c_beta = 1.0;
  double c_eta = 1.0;
  Mode mode = Mode::D;
  double alpha = 0.0;
  double beta = 0.0;
  double eta = 0.0;

  /// Power-law rate schedule in T. Unsupplied constants default to values keeping
  /// alpha * lambda <= 1/2 and eta <= 1/2 at the configured T. When a
  /// contraction estimate d_bar = 1 - d1 d2 - d3 is supplied, beta * d_bar < 1
  /// is enforced; otherwise d_bar = 1 is assumed conservatively.
  static Schedule make(double lambda, int T, Mode mode,
                       std::optional<double> c_alpha = {},
                       std::optional<double> c_beta = {},
                       std::optional<double> c_eta = {},
                       std::optional<double> d_bar = {});

  /// Direct step sizes, bypassing the rate formulas (degenerate schedules
  /// such as alpha = beta = eta = 0 are allowed here for testing).
  static Schedule explicit_constants(double lambda, int T, double alpha,
                                     double beta, double eta, Mode mode = Mode::D);
};

struct IterateRecord {
  int t = 0;
  double sigma_mu = 0.0;   // ||mu_t - mu*||_H
  double sigma_pi = 0.0;   // E_{rho_{t-1}*}[KL(pi_t* || pi_t)]
  double dist_d = 0.0;     // D(pi_t, pi_t*)
  double dist_w = 0.0;     // W(pi_t, pi_t*)
  double j = 0.0;          // J_{mu_t}^lambda(pi_t)
  double avg_sigma_mu = 0.0;  // ||(1/t) sum L - L*||_H
  double avg_dist_d = 0.0;    // D((1/t) sum pi, pi*)
  double delta_mu = 0.0;      // ||mu_t - mu_{t-1}||_H
  double wall_time = 0.0;     // seconds since run start (not serialized)
  Vector mean_field;          // L_t
  Matrix policy;              // pi_t
};

struct IterateTrace {
  std::vector<IterateRecord> records;  // length T + 1
  Vector mean_field_avg;               // (1/T) sum_{t=1..T} L_t
  Matrix policy_avg;                   // (1/T) sum_{t=1..T} pi_t
  double final_avg_sigma_mu = 0.0;
  double final_avg_dist_d = 0.0;
  double final_avg_dist_w = 0.0;
  bool oscillation_flagged = false;  // baseline: step sizes stopped shrinking

  int horizon() const { return static_cast<int>(records.size()) - 1; }
  void write_csv(std::ostream& out) const;
};

struct NESolution {
  Policy policy;
  Distribution mean_field;
  Vector embedding;
  Distribution visitation_star;  // rho* under (pi*, mu*)
  double lambda_residual = 0.0;  // ||Lambda(mu*) - mu*||_H
  double rationality_gap = 0.0;  // exploitability at mu*
};

/// One proximal policy update followed by uniform mixing:
/// pi_hat ~ pi^{1 - alpha lambda} exp(alpha Q_hat) computed in log space,
/// then (1 - eta) pi_hat + eta / m.
Policy improvement_step(const Policy& pi, const QFunction& q_hat, double alpha,
                        double lambda, double eta);

/// Single-loop fictitious play. Per iteration: instantiate the MDP at mu_t,
/// evaluate pi_t, one improvement step, then the relaxed mean-field update
/// L_{t+1} = (1 - beta) L_t + beta Gamma2(pi_{t+1}, L_t). Diagnostics
/// columns that need the NE (sigma_mu, D, W, averages) are NaN when `ne` is
/// absent; per-iteration optimal-policy diagnostics (sigma_pi, D, W, J) are
/// skipped at Endpoint level.
IterateTrace run(const MFGModel& model, const GramMatrix& gram,
                 const Schedule& schedule, Evaluator& evaluator,
                 const Policy& init_pi, const Distribution& init_L,
                 const NESolution* ne = nullptr,
                 DiagnosticsLevel level = DiagnosticsLevel::Full);

/// Double-loop baseline: each outer iteration solves the induced MDP to
/// inner_tol and then applies one full Gamma2 step.
IterateTrace run_fixed_point_baseline(const MFGModel& model,
                                      const GramMatrix& gram, double lambda,
                                      int T, double inner_tol,
                                      const Distribution& init_L,
                                      const NESolution* ne = nullptr);

/// Ground-truth NE via the fixed-point iteration of Lambda(mu) =
/// Gamma2(Gamma1(mu), mu), stopped once the step size falls below
/// tol * (1 - c_hat) for the measured contraction ratio c_hat.
NESolution compute_ne(const MFGModel& model, const GramMatrix& gram,
                      double lambda, double tol);

}  // namespace mfg
