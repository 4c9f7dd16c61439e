#include "mfg/regularized_mdp.hpp"

#include <Eigen/LU>

#include <cmath>
#include <string>

namespace mfg {

namespace {

// Per-state entropy-regularized reward under pi, skipping the log terms
// entirely when lambda = 0 so no 0 * log 0 is ever formed.
Vector regularized_reward(const InstantiatedMDP& mdp, const Policy& pi) {
  const int n = mdp.num_states();
  const double lambda = mdp.lambda();
  Vector r(n);
  for (int s = 0; s < n; ++s) {
    double acc = 0.0;
    for (int a = 0; a < mdp.num_actions(); ++a) {
      const double p = pi(s, a);
      if (p == 0.0) continue;
      double term = mdp.reward()(s, a);
      if (lambda > 0.0) term -= lambda * std::log(p);
      acc += p * term;
    }
    r(s) = acc;
  }
  return r;
}

Vector solve_discounted(const Matrix& p_pi, double gamma, const Vector& rhs) {
  const auto n = p_pi.rows();
  const Matrix system = Matrix::Identity(n, n) - gamma * p_pi;
  Vector x = system.partialPivLu().solve(rhs);
  if (!x.allFinite())
    throw SolveFailure("discounted linear system produced non-finite values");
  return x;
}

QFunction assemble_q(const InstantiatedMDP& mdp, const Vector& v) {
  QFunction q(mdp.num_states(), mdp.num_actions());
  for (int a = 0; a < mdp.num_actions(); ++a)
    q.col(a) = mdp.reward().col(a) + mdp.gamma() * (mdp.transition(a) * v);
  return q;
}

// Contraction bound on the iterations needed from V = 0, plus slack for the
// rounding plateau near the fixed point at tolerances close to machine
// precision.
int iteration_cap(const InstantiatedMDP& mdp, double tol) {
  const double gamma = mdp.gamma();
  const double cap =
      std::ceil(std::log(mdp.q_max() / tol) / std::log(1.0 / gamma)) + 10.0;
  return std::max(1, static_cast<int>(cap));
}

}  // namespace

PolicyEvaluation evaluate_policy_exact(const InstantiatedMDP& mdp,
                                       const Policy& pi) {
  if (mdp.lambda() > 0.0 && !pi.strictly_positive())
    throw DegeneratePolicy(
        "evaluate_policy_exact: lambda > 0 needs a strictly positive policy");
  const Vector r_pi = regularized_reward(mdp, pi);
  Vector v = solve_discounted(mdp.policy_transition(pi), mdp.gamma(), r_pi);
  QFunction q = assemble_q(mdp, v);

  // V(s) = <Q(s,.), pi(.|s)> + lambda H(pi(.|s)) must hold at the solution.
  for (int s = 0; s < mdp.num_states(); ++s) {
    double rhs = q.row(s).dot(pi.probs().row(s));
    if (mdp.lambda() > 0.0) rhs += mdp.lambda() * entropy(pi.probs().row(s));
    if (std::abs(rhs - v(s)) > 1e-9)
      throw SolveFailure("evaluate_policy_exact: value/Q identity residual " +
                         format_double(std::abs(rhs - v(s))));
  }
  return {std::move(v), std::move(q)};
}

SoftSolution soft_value_iteration(const InstantiatedMDP& mdp, double tol) {
  if (!(mdp.lambda() > 0.0))
    throw BadParams("soft_value_iteration: requires lambda > 0");
  if (!(tol > 0.0)) throw BadParams("soft_value_iteration: tol <= 0");
  const int n = mdp.num_states();
  const double lambda = mdp.lambda();
  const double gamma = mdp.gamma();
  const double stop = tol * (1.0 - gamma) / gamma;
  const int cap = iteration_cap(mdp, tol);

  Vector v = Vector::Zero(n);
  double change = infinity();
  int iter = 0;
  while (true) {
    if (iter >= cap)
      throw ConvergenceFailure(
          "soft_value_iteration: exceeded the contraction iteration cap");
    const QFunction q = assemble_q(mdp, v);
    Vector next(n);
    for (int s = 0; s < n; ++s)
      next(s) = lambda * log_sum_exp(q.row(s) / lambda);
    change = (next - v).cwiseAbs().maxCoeff();
    v = std::move(next);
    ++iter;
    if (change < stop) break;
  }

  QFunction q = assemble_q(mdp, v);
  Matrix probs(n, mdp.num_actions());
  for (int s = 0; s < n; ++s) {
    const Eigen::RowVectorXd logits = q.row(s) / lambda;
    const Eigen::RowVectorXd shifted =
        (logits.array() - logits.maxCoeff()).exp();
    probs.row(s) = shifted / shifted.sum();
  }
  return {std::move(q), std::move(v), Policy(std::move(probs)), iter, change};
}

SoftSolution value_iteration_unregularized(const InstantiatedMDP& mdp,
                                           double tol) {
  if (mdp.lambda() != 0.0)
    throw BadParams("value_iteration_unregularized: requires lambda = 0");
  if (!(tol > 0.0)) throw BadParams("value_iteration_unregularized: tol <= 0");
  const int n = mdp.num_states();
  const double gamma = mdp.gamma();
  const double stop = tol * (1.0 - gamma) / gamma;
  const int cap = iteration_cap(mdp, tol);

  Vector v = Vector::Zero(n);
  double change = infinity();
  int iter = 0;
  while (true) {
    if (iter >= cap)
      throw ConvergenceFailure(
          "value_iteration_unregularized: exceeded the iteration cap");
    const QFunction q = assemble_q(mdp, v);
    Vector next = q.rowwise().maxCoeff();
    change = (next - v).cwiseAbs().maxCoeff();
    v = std::move(next);
    ++iter;
    if (change < stop) break;
  }

  QFunction q = assemble_q(mdp, v);
  Matrix probs = Matrix::Zero(n, mdp.num_actions());
  for (int s = 0; s < n; ++s) {
    int best = 0;
    for (int a = 1; a < mdp.num_actions(); ++a)
      if (q(s, a) > q(s, best)) best = a;  // ties keep the smaller index
    probs(s, best) = 1.0;
  }
  return {std::move(q), std::move(v), Policy(std::move(probs)), iter, change};
}

Distribution visitation(const InstantiatedMDP& mdp, const Policy& pi) {
  const double gamma = mdp.gamma();
  const Matrix p_pi = mdp.policy_transition(pi);
  const Vector rhs = (1.0 - gamma) * mdp.nu0().weights();
  const auto n = p_pi.rows();
  const Matrix system = Matrix::Identity(n, n) - gamma * p_pi.transpose();
  Vector rho = system.partialPivLu().solve(rhs);
  if (!rho.allFinite())
    throw SolveFailure("visitation: linear solve produced non-finite values");
  if (((rho - rhs).array() < -1e-12).any())
    throw SolveFailure("visitation: rho below (1 - gamma) nu0");
  return Distribution(rho.cwiseMax(0.0), kSimplexTolArithmetic);
}

double expected_value(const InstantiatedMDP& mdp, const Policy& pi) {
  return mdp.nu0().weights().dot(evaluate_policy_exact(mdp, pi).v);
}

double performance_difference_residual(const InstantiatedMDP& mdp,
                                       const Policy& pi,
                                       const Policy& pi_prime) {
  const double lambda = mdp.lambda();
  const double gamma = mdp.gamma();
  if (lambda > 0.0 &&
      (!pi.strictly_positive() || !pi_prime.strictly_positive()))
    throw DegeneratePolicy(
        "performance_difference_residual: policies must be strictly positive");

  const PolicyEvaluation base = evaluate_policy_exact(mdp, pi);
  const double j = mdp.nu0().weights().dot(base.v);
  const double j_prime = expected_value(mdp, pi_prime);
  const Distribution rho = visitation(mdp, pi_prime);

  double kl_term = 0.0;
  double advantage = 0.0;
  for (int s = 0; s < mdp.num_states(); ++s) {
    const Eigen::RowVectorXd row = pi.probs().row(s);
    const Eigen::RowVectorXd row_prime = pi_prime.probs().row(s);
    Eigen::RowVectorXd gradient = base.q.row(s);
    if (lambda > 0.0) {
      kl_term += rho(s) * kl_divergence(row_prime, row);
      gradient -= lambda * row.array().log().matrix();
    }
    advantage += rho(s) * gradient.dot(row_prime - row);
  }

  const double lhs = j_prime - j + lambda / (1.0 - gamma) * kl_term;
  const double rhs = advantage / (1.0 - gamma);
  return std::abs(lhs - rhs);
}

OptimalityGap optimality_gap_check(const InstantiatedMDP& mdp,
                                   const Policy& pi_star) {
  std::vector<Matrix> transition(mdp.num_actions());
  for (int a = 0; a < mdp.num_actions(); ++a) transition[a] = mdp.transition(a);
  const InstantiatedMDP unregularized(mdp.reward(), std::move(transition),
                                      mdp.gamma(), mdp.r_max(), mdp.nu0(), 0.0);
  const SoftSolution best = value_iteration_unregularized(unregularized, 1e-10);
  const double j0 = expected_value(unregularized, best.policy);
  // pi_star is the soft-VI output; at tiny lambda its Boltzmann floor
  // underflows to exact zeros, in which case the soft fixed-point value
  // (which equals V^{ lambda, pi* }) is used instead of re-evaluation.
  const double j_lambda =
      mdp.lambda() > 0.0 && !pi_star.strictly_positive()
          ? mdp.nu0().weights().dot(soft_value_iteration(mdp, 1e-10).v)
          : expected_value(mdp, pi_star);

  const double gap = j0 - j_lambda;
  const double bound = mdp.lambda() *
                       std::log(static_cast<double>(mdp.num_actions())) /
                       (1.0 - mdp.gamma());
  if (gap > bound + 1e-8)
    throw SolveFailure("optimality_gap_check: gap " + format_double(gap) +
                       " exceeds bound " + format_double(bound));
  return {gap, bound};
}

}  // namespace mfg
