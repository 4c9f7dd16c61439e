#pragma once

#include "mfg/common.hpp"
#include "mfg/model.hpp"

namespace mfg {

// Dense solver outputs; bounds (0 <= Q <= Q_max etc.) are established by the
// construction of each operation and exercised by the property tests.
using QFunction = Matrix;     // n x m
using ValueFunction = Vector; // length n

struct PolicyEvaluation {
  ValueFunction v;
  QFunction q;
};

struct SoftSolution {
  QFunction q;
  ValueFunction v;
  Policy policy;
  int iterations = 0;
  double residual = 0.0;  // last sup-norm value change
};

/// Exact evaluation of pi on the entropy-regularized MDP: solves the linear
/// system V = r_pi^lambda + gamma P_pi V, then Q(s,a) = R(s,a) + gamma P V.
PolicyEvaluation evaluate_policy_exact(const InstantiatedMDP& mdp,
                                       const Policy& pi);

/// Soft (logsumexp) value iteration for the regularized optimal policy.
/// Stops when the sup-norm change drops below tol * (1 - gamma) / gamma so
/// the fixed-point error is below tol. Returns the Boltzmann policy
/// pi(a|s) proportional to exp(Q(s,a) / lambda).
SoftSolution soft_value_iteration(const InstantiatedMDP& mdp, double tol);

/// Standard Bellman optimality iteration (lambda = 0) with a deterministic
/// greedy policy; ties break toward the smallest action index.
SoftSolution value_iteration_unregularized(const InstantiatedMDP& mdp,
                                           double tol);

/// Discounted state visitation rho' = (1-gamma) nu0' (I - gamma P_pi)^{-1}.
Distribution visitation(const InstantiatedMDP& mdp, const Policy& pi);

/// J = E_{nu0}[V^{lambda,pi}].
double expected_value(const InstantiatedMDP& mdp, const Policy& pi);

/// |LHS - RHS| of the performance-difference identity
///   J(pi') - J(pi) + lambda/(1-gamma) E_{rho^{pi'}}[KL(pi'||pi)]
///     = 1/(1-gamma) E_{rho^{pi'}}[<Q^{lambda,pi} - lambda log pi, pi' - pi>].
double performance_difference_residual(const InstantiatedMDP& mdp,
                                       const Policy& pi, const Policy& pi_prime);

struct OptimalityGap {
  double gap;    // max_pi J^0(pi) - J^lambda(pi_star)
  double bound;  // lambda log m / (1 - gamma)
};

/// Measures how closely the regularized optimum approximates the
/// unregularized one; throws SolveFailure if the gap exceeds the bound by
/// more than 1e-8.
OptimalityGap optimality_gap_check(const InstantiatedMDP& mdp,
                                   const Policy& pi_star);

}  // namespace mfg
