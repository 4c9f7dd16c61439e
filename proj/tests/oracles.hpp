// Test-only reference computations, kept independent of the solver paths
// they check: plain scalar loops, sampling, and exhaustive search.
#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "mfg/model.hpp"
#include "mfg/regularized_mdp.hpp"

namespace mfg::oracles {

inline int draw(std::mt19937_64& rng, const Eigen::RowVectorXd& probs) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double u = unit(rng);
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    u -= probs(i);
    if (u <= 0.0) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Truncated-horizon Monte-Carlo estimate of the entropy-regularized value
/// of `pi` started from `start_state`.
inline McEstimate mc_rollout_value(const InstantiatedMDP& mdp, const Policy& pi,
                                   int start_state, int rollouts, int horizon,
                                   std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double sum = 0.0, sum_sq = 0.0;
  for (int r = 0; r < rollouts; ++r) {
    int s = start_state;
    double ret = 0.0, discount = 1.0;
    for (int t = 0; t < horizon; ++t) {
      const int a = draw(rng, pi.probs().row(s));
      double reward = mdp.reward()(s, a);
      if (mdp.lambda() > 0.0) reward -= mdp.lambda() * std::log(pi(s, a));
      ret += discount * reward;
      discount *= mdp.gamma();
      s = draw(rng, mdp.transition(a).row(s));
    }
    sum += ret;
    sum_sq += ret * ret;
  }
  McEstimate est;
  est.mean = sum / rollouts;
  const double var = (sum_sq / rollouts - est.mean * est.mean) *
                     rollouts / (rollouts - 1.0);
  est.std_error = std::sqrt(var / rollouts);
  return est;
}

/// rho via the truncated series (1 - gamma) sum_{t<=T} gamma^t nu0' P_pi^t.
inline Vector visitation_series(const InstantiatedMDP& mdp, const Policy& pi,
                                int terms) {
  const Matrix p_pi = mdp.policy_transition(pi);
  Eigen::RowVectorXd occupancy = mdp.nu0().weights().transpose();
  Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(mdp.num_states());
  double discount = 1.0;
  for (int t = 0; t <= terms; ++t) {
    acc += discount * occupancy;
    occupancy = occupancy * p_pi;
    discount *= mdp.gamma();
  }
  return (1.0 - mdp.gamma()) * acc.transpose();
}

/// Exhaustive maximum of J over all m^n deterministic policies (lambda = 0).
inline double enumerate_best_j(const InstantiatedMDP& mdp) {
  const int n = mdp.num_states();
  const int m = mdp.num_actions();
  long total = 1;
  for (int s = 0; s < n; ++s) total *= m;
  double best = -infinity();
  for (long code = 0; code < total; ++code) {
    Matrix probs = Matrix::Zero(n, m);
    long rest = code;
    for (int s = 0; s < n; ++s) {
      probs(s, static_cast<int>(rest % m)) = 1.0;
      rest /= m;
    }
    best = std::max(best, expected_value(mdp, Policy(probs)));
  }
  return best;
}

/// Coarse-to-fine joint grid search over stationary two-action policies,
/// refining around the running argmax until the per-coordinate step is at
/// most `target_step`. Returns the best J found.
inline double grid_search_best_j(const InstantiatedMDP& mdp,
                                 double target_step) {
  const int n = mdp.num_states();
  if (mdp.num_actions() != 2)
    throw BadParams("grid oracle only handles m = 2");
  constexpr double kFloor = 1e-9;  // evaluation needs interior policies

  const auto evaluate = [&](const std::vector<double>& p) {
    Matrix probs(n, 2);
    for (int s = 0; s < n; ++s) {
      const double q = std::clamp(p[s], kFloor, 1.0 - kFloor);
      probs(s, 0) = q;
      probs(s, 1) = 1.0 - q;
    }
    return expected_value(mdp, Policy(probs));
  };

  std::vector<double> lo(n, 0.0), hi(n, 1.0), best_p(n, 0.5);
  double best = -infinity();
  double step = 0.05;
  while (true) {
    std::vector<int> counts(n);
    for (int s = 0; s < n; ++s)
      counts[s] = static_cast<int>(std::round((hi[s] - lo[s]) / step)) + 1;
    std::vector<int> index(n, 0);
    while (true) {
      std::vector<double> p(n);
      for (int s = 0; s < n; ++s) p[s] = lo[s] + index[s] * step;
      const double j = evaluate(p);
      if (j > best) {
        best = j;
        best_p = p;
      }
      int carry = 0;
      while (carry < n && ++index[carry] >= counts[carry]) {
        index[carry] = 0;
        ++carry;
      }
      if (carry == n) break;
    }
    if (step <= target_step) break;
    const double window = step;
    step = std::max(target_step, step / 5.0);
    for (int s = 0; s < n; ++s) {
      lo[s] = std::max(0.0, best_p[s] - window);
      hi[s] = std::min(1.0, best_p[s] + window);
    }
    // keep the grid aligned so hi - lo is an exact multiple of step
    for (int s = 0; s < n; ++s)
      hi[s] = lo[s] + std::ceil((hi[s] - lo[s]) / step) * step;
  }
  return best;
}

}  // namespace mfg::oracles
