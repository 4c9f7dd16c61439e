#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "mfg/common.hpp"

namespace mfg {

/// Finite set of support points in R^d, one row per state.
class StateSpace {
 public:
  explicit StateSpace(Matrix points);

  int size() const { return static_cast<int>(points_.rows()); }
  int dim() const { return static_cast<int>(points_.cols()); }
  const Matrix& points() const { return points_; }
  Eigen::RowVectorXd point(int i) const { return points_.row(i); }

 private:
  Matrix points_;
};

class ActionSpace {
 public:
  explicit ActionSpace(int m);
  int size() const { return m_; }

 private:
  int m_;
};

/// Probability vector over states. Construction validates the simplex
/// invariant; pass kSimplexTolArithmetic for vectors produced by sums.
class Distribution {
 public:
  explicit Distribution(Vector weights, double tol = kSimplexTolConstruct);

  static Distribution uniform(int n);
  static Distribution point_mass(int n, int i);

  const Vector& weights() const { return w_; }
  double operator()(int i) const { return w_(i); }
  int size() const { return static_cast<int>(w_.size()); }

 private:
  Vector w_;
};

/// Row-stochastic state-to-action matrix.
class Policy {
 public:
  explicit Policy(Matrix probs, double tol = kSimplexTolConstruct);

  static Policy uniform(int n, int m);

  const Matrix& probs() const { return p_; }
  double operator()(int s, int a) const { return p_(s, a); }
  int num_states() const { return static_cast<int>(p_.rows()); }
  int num_actions() const { return static_cast<int>(p_.cols()); }
  double min_entry() const { return p_.minCoeff(); }
  bool strictly_positive() const { return p_.minCoeff() > 0.0; }

 private:
  Matrix p_;
};

/// Reward table and per-action transition matrices returned by a model in
/// response to a mean-field state. transition[a](s, s') is the probability
/// of moving s -> s' under action a.
struct MdpTables {
  Matrix reward;                   // n x m
  std::vector<Matrix> transition;  // m matrices, each n x n
};

/// Builds the tables for a given mean-field state, passed both as the raw
/// distribution and as its embedded values at the support points. Must be a
/// pure function of its arguments.
using ResponseFn =
    std::function<MdpTables(const Vector& weights, const Vector& embedded)>;

class MFGModel {
 public:
  MFGModel(StateSpace states, ActionSpace actions, double gamma, double r_max,
           Distribution nu0, ResponseFn respond);

  const StateSpace& states() const { return states_; }
  const ActionSpace& actions() const { return actions_; }
  double gamma() const { return gamma_; }
  double r_max() const { return r_max_; }
  const Distribution& nu0() const { return nu0_; }

  MdpTables respond(const Vector& weights, const Vector& embedded) const {
    return respond_(weights, embedded);
  }

 private:
  StateSpace states_;
  ActionSpace actions_;
  double gamma_;
  double r_max_;
  Distribution nu0_;
  ResponseFn respond_;
};

/// Frozen single-agent MDP induced by one mean-field state, with the
/// entropy-regularization level baked in.
class InstantiatedMDP {
 public:
  InstantiatedMDP(Matrix reward, std::vector<Matrix> transition, double gamma,
                  double r_max, Distribution nu0, double lambda);

  int num_states() const { return static_cast<int>(reward_.rows()); }
  int num_actions() const { return static_cast<int>(reward_.cols()); }
  const Matrix& reward() const { return reward_; }
  const Matrix& transition(int a) const { return transition_[a]; }
  double gamma() const { return gamma_; }
  double r_max() const { return r_max_; }
  double lambda() const { return lambda_; }
  const Distribution& nu0() const { return nu0_; }

  /// (R_max + gamma * lambda * log m) / (1 - gamma).
  double q_max() const;

  /// State-to-state chain under pi: P_pi(s, s') = sum_a pi(a|s) P(s'|s, a).
  Matrix policy_transition(const Policy& pi) const;

 private:
  Matrix reward_;
  std::vector<Matrix> transition_;
  double gamma_;
  double r_max_;
  Distribution nu0_;
  double lambda_;
};

class GramMatrix;  // kernel.hpp

/// Freezes the reward/transition response of `model` at mean-field state L.
InstantiatedMDP instantiate(const MFGModel& model, const Distribution& L,
                            const Vector& embedded, double lambda);

/// One synchronous step of the population dynamic:
/// L+(s') = sum_s sum_a L(s) pi(a|s) P(s'|s,a).
Distribution mean_field_step(const InstantiatedMDP& mdp, const Policy& pi,
                             const Distribution& L);

/// Population-dynamics map on embedded mean-field states: instantiates the
/// model at L, advances one step under pi, and re-embeds. Returns the new
/// distribution together with its embedding values.
std::pair<Distribution, Vector> gamma2(const MFGModel& model,
                                       const GramMatrix& gram, const Policy& pi,
                                       const Distribution& L);

}  // namespace mfg
