#pragma once

#include <cstdint>
#include <random>

#include "mfg/common.hpp"
#include "mfg/model.hpp"
#include "mfg/regularized_mdp.hpp"

namespace mfg {

/// Policy-evaluation backends for the fictitious-play loop. `noisy` adds
/// i.i.d. uniform noise on [-epsilon, epsilon] per (s, a), so the evaluation
/// error is bounded pointwise, not just in expectation. `td0` runs tabular
/// TD(0) on sampled trajectories and assembles Q from the known model rows.
struct EvaluatorConfig {
  enum class Kind { Exact, Noisy, Td0 };

  Kind kind = Kind::Exact;
  double epsilon = 0.0;        // noisy
  std::uint64_t seed = 0;      // noisy, td0
  double step_c = 100.0;       // td0: step size c / (c + visits)
  int episodes = 10000;        // td0
  int horizon = 100;           // td0

  static EvaluatorConfig exact() { return {}; }
  static EvaluatorConfig noisy(double epsilon, std::uint64_t seed);
  static EvaluatorConfig td0(int episodes, int horizon, std::uint64_t seed,
                             double step_c = 100.0);
};

/// Owns its random stream; one instance drives one run at a time.
class Evaluator {
 public:
  explicit Evaluator(EvaluatorConfig config);

  QFunction evaluate(const InstantiatedMDP& mdp, const Policy& pi);

  const EvaluatorConfig& config() const { return config_; }

  /// Pointwise evaluation-error bound when one is known (0 for exact,
  /// epsilon for noisy, NaN for td0).
  double error_bound() const;

 private:
  QFunction evaluate_noisy(const InstantiatedMDP& mdp, const Policy& pi);
  QFunction evaluate_td0(const InstantiatedMDP& mdp, const Policy& pi);

  EvaluatorConfig config_;
  std::mt19937_64 rng_;
};

}  // namespace mfg
