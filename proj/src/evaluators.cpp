#include "mfg/evaluators.hpp"

#include <cmath>
#include <vector>

namespace mfg {

namespace {

int sample_categorical(std::mt19937_64& rng, const Eigen::RowVectorXd& probs) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double u = unit(rng);
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    u -= probs(i);
    if (u <= 0.0) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

}  // namespace

EvaluatorConfig EvaluatorConfig::noisy(double epsilon, std::uint64_t seed) {
  EvaluatorConfig c;
  c.kind = Kind::Noisy;
  c.epsilon = epsilon;
  c.seed = seed;
  return c;
}

EvaluatorConfig EvaluatorConfig::td0(int episodes, int horizon,
                                     std::uint64_t seed, double step_c) {
  EvaluatorConfig c;
  c.kind = Kind::Td0;
  c.episodes = episodes;
  c.horizon = horizon;
  c.seed = seed;
  c.step_c = step_c;
  return c;
}

Evaluator::Evaluator(EvaluatorConfig config)
    : config_(config), rng_(config.seed) {
  if (config_.epsilon < 0.0) throw BadParams("Evaluator: epsilon < 0");
  if (config_.episodes < 1) throw BadParams("Evaluator: episodes < 1");
  if (config_.horizon < 1) throw BadParams("Evaluator: horizon < 1");
  if (!(config_.step_c > 0.0)) throw BadParams("Evaluator: step_c <= 0");
}

double Evaluator::error_bound() const {
  switch (config_.kind) {
    case EvaluatorConfig::Kind::Exact:
      return 0.0;
    case EvaluatorConfig::Kind::Noisy:
      return config_.epsilon;
    case EvaluatorConfig::Kind::Td0:
      return nan_value();
  }
  return nan_value();
}

QFunction Evaluator::evaluate(const InstantiatedMDP& mdp, const Policy& pi) {
  switch (config_.kind) {
    case EvaluatorConfig::Kind::Exact:
      return evaluate_policy_exact(mdp, pi).q;
    case EvaluatorConfig::Kind::Noisy:
      return evaluate_noisy(mdp, pi);
    case EvaluatorConfig::Kind::Td0:
      return evaluate_td0(mdp, pi);
  }
  throw BadParams("Evaluator: unknown kind");
}

QFunction Evaluator::evaluate_noisy(const InstantiatedMDP& mdp,
                                    const Policy& pi) {
  QFunction q = evaluate_policy_exact(mdp, pi).q;
  if (config_.epsilon == 0.0) return q;
  std::uniform_real_distribution<double> noise(-config_.epsilon,
                                               config_.epsilon);
  const double q_max = mdp.q_max();
  for (Eigen::Index s = 0; s < q.rows(); ++s)
    for (Eigen::Index a = 0; a < q.cols(); ++a)
      q(s, a) = std::clamp(q(s, a) + noise(rng_), 0.0, q_max);
  return q;
}

QFunction Evaluator::evaluate_td0(const InstantiatedMDP& mdp,
                                  const Policy& pi) {
  if (mdp.lambda() > 0.0 && !pi.strictly_positive())
    throw DegeneratePolicy("td0: lambda > 0 needs a strictly positive policy");
  const int n = mdp.num_states();
  const double lambda = mdp.lambda();
  const double gamma = mdp.gamma();

  Vector v = Vector::Zero(n);
  std::vector<long> visits(n, 0);
  for (int episode = 0; episode < config_.episodes; ++episode) {
    int s = sample_categorical(rng_, mdp.nu0().weights().transpose());
    for (int k = 0; k < config_.horizon; ++k) {
      const int a = sample_categorical(rng_, pi.probs().row(s));
      double reward = mdp.reward()(s, a);
      if (lambda > 0.0) reward -= lambda * std::log(pi(s, a));
      const int next = sample_categorical(rng_, mdp.transition(a).row(s));
      const double step = config_.step_c / (config_.step_c + visits[s]);
      v(s) += step * (reward + gamma * v(next) - v(s));
      ++visits[s];
      s = next;
    }
  }

  // Assemble the state-action values from the known model rows; only V came
  // from samples.
  const double q_max = mdp.q_max();
  QFunction q(n, mdp.num_actions());
  for (int a = 0; a < mdp.num_actions(); ++a)
    q.col(a) = mdp.reward().col(a) + gamma * (mdp.transition(a) * v);
  return q.cwiseMax(0.0).cwiseMin(q_max);
}

}  // namespace mfg
