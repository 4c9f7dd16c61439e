#include "mfg/model.hpp"

#include <cmath>
#include <string>

#include "mfg/kernel.hpp"

namespace mfg {

namespace {

void check_simplex(const Vector& w, double tol, const char* what) {
  if (w.size() == 0) throw InvalidModel(std::string(what) + ": empty");
  if (w.minCoeff() < 0.0)
    throw InvalidModel(std::string(what) + ": negative entry");
  const double sum = w.sum();
  if (std::abs(sum - 1.0) > tol)
    throw InvalidModel(std::string(what) + ": weights sum to " +
                       format_double(sum));
}

}  // namespace

StateSpace::StateSpace(Matrix points) : points_(std::move(points)) {
  if (points_.rows() < 1 || points_.cols() < 1)
    throw InvalidModel("StateSpace: need n >= 1 points in d >= 1 dimensions");
  for (Eigen::Index i = 0; i < points_.rows(); ++i)
    for (Eigen::Index j = i + 1; j < points_.rows(); ++j)
      if ((points_.row(i) - points_.row(j)).norm() == 0.0)
        throw InvalidModel("StateSpace: duplicate support points " +
                           std::to_string(i) + ", " + std::to_string(j));
}

ActionSpace::ActionSpace(int m) : m_(m) {
  if (m < 1) throw InvalidModel("ActionSpace: need at least one action");
}

Distribution::Distribution(Vector weights, double tol) : w_(std::move(weights)) {
  check_simplex(w_, tol, "Distribution");
}

Distribution Distribution::uniform(int n) {
  return Distribution(Vector::Constant(n, 1.0 / n));
}

Distribution Distribution::point_mass(int n, int i) {
  Vector w = Vector::Zero(n);
  w(i) = 1.0;
  return Distribution(std::move(w));
}

Policy::Policy(Matrix probs, double tol) : p_(std::move(probs)) {
  if (p_.rows() < 1 || p_.cols() < 1) throw InvalidModel("Policy: empty");
  if (p_.minCoeff() < 0.0) throw InvalidModel("Policy: negative entry");
  for (Eigen::Index s = 0; s < p_.rows(); ++s) {
    const double sum = p_.row(s).sum();
    if (std::abs(sum - 1.0) > tol)
      throw InvalidModel("Policy: row " + std::to_string(s) + " sums to " +
                         format_double(sum));
  }
}

Policy Policy::uniform(int n, int m) {
  return Policy(Matrix::Constant(n, m, 1.0 / m));
}

MFGModel::MFGModel(StateSpace states, ActionSpace actions, double gamma,
                   double r_max, Distribution nu0, ResponseFn respond)
    : states_(std::move(states)),
      actions_(std::move(actions)),
      gamma_(gamma),
      r_max_(r_max),
      nu0_(std::move(nu0)),
      respond_(std::move(respond)) {
  if (!(gamma_ > 0.0 && gamma_ < 1.0))
    throw InvalidModel("MFGModel: gamma must lie in (0, 1)");
  if (!(r_max_ > 0.0)) throw InvalidModel("MFGModel: r_max must be positive");
  if (nu0_.size() != states_.size())
    throw InvalidModel("MFGModel: nu0 dimension mismatch");
  if (!respond_) throw InvalidModel("MFGModel: missing response function");
}

InstantiatedMDP::InstantiatedMDP(Matrix reward, std::vector<Matrix> transition,
                                 double gamma, double r_max, Distribution nu0,
                                 double lambda)
    : reward_(std::move(reward)),
      transition_(std::move(transition)),
      gamma_(gamma),
      r_max_(r_max),
      nu0_(std::move(nu0)),
      lambda_(lambda) {
  const auto n = reward_.rows();
  const auto m = reward_.cols();
  if (n < 1 || m < 1) throw InvalidModel("InstantiatedMDP: empty tables");
  if (static_cast<Eigen::Index>(transition_.size()) != m)
    throw InvalidModel("InstantiatedMDP: one transition matrix per action");
  if (lambda_ < 0.0) throw InvalidModel("InstantiatedMDP: lambda < 0");
  if (nu0_.size() != n) throw InvalidModel("InstantiatedMDP: nu0 mismatch");
  if (reward_.minCoeff() < 0.0 || reward_.maxCoeff() > r_max_)
    throw InvalidModel("InstantiatedMDP: reward outside [0, R_max]");
  for (Eigen::Index a = 0; a < m; ++a) {
    const Matrix& p = transition_[a];
    if (p.rows() != n || p.cols() != n)
      throw InvalidModel("InstantiatedMDP: transition shape mismatch");
    if (p.minCoeff() < 0.0)
      throw InvalidModel("InstantiatedMDP: negative transition probability");
    for (Eigen::Index s = 0; s < n; ++s) {
      const double sum = p.row(s).sum();
      if (std::abs(sum - 1.0) > kSimplexTolConstruct)
        throw InvalidModel("InstantiatedMDP: transition row (" +
                           std::to_string(s) + ", a=" + std::to_string(a) +
                           ") sums to " + format_double(sum));
    }
  }
}

double InstantiatedMDP::q_max() const {
  const int m = num_actions();
  return (r_max_ + gamma_ * lambda_ * std::log(static_cast<double>(m))) /
         (1.0 - gamma_);
}

Matrix InstantiatedMDP::policy_transition(const Policy& pi) const {
  const int n = num_states();
  Matrix p_pi = Matrix::Zero(n, n);
  for (int a = 0; a < num_actions(); ++a)
    p_pi.noalias() += pi.probs().col(a).asDiagonal() * transition_[a];
  return p_pi;
}

InstantiatedMDP instantiate(const MFGModel& model, const Distribution& L,
                            const Vector& embedded, double lambda) {
  if (lambda < 0.0) throw InvalidModel("instantiate: lambda < 0");
  if (L.size() != model.states().size())
    throw InvalidModel("instantiate: mean-field dimension mismatch");
  MdpTables tables = model.respond(L.weights(), embedded);
  return InstantiatedMDP(std::move(tables.reward), std::move(tables.transition),
                         model.gamma(), model.r_max(), model.nu0(), lambda);
}

Distribution mean_field_step(const InstantiatedMDP& mdp, const Policy& pi,
                             const Distribution& L) {
  const int n = mdp.num_states();
  if (pi.num_states() != n || pi.num_actions() != mdp.num_actions() ||
      L.size() != n)
    throw InvalidModel("mean_field_step: dimension mismatch");
  Eigen::RowVectorXd next = Eigen::RowVectorXd::Zero(n);
  for (int a = 0; a < mdp.num_actions(); ++a) {
    const Vector mass = L.weights().cwiseProduct(pi.probs().col(a));
    next.noalias() += mass.transpose() * mdp.transition(a);
  }
  return Distribution(next.transpose(), kSimplexTolArithmetic);
}

std::pair<Distribution, Vector> gamma2(const MFGModel& model,
                                       const GramMatrix& gram, const Policy& pi,
                                       const Distribution& L) {
  const EmbeddedMeanField mu = embed(gram, L);
  // lambda does not enter the dynamics; instantiate with the unregularized MDP.
  const InstantiatedMDP mdp = instantiate(model, L, mu.values, 0.0);
  Distribution next = mean_field_step(mdp, pi, L);
  Vector values = gram.matrix() * next.weights();
  return {std::move(next), std::move(values)};
}

}  // namespace mfg
