#include "mfg/kernel.hpp"

#include <cmath>

namespace mfg {

namespace {
constexpr double kPsdTol = -1e-9;  // on the minimum Gram eigenvalue
}

Kernel Kernel::gaussian(double bandwidth) {
  if (!(bandwidth > 0.0)) throw BadParams("gaussian kernel: bandwidth <= 0");
  return {Kind::Gaussian, bandwidth};
}

Kernel Kernel::laplace(double scale) {
  if (!(scale > 0.0)) throw BadParams("laplace kernel: scale <= 0");
  return {Kind::Laplace, scale};
}

double Kernel::operator()(const Eigen::RowVectorXd& x,
                          const Eigen::RowVectorXd& y) const {
  switch (kind) {
    case Kind::Identity:
      return (x - y).norm() == 0.0 ? 1.0 : 0.0;
    case Kind::Gaussian: {
      const double d2 = (x - y).squaredNorm();
      return std::exp(-d2 / (2.0 * param * param));
    }
    case Kind::Laplace:
      return std::exp(-(x - y).norm() / param);
  }
  throw BadParams("unknown kernel kind");
}

GramMatrix::GramMatrix(Matrix k, const StateSpace& states) : k_(std::move(k)) {
  if (k_.rows() != k_.cols() || k_.rows() != states.size())
    throw InvalidModel("GramMatrix: shape mismatch with state space");
  const double asym = (k_ - k_.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12) throw NonPsd("GramMatrix: not symmetric");
  k_ = 0.5 * (k_ + k_.transpose()).eval();
  if (k_.diagonal().maxCoeff() > 1.0 + 1e-12)
    throw NonPsd("GramMatrix: diagonal exceeds 1 (kernel not bounded)");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(k_, Eigen::EigenvaluesOnly);
  min_eig_ = eig.eigenvalues().minCoeff();
  if (min_eig_ < kPsdTol)
    throw NonPsd("GramMatrix: min eigenvalue " + format_double(min_eig_));
}

GramMatrix gram(const Kernel& kernel, const StateSpace& states) {
  const int n = states.size();
  Matrix k(n, n);
  for (int i = 0; i < n; ++i) {
    k(i, i) = kernel(states.point(i), states.point(i));
    for (int j = i + 1; j < n; ++j) {
      const double v = kernel(states.point(i), states.point(j));
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return GramMatrix(std::move(k), states);
}

EmbeddedMeanField embed(const GramMatrix& gram, const Distribution& L) {
  if (L.size() != gram.size()) throw InvalidModel("embed: dimension mismatch");
  Vector values = gram.matrix() * L.weights();
  const double sq = L.weights().dot(values);
  const double norm = std::sqrt(std::max(0.0, sq));
  if (norm > 1.0 + 1e-12)
    throw NonPsd("embed: ||mu||_H = " + format_double(norm) +
                 " exceeds the bounded-kernel limit");
  return {L, std::move(values), norm};
}

double rkhs_distance(const GramMatrix& gram, const Vector& w,
                     const Vector& wp) {
  const Vector d = w - wp;
  const double sq = d.dot(gram.matrix() * d);
  if (sq < -1e-9)
    throw NonPsd("rkhs_distance: negative quadratic form " + format_double(sq));
  return std::sqrt(std::max(0.0, sq));
}

double rkhs_distance(const GramMatrix& gram, const Distribution& L,
                     const Distribution& Lp) {
  return rkhs_distance(gram, L.weights(), Lp.weights());
}

}  // namespace mfg
