#pragma once

#include "mfg/common.hpp"
#include "mfg/model.hpp"

namespace mfg {

/// Bounded kernels on the state support: k(s, s) <= 1 for all three kinds.
/// The identity kernel recovers the raw mean-field setting (Gram = I on a
/// duplicate-free support).
struct Kernel {
  enum class Kind { Identity, Gaussian, Laplace };

  Kind kind = Kind::Gaussian;
  double param = 1.0;  // bandwidth (gaussian) or scale (laplace); unused for identity

  static Kernel identity() { return {Kind::Identity, 0.0}; }
  static Kernel gaussian(double bandwidth);
  static Kernel laplace(double scale);

  double operator()(const Eigen::RowVectorXd& x,
                    const Eigen::RowVectorXd& y) const;
};

/// Kernel matrix over the state support; symmetric PSD with diagonal <= 1.
class GramMatrix {
 public:
  GramMatrix(Matrix k, const StateSpace& states);

  const Matrix& matrix() const { return k_; }
  int size() const { return static_cast<int>(k_.rows()); }
  double min_eigenvalue() const { return min_eig_; }

 private:
  Matrix k_;
  double min_eig_;
};

/// A finite-support mean embedding, stored as the distribution together with
/// its evaluations Gram * L at the support points.
struct EmbeddedMeanField {
  Distribution law;
  Vector values;  // Gram * weights
  double norm;    // sqrt(L' K L)
};

GramMatrix gram(const Kernel& kernel, const StateSpace& states);

EmbeddedMeanField embed(const GramMatrix& gram, const Distribution& L);

/// MMD between embedded distributions: sqrt((L - L')' K (L - L')).
double rkhs_distance(const GramMatrix& gram, const Distribution& L,
                     const Distribution& Lp);

/// Same quadratic form on raw weight vectors (used for averaged iterates,
/// which are convex combinations and so still live on the simplex).
double rkhs_distance(const GramMatrix& gram, const Vector& w, const Vector& wp);

}  // namespace mfg
