#pragma once

#include <Eigen/Dense>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace mfg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kSimplexTolConstruct = 1e-12;  // fresh inputs
inline constexpr double kSimplexTolArithmetic = 1e-10; // accumulated sums

// Error taxonomy surfaced through the CLI exit codes: config errors exit 2,
// numerical failures exit 3, failed contraction exits 4.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidModel : Error {
  using Error::Error;
};
struct NonPsd : Error {
  using Error::Error;
};
struct DegeneratePolicy : Error {
  using Error::Error;
};
struct SolveFailure : Error {
  using Error::Error;
};
struct ConvergenceFailure : Error {
  using Error::Error;
};
struct StepTooLarge : Error {
  using Error::Error;
};
struct NumericalFailure : Error {
  using Error::Error;
};
struct NoContraction : Error {
  using Error::Error;
};
struct MissingDiagnostics : Error {
  using Error::Error;
};
struct PreconditionViolated : Error {
  using Error::Error;
};
struct DegenerateNu0 : Error {
  using Error::Error;
};
struct BadParams : Error {
  using Error::Error;
};
struct BadTrace : Error {
  using Error::Error;
};

inline double nan_value() { return std::numeric_limits<double>::quiet_NaN(); }
inline double infinity() { return std::numeric_limits<double>::infinity(); }

/// log(sum_i exp(x_i)) with max-subtraction so small regularization
/// parameters cannot overflow the exponentials.
template <typename Derived>
double log_sum_exp(const Eigen::MatrixBase<Derived>& x) {
  const double m = x.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((x.array() - m).exp().sum());
}

/// KL(p || q) over a finite alphabet. Terms with p_i = 0 contribute zero;
/// q_i = 0 with p_i > 0 yields +infinity.
template <typename DerivedP, typename DerivedQ>
double kl_divergence(const Eigen::MatrixBase<DerivedP>& p,
                     const Eigen::MatrixBase<DerivedQ>& q) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double pi = p(i);
    if (pi <= 0.0) continue;
    const double qi = q(i);
    if (qi <= 0.0) return infinity();
    acc += pi * std::log(pi / qi);
  }
  return acc;
}

/// Shannon entropy -sum p log p, with 0 log 0 = 0.
template <typename Derived>
double entropy(const Eigen::MatrixBase<Derived>& p) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double pi = p(i);
    if (pi > 0.0) acc -= pi * std::log(pi);
  }
  return acc;
}

/// Flat-Dirichlet sample (uniform over the simplex) via normalized
/// exponentials.
inline Vector random_simplex(std::mt19937_64& rng, Eigen::Index n) {
  std::exponential_distribution<double> exp1(1.0);
  Vector w(n);
  for (Eigen::Index i = 0; i < n; ++i) w(i) = exp1(rng);
  w /= w.sum();
  return w;
}

/// Mixes a base seed with a stream index so sample loops stay reproducible
/// regardless of iteration order (splitmix64 finalizer).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Shortest round-trip decimal form; keeps trace files byte-stable across
/// reruns with identical seeds.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace mfg
