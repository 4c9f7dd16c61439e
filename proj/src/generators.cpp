#include "mfg/generators.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace mfg {

namespace {

Matrix clamp_reward(const Matrix& base, const Vector& congestion, double c,
                    double r_max) {
  Matrix r = base;
  r.colwise() -= c * congestion;
  return r.cwiseMax(0.0).cwiseMin(r_max);
}

// Action-directed grid moves: the intended displacement happens with
// probability 1 - slip, each alternative with slip / (m - 1), and the agent
// resamples uniformly with probability `jump` (exogenous churn).
// targets_flat[s * m + a] is the destination of action a from state s;
// boundary handling (clamping or wrapping) is already baked into it.
// Without churn a local-move chain mixes in O(n^2) steps and the mean-field
// transfer operator is not a contraction in the RKHS metric; the uniform
// component cancels in differences and scales it by 1 - jump.
std::vector<Matrix> directed_moves(int n, const std::vector<int>& targets_flat,
                                   int m, double slip, double jump) {
  std::vector<Matrix> p(m, Matrix::Constant(n, n, jump / n));
  for (int s = 0; s < n; ++s) {
    for (int a = 0; a < m; ++a) {
      for (int b = 0; b < m; ++b) {
        const double prob = (b == a) ? 1.0 - slip : slip / (m - 1);
        p[a](s, targets_flat[s * m + b]) += (1.0 - jump) * prob;
      }
    }
  }
  return p;
}

Instance make_crowding(const GeneratorSpec& spec, std::optional<Kernel> kernel) {
  if (spec.n < 2) throw BadParams("crowding: n < 2");
  if (!(spec.slip >= 0.0 && spec.slip < 1.0))
    throw BadParams("crowding: slip outside [0, 1)");
  if (!(spec.jump >= 0.0 && spec.jump < 1.0))
    throw BadParams("crowding: jump outside [0, 1)");
  if (spec.coupling < 0.0) throw BadParams("crowding: coupling < 0");
  if (spec.dims != 1 && spec.dims != 2)
    throw BadParams("crowding: dims must be 1 or 2");

  const int side = spec.n;
  const int n = spec.dims == 1 ? side : side * side;
  const int m = spec.dims == 1 ? 3 : 5;
  const double width =
      spec.reward_width > 0.0 ? spec.reward_width : std::max(1.0, side / 5.0);

  Matrix points(n, spec.dims);
  if (spec.dims == 1) {
    for (int i = 0; i < n; ++i) points(i, 0) = i;
  } else {
    for (int i = 0; i < side; ++i)
      for (int j = 0; j < side; ++j) {
        points(i * side + j, 0) = i;
        points(i * side + j, 1) = j;
      }
  }

  const double goal = (side - 1) / 2.0;
  Matrix base(n, m);
  std::vector<int> targets(static_cast<std::size_t>(n) * m);
  const int stay_action = spec.dims == 1 ? 1 : 0;
  for (int s = 0; s < n; ++s) {
    double dist2 = 0.0;
    for (int d = 0; d < spec.dims; ++d) {
      const double delta = points(s, d) - goal;
      dist2 += delta * delta;
    }
    const double attraction =
        0.25 + 0.5 * std::exp(-dist2 / (2.0 * width * width));
    for (int a = 0; a < m; ++a)
      base(s, a) = attraction + (a == stay_action ? 0.15 : 0.0);

    if (spec.dims == 1) {
      const int i = s;
      const int moves[3] = {-1, 0, 1};
      for (int a = 0; a < 3; ++a)
        targets[s * m + a] = std::clamp(i + moves[a], 0, side - 1);
    } else {
      const int i = s / side, j = s % side;
      const int di[5] = {0, 1, -1, 0, 0};
      const int dj[5] = {0, 0, 0, 1, -1};
      for (int a = 0; a < 5; ++a)
        targets[s * m + a] = std::clamp(i + di[a], 0, side - 1) * side +
                             std::clamp(j + dj[a], 0, side - 1);
    }
  }
  if (base.maxCoeff() > spec.r_max)
    throw BadParams("crowding: base reward exceeds r_max");

  std::vector<Matrix> transition =
      directed_moves(n, targets, m, spec.slip, spec.jump);
  const double coupling = spec.coupling;
  const double r_max = spec.r_max;
  ResponseFn respond = [base, transition, coupling,
                        r_max](const Vector&, const Vector& embedded) {
    return MdpTables{clamp_reward(base, embedded, coupling, r_max), transition};
  };

  GeneratorSpec recorded = spec;
  recorded.m = m;
  recorded.reward_width = width;
  MFGModel model(StateSpace(std::move(points)), ActionSpace(m), spec.gamma,
                 spec.r_max, Distribution::uniform(n), std::move(respond));
  return {std::move(model), kernel.value_or(Kernel::gaussian(2.0)), recorded};
}

Instance make_random_contractive(const GeneratorSpec& spec,
                                 std::optional<Kernel> kernel) {
  if (spec.n < 2 || spec.m < 2)
    throw BadParams("random_contractive: need n >= 2, m >= 2");
  if (!(spec.coupling >= 0.0 && spec.coupling <= 1.0))
    throw BadParams("random_contractive: coupling outside [0, 1]");
  const int n = spec.n;
  const int m = spec.m;

  Matrix points(n, 1);
  for (int i = 0; i < n; ++i) points(i, 0) = i;

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> base_dist(0.2 * spec.r_max,
                                                   0.8 * spec.r_max);
  std::uniform_real_distribution<double> coef_dist(-1.0, 1.0);
  Matrix base(n, m), coef(n, m);
  for (int s = 0; s < n; ++s)
    for (int a = 0; a < m; ++a) {
      base(s, a) = base_dist(rng);
      coef(s, a) = coef_dist(rng);
    }
  std::vector<Matrix> p0(m, Matrix(n, n)), p1(m, Matrix(n, n));
  for (int a = 0; a < m; ++a)
    for (int s = 0; s < n; ++s) {
      p0[a].row(s) = random_simplex(rng, n).transpose();
      p1[a].row(s) = random_simplex(rng, n).transpose();
    }

  const double coupling = spec.coupling;
  const double r_max = spec.r_max;
  ResponseFn respond = [base, coef, p0, p1, coupling, r_max, n,
                        m](const Vector&, const Vector& embedded) {
    MdpTables tables;
    tables.reward = (base + coupling * r_max *
                                coef.cwiseProduct(embedded.replicate(1, m)))
                        .cwiseMax(0.0)
                        .cwiseMin(r_max);
    tables.transition.reserve(m);
    for (int a = 0; a < m; ++a) {
      Matrix p(n, n);
      for (int s = 0; s < n; ++s) {
        const double w = coupling * std::clamp(embedded(s), 0.0, 1.0);
        p.row(s) = (1.0 - w) * p0[a].row(s) + w * p1[a].row(s);
      }
      tables.transition.push_back(std::move(p));
    }
    return tables;
  };

  MFGModel model(StateSpace(std::move(points)), ActionSpace(m), spec.gamma,
                 spec.r_max, Distribution::uniform(n), std::move(respond));
  return {std::move(model),
          kernel.value_or(Kernel::gaussian(std::max(2.0, n / 4.0))), spec};
}

Instance make_torus_nav(const GeneratorSpec& spec,
                        std::optional<Kernel> kernel) {
  if (spec.n < 3) throw BadParams("torus_nav: need side >= 3");
  if (!(spec.slip >= 0.0 && spec.slip < 1.0))
    throw BadParams("torus_nav: slip outside [0, 1)");
  if (!(spec.jump >= 0.0 && spec.jump < 1.0))
    throw BadParams("torus_nav: jump outside [0, 1)");
  if (spec.coupling < 0.0) throw BadParams("torus_nav: coupling < 0");
  if (spec.dims != 1 && spec.dims != 2)
    throw BadParams("torus_nav: dims must be 1 or 2");

  const int side = spec.n;
  const int n = spec.dims == 1 ? side : side * side;
  const int m = spec.dims == 1 ? 3 : 5;
  const double width =
      spec.reward_width > 0.0 ? spec.reward_width : std::max(1.0, side / 4.0);
  const double radius = side / (2.0 * std::numbers::pi);

  // Embed each periodic coordinate on a circle so kernel distances respect
  // the wraparound geometry.
  Matrix points(n, 2 * spec.dims);
  const auto angle = [&](int i) { return 2.0 * std::numbers::pi * i / side; };
  const auto ring_gap = [&](int i) {
    return static_cast<double>(std::min(i, side - i));
  };

  Matrix base(n, m);
  std::vector<int> targets(static_cast<std::size_t>(n) * m);
  const auto wrap = [&](int i) { return ((i % side) + side) % side; };
  for (int s = 0; s < n; ++s) {
    const int i = spec.dims == 1 ? s : s / side;
    const int j = spec.dims == 1 ? 0 : s % side;
    points(s, 0) = radius * std::cos(angle(i));
    points(s, 1) = radius * std::sin(angle(i));
    if (spec.dims == 2) {
      points(s, 2) = radius * std::cos(angle(j));
      points(s, 3) = radius * std::sin(angle(j));
    }

    double dist2 = ring_gap(i) * ring_gap(i);
    if (spec.dims == 2) dist2 += ring_gap(j) * ring_gap(j);
    const double attraction =
        0.2 + 0.6 * std::exp(-dist2 / (2.0 * width * width));
    for (int a = 0; a < m; ++a)
      base(s, a) = attraction - (a == 0 ? 0.0 : 0.05);

    if (spec.dims == 1) {
      const int moves[3] = {0, 1, -1};
      for (int a = 0; a < 3; ++a) targets[s * m + a] = wrap(i + moves[a]);
    } else {
      const int di[5] = {0, 1, -1, 0, 0};
      const int dj[5] = {0, 0, 0, 1, -1};
      for (int a = 0; a < 5; ++a)
        targets[s * m + a] = wrap(i + di[a]) * side + wrap(j + dj[a]);
    }
  }

  std::vector<Matrix> transition =
      directed_moves(n, targets, m, spec.slip, spec.jump);
  const double coupling = spec.coupling;
  const double r_max = spec.r_max;
  ResponseFn respond = [base, transition, coupling,
                        r_max](const Vector&, const Vector& embedded) {
    return MdpTables{clamp_reward(base, embedded, coupling, r_max), transition};
  };

  GeneratorSpec recorded = spec;
  recorded.m = m;
  recorded.reward_width = width;
  MFGModel model(StateSpace(std::move(points)), ActionSpace(m), spec.gamma,
                 spec.r_max, Distribution::uniform(n), std::move(respond));
  return {std::move(model), kernel.value_or(Kernel::gaussian(2.0)), recorded};
}

}  // namespace

Instance generate_instance(const GeneratorSpec& spec,
                           std::optional<Kernel> kernel) {
  if (!(spec.gamma > 0.0 && spec.gamma < 1.0))
    throw BadParams("generate_instance: gamma outside (0, 1)");
  if (!(spec.r_max > 0.0)) throw BadParams("generate_instance: r_max <= 0");
  if (spec.kind == "crowding") return make_crowding(spec, kernel);
  if (spec.kind == "random_contractive")
    return make_random_contractive(spec, kernel);
  if (spec.kind == "torus_nav") return make_torus_nav(spec, kernel);
  throw BadParams("generate_instance: unknown kind \"" + spec.kind + "\"");
}

}  // namespace mfg
