#include "doctest.h"

#include <cmath>
#include <random>

#include "mfg/diagnostics.hpp"
#include "mfg/generators.hpp"

using namespace mfg;

namespace {

Instance zero_coupling_instance() {
  GeneratorSpec spec;
  spec.coupling = 0.0;
  return generate_instance(spec);
}

}  // namespace

TEST_CASE("policy distance basics") {
  const Distribution rho = Distribution::uniform(2);
  const Policy a = Policy::uniform(2, 3);
  CHECK(distance_d(a, a, rho) == 0.0);
  CHECK(distance_w(a, a, rho) == 0.0);

  Matrix left(2, 2), right(2, 2);
  left << 1.0, 0.0, 1.0, 0.0;
  right << 0.0, 1.0, 0.0, 1.0;
  CHECK(distance_d(Policy(left), Policy(right), rho) == 2.0);
  CHECK(distance_w(Policy(left), Policy(right), rho) == 2.0);
}

TEST_CASE("weighted policy distance matches the hand computation") {
  Vector w(2);
  w << 0.25, 0.75;
  const Distribution rho(w);
  Matrix a(2, 2), b(2, 2);
  a << 0.6, 0.4, 0.2, 0.8;
  b << 0.5, 0.5, 0.9, 0.1;
  // rows contribute |0.1|+|0.1| = 0.2 and |0.7|+|0.7| = 1.4
  CHECK(distance_d(Policy(a), Policy(b), rho) ==
        doctest::Approx(0.25 * 0.2 + 0.75 * 1.4).epsilon(1e-15));
  CHECK(distance_w(Policy(a), Policy(b), rho) ==
        doctest::Approx(std::sqrt(0.25 * 0.04 + 0.75 * 1.96)).epsilon(1e-15));
}

TEST_CASE("D is dominated by W for random pairs") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 4);
    const int m = 2 + static_cast<int>(rng() % 3);
    Matrix a(n, m), b(n, m);
    for (int s = 0; s < n; ++s) {
      a.row(s) = random_simplex(rng, m).transpose();
      b.row(s) = random_simplex(rng, m).transpose();
    }
    const Distribution rho(random_simplex(rng, n));
    CHECK(distance_d(a, b, rho) <= distance_w(a, b, rho) + 1e-12);
  }
}

TEST_CASE("closed-form constants at the golden parameter point") {
  // gamma = 0.5, lambda = 1, m = 2, eta = 0.1, R_max = 1
  AssumptionEstimates est;
  const DiagnosticsConstants c =
      DiagnosticsConstants::compute(2, 0.5, 1.0, 0.1, 1.0, est);
  CHECK(c.q_max == doctest::Approx(2.0 + std::log(2.0)).epsilon(1e-15));
  CHECK(c.kl_max == doctest::Approx(std::log(20.0)).epsilon(1e-15));
  CHECK(c.kappa == doctest::Approx(8.0 * std::log(20.0) + 4.0).epsilon(1e-15));
  CHECK(c.d_bar == 1.0);
  CHECK_THROWS_AS(DiagnosticsConstants::compute(2, 0.5, 1.0, 0.7, 1.0, est),
                  BadParams);
}

TEST_CASE("mixing bound: uniform case and exact point-mass equality") {
  const Vector u = Vector::Constant(2, 0.5);
  const MixDiffReport uniform_rep = check_mix_diff_bound(u, u, 0.2);
  CHECK(uniform_rep.pass);
  CHECK(uniform_rep.lhs1 == doctest::Approx(0.0));

  Vector p(2), p_star(2);
  p << 1.0, 0.0;
  p_star << 0.0, 1.0;
  const MixDiffReport rep = check_mix_diff_bound(p_star, p, 0.5);
  // p_hat = (0.75, 0.25), so KL(p*||p_hat) = log 4 = the log(m/eta) bound
  CHECK(rep.lhs1 == doctest::Approx(std::log(4.0)).epsilon(1e-15));
  CHECK(rep.bound1 == doctest::Approx(std::log(4.0)).epsilon(1e-15));
  CHECK(rep.pass);
}

TEST_CASE("mixing bound holds on random triples") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> eta_dist(1e-4, 0.5);
  for (int trial = 0; trial < 1000; ++trial) {
    const int m = 2 + static_cast<int>(rng() % 5);
    const MixDiffReport rep = check_mix_diff_bound(
        random_simplex(rng, m), random_simplex(rng, m), eta_dist(rng));
    CHECK(rep.pass);
  }
}

TEST_CASE("KL Lipschitz bound: degenerate, hand-built, and random cases") {
  Vector x(2), y(2), z(2);
  x << 0.5, 0.5;
  z << 0.3, 0.7;
  CHECK(check_mix_kl_lipschitz(x, x, z, 0.1, 0.1));

  y << 0.8, 0.2;
  // floors: x,y >= 0.2, z >= 0.3
  CHECK(check_mix_kl_lipschitz(x, y, z, 0.2, 0.3));

  Vector low(2);
  low << 0.05, 0.95;
  CHECK_THROWS_AS(check_mix_kl_lipschitz(low, y, z, 0.2, 0.3),
                  PreconditionViolated);

  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 1000; ++trial) {
    const int m = 2 + static_cast<int>(rng() % 4);
    const double a1 = 0.4 / m, a2 = 0.25 / m;
    const auto floored = [&](double floor) {
      Vector v = random_simplex(rng, m);
      return Vector((1.0 - floor * m) * v + Vector::Constant(m, floor));
    };
    const Vector xs = floored(a1), ys = floored(a1), zs = floored(a2);
    CHECK(check_mix_kl_lipschitz(xs, ys, zs, a1, a2));
  }
}

TEST_CASE("one-step mirror-descent inequality on random draws") {
  std::mt19937_64 rng(44);
  std::uniform_real_distribution<double> g_dist(-4.0, 4.0);
  std::uniform_real_distribution<double> a_dist(1e-3, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const int m = 2 + static_cast<int>(rng() % 5);
    Vector g(m);
    for (int i = 0; i < m; ++i) g(i) = g_dist(rng);
    CHECK(check_one_step_md(random_simplex(rng, m), random_simplex(rng, m), g,
                            a_dist(rng)));
  }
}

TEST_CASE("sigma metrics vanish at the equilibrium") {
  const Instance instance = generate_instance(GeneratorSpec{});
  const GramMatrix gm = gram(instance.kernel, instance.model.states());
  const NESolution ne = compute_ne(instance.model, gm, 0.5, 1e-11);

  // policy fixed point of the improvement step at the NE, eta = 0
  const Vector mu = gm.matrix() * ne.mean_field.weights();
  const InstantiatedMDP mdp = instantiate(instance.model, ne.mean_field, mu, 0.5);
  const QFunction q = evaluate_policy_exact(mdp, ne.policy).q;
  const Policy improved = improvement_step(ne.policy, q, 0.2, 0.5, 0.0);
  const Policy opt = soft_value_iteration(mdp, 1e-12).policy;
  const SigmaMetrics metrics = sigma_metrics(
      gm, ne.mean_field, ne.mean_field, opt, improved, ne.visitation_star);
  CHECK(metrics.sigma_mu == 0.0);
  CHECK(metrics.sigma_pi < 1e-10);
}

TEST_CASE("trace diagnostics can be recomputed from the recorded iterates") {
  const Instance instance = generate_instance(GeneratorSpec{});
  const GramMatrix gm = gram(instance.kernel, instance.model.states());
  const NESolution ne = compute_ne(instance.model, gm, 0.5, 1e-11);
  const Schedule schedule = Schedule::make(0.5, 25, Mode::D);
  Evaluator evaluator(EvaluatorConfig::exact());
  const IterateTrace trace =
      run(instance.model, gm, schedule, evaluator, Policy::uniform(16, 3),
          instance.model.nu0(), &ne, DiagnosticsLevel::Full);

  for (int t = 10; t <= 12; ++t) {
    const Distribution L_prev(trace.records[t - 1].mean_field, 1e-9);
    const Distribution L_t(trace.records[t].mean_field, 1e-9);
    const Policy pi_t(trace.records[t].policy, 1e-9);
    // recompute sigma_mu directly and sigma_pi through a fresh MDP solve
    CHECK(trace.records[t].sigma_mu ==
          doctest::Approx(rkhs_distance(gm, L_t, ne.mean_field))
              .epsilon(1e-12));
    const Vector mu_prev = gm.matrix() * L_prev.weights();
    const InstantiatedMDP mdp =
        instantiate(instance.model, L_prev, mu_prev, 0.5);
    const Policy opt = soft_value_iteration(mdp, 1e-10).policy;
    const Distribution rho = visitation(mdp, opt);
    const SigmaMetrics metrics =
        sigma_metrics(gm, L_t, ne.mean_field, opt, pi_t, rho);
    CHECK(trace.records[t].sigma_pi ==
          doctest::Approx(metrics.sigma_pi).epsilon(1e-10));
    CHECK(trace.records[t].dist_d ==
          doctest::Approx(distance_d(pi_t, opt, ne.visitation_star))
              .epsilon(1e-10));
  }
}

TEST_CASE("zero coupling zeroes the mu-sensitivity constants") {
  const Instance instance = zero_coupling_instance();
  const GramMatrix gm = gram(instance.kernel, instance.model.states());
  const AssumptionEstimates est =
      estimate_lipschitz(instance.model, gm, 0.5, 40, 5);
  CHECK(est.d1 < 1e-10);  // Gamma1 ignores mu entirely
  CHECK(est.d0 < 1e-10);  // so do the induced visitations
  CHECK(est.d2 > 0.0);
  // Gamma2 still moves mu's own distribution, so d3 is the transfer-operator
  // constant of the chain, not zero
  CHECK(est.d3 > 0.1);
  CHECK(est.d3 < 1.0);
}

TEST_CASE("lipschitz estimates are monotone in the number of pairs") {
  const Instance instance = generate_instance(GeneratorSpec{});
  const GramMatrix gm = gram(instance.kernel, instance.model.states());
  const AssumptionEstimates small =
      estimate_lipschitz(instance.model, gm, 0.5, 30, 9);
  const AssumptionEstimates large =
      estimate_lipschitz(instance.model, gm, 0.5, 60, 9);
  CHECK(large.d0 >= small.d0);
  CHECK(large.d1 >= small.d1);
  CHECK(large.d2 >= small.d2);
  CHECK(large.d3 >= small.d3);
}

TEST_CASE("composite map is as Lipschitz as its parts predict") {
  const Instance instance = generate_instance(GeneratorSpec{});
  const GramMatrix gm = gram(instance.kernel, instance.model.states());
  const AssumptionEstimates est =
      estimate_lipschitz(instance.model, gm, 0.5, 120, 13);
  const double composite =
      estimate_lambda_lipschitz(instance.model, gm, 0.5, 120, 14);
  CHECK(composite <= est.d1 * est.d2 + est.d3 + 0.05);
}

TEST_CASE("coupling strengthens the mu-sensitivity it feeds") {
  // crowding couples through rewards: d1 grows with c
  double previous = -1.0;
  for (double c : {0.1, 0.2, 0.4}) {
    GeneratorSpec spec;
    spec.coupling = c;
    const Instance instance = generate_instance(spec);
    const GramMatrix gm = gram(instance.kernel, instance.model.states());
    const AssumptionEstimates est =
        estimate_lipschitz(instance.model, gm, 0.5, 60, 17);
    CHECK(est.d1 > previous);
    previous = est.d1;
  }
  // random_contractive couples rewards and transitions to mu; the policy
  // response d1 again grows with c (d3 is dominated by the c-independent
  // base-transfer part there)
  previous = -1.0;
  for (double c : {0.1, 0.2, 0.4}) {
    GeneratorSpec spec;
    spec.kind = "random_contractive";
    spec.n = 6;
    spec.m = 3;
    spec.coupling = c;
    const Instance instance = generate_instance(spec);
    const GramMatrix gm = gram(instance.kernel, instance.model.states());
    const AssumptionEstimates est =
        estimate_lipschitz(instance.model, gm, 0.5, 60, 19);
    CHECK(est.d1 > previous);
    previous = est.d1;
  }
}

TEST_CASE("concentrability ratios collapse to one without coupling") {
  const Instance instance = zero_coupling_instance();
  const GramMatrix gm = gram(instance.kernel, instance.model.states());
  const NESolution ne = compute_ne(instance.model, gm, 0.5, 1e-10);
  const auto [c_rho, c_rho_bar] = estimate_concentrability(
      instance.model, gm, 0.5, ne.visitation_star, 40, 23);
  CHECK(c_rho == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(c_rho_bar == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("degenerate weighting is rejected in sup-ratio mode") {
  const Instance instance = generate_instance(GeneratorSpec{});
  const GramMatrix gm = gram(instance.kernel, instance.model.states());
  Vector w = Vector::Zero(16);
  w(0) = 1.0;
  CHECK_THROWS_AS(estimate_concentrability(instance.model, gm, 0.5,
                                           Distribution(w), 5, 3, Mode::D),
                  DegenerateNu0);
  CHECK_NOTHROW(estimate_concentrability(instance.model, gm, 0.5,
                                         Distribution(w), 5, 3, Mode::W));
}

TEST_CASE("recursion checker needs full diagnostics") {
  const Instance instance = generate_instance(GeneratorSpec{});
  const GramMatrix gm = gram(instance.kernel, instance.model.states());
  const NESolution ne = compute_ne(instance.model, gm, 0.5, 1e-10);
  const Schedule schedule = Schedule::make(0.5, 10, Mode::D);
  Evaluator evaluator(EvaluatorConfig::exact());
  const IterateTrace endpoint_trace =
      run(instance.model, gm, schedule, evaluator, Policy::uniform(16, 3),
          instance.model.nu0(), &ne, DiagnosticsLevel::Endpoint);
  AssumptionEstimates est;
  const DiagnosticsConstants constants =
      DiagnosticsConstants::compute(3, 0.9, 0.5, schedule.eta, 1.0, est);
  CHECK_THROWS_AS(
      check_recursions(endpoint_trace, constants, est, schedule, 0.0),
      MissingDiagnostics);
}

TEST_CASE("recursion inequalities hold on a short exact run") {
  const Instance instance = generate_instance(GeneratorSpec{});
  const GramMatrix gm = gram(instance.kernel, instance.model.states());
  const NESolution ne = compute_ne(instance.model, gm, 0.5, 1e-11);
  const Schedule schedule = Schedule::make(0.5, 60, Mode::D);
  Evaluator evaluator(EvaluatorConfig::exact());
  const IterateTrace trace =
      run(instance.model, gm, schedule, evaluator, Policy::uniform(16, 3),
          instance.model.nu0(), &ne, DiagnosticsLevel::Full);

  AssumptionEstimates est = estimate_lipschitz(instance.model, gm, 0.5, 100,
                                               29, Mode::D,
                                               ne.visitation_star);
  const auto [c_rho, c_rho_bar] = estimate_concentrability(
      instance.model, gm, 0.5, ne.visitation_star, 100, 31);
  est.c_rho = c_rho;
  est.c_rho_bar = c_rho_bar;
  const DiagnosticsConstants constants =
      DiagnosticsConstants::compute(3, 0.9, 0.5, schedule.eta, 1.0, est);
  const RecursionReport report =
      check_recursions(trace, constants, est, schedule, 0.0);
  CHECK(report.checked == 59);
  CHECK(report.satisfied_fraction >= 0.95);
}
