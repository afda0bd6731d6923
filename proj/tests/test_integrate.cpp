#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "diracvar/integrate.hpp"
#include "test_support.hpp"

using namespace diracvar;
using namespace testing_support;

namespace {

ScalarField half_norm(const Chart& c) {
  return make_scalar_field(c, [](const auto& x) {
    auto out = 0.5 * x(0) * x(0);
    for (int i = 1; i < static_cast<int>(x.size()); ++i) out += 0.5 * x(i) * x(i);
    return out;
  });
}

CourantSection oscillator_primitive() {
  return CourantSection(VectorField::zero(plane()), make_one_form_field(plane(), [](const auto& x) {
                          using T = S<decltype(x)>;
                          VecT<T> a(2);
                          a << T(0.0), 2.0 * x(0);
                          return a;
                        }));
}

Lagrangian free_particle(const Chart& base) {
  const int n = base.dim();
  return Lagrangian(base, make_scalar_field(tangent_chart(base), [n](const auto& z) {
                      auto out = 0.5 * z(n) * z(n);
                      for (int i = 1; i < n; ++i) out += 0.5 * z(n + i) * z(n + i);
                      return out;
                    }));
}

Lagrangian oscillator() {
  return Lagrangian(plane(), make_scalar_field(tangent_chart(plane()), [](const auto& z) {
                      return 0.5 * (z(2) * z(2) + z(3) * z(3)) - 0.5 * (z(0) * z(0) + z(1) * z(1));
                    }));
}

Lagrangian pendulum() {
  return Lagrangian(plane(), make_scalar_field(tangent_chart(plane()), [](const auto& z) {
                      return 0.5 * (z(2) * z(2) + z(3) * z(3)) - 9.81 * z(1);
                    }));
}

OneFormField larmor_theta(double B = 1.0) {
  return make_one_form_field(plane(), [B](const auto& x) {
    using T = S<decltype(x)>;
    VecT<T> a(2);
    a << -0.5 * B * x(1), 0.5 * B * x(0);
    return a;
  });
}

VecFn sphere_constraint(int n) {
  return VecFn::generic(n, 1, [n](const auto& x) {
    using T = S<decltype(x)>;
    VecT<T> out(1);
    out(0) = T(-0.5);
    for (int i = 0; i < n; ++i) out(0) += 0.5 * x(i) * x(i);
    return out;
  });
}

IntegratorConfig with_h(double h, Quadrature q = Quadrature::left) {
  IntegratorConfig cfg;
  cfg.h = h;
  cfg.quadrature = q;
  return cfg;
}

double arc_error(const DiscretePath& p) {
  double err = 0.0;
  for (int k = 0; k < p.node_count(); ++k) {
    const double t = p.times[k];
    err = std::max(err, (p.nodes[k] - vec({std::cos(t), -std::sin(t)})).norm());
  }
  return err;
}

}  // namespace

TEST(IntegratorConfig, Validation) {
  IntegratorConfig cfg;
  cfg.h = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg.h = 0.1;
  cfg.newton_tol = -1;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg.newton_tol = 1e-10;
  cfg.steps = {0.1, -0.2};
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(IntegratorConfig, StepSequence) {
  IntegratorConfig cfg;
  cfg.h = 0.3;
  const auto s = cfg.step_sequence(1.0);
  ASSERT_EQ(s.size(), 4u);
  EXPECT_DOUBLE_EQ(s[0], 0.25);
  cfg.h = 0.1;
  EXPECT_EQ(cfg.step_sequence(1.0).size(), 10u);
  cfg.steps = {0.1, 0.3, 0.05};
  EXPECT_EQ(cfg.step_sequence(1.0), cfg.steps);
}

TEST(DiracHamiltonian, OscillatorReturnsAfterOnePeriod) {
  const auto D = build_dirac_form(dxdy());
  const auto tr = integrate_dirac_hamiltonian(D, half_norm(plane()), vec({1, 0}), 2 * M_PI, with_h(1e-3));
  EXPECT_LT((tr.states.back() - vec({1, 0})).norm(), 1e-4);
  EXPECT_NEAR(tr.times.back(), 2 * M_PI, 1e-12);
  EXPECT_EQ(tr.states.size(), tr.diagnostics.size());
  for (std::size_t k = 1; k < tr.times.size(); ++k) ASSERT_GT(tr.times[k], tr.times[k - 1]);
  for (const auto& d : tr.diagnostics) {
    EXPECT_LT(d.membership_residual, 1e-8);
    EXPECT_EQ(d.kernel_dim, 0);
  }
}

TEST(DiracHamiltonian, OscillatorRotatesClockwise) {
  // x' = y, y' = -x.
  const auto D = build_dirac_form(dxdy());
  const Vec v = dirac_hamiltonian_vector(D, half_norm(plane()), vec({0.3, 0.7}), IntegratorConfig{});
  EXPECT_NEAR(v(0), 0.7, 1e-12);
  EXPECT_NEAR(v(1), -0.3, 1e-12);
}

TEST(DiracHamiltonian, QuadraticPoissonBlowUpFlow) {
  const auto D = build_dirac_poisson(x2_bivector());
  const auto H = make_scalar_field(plane(), [](const auto& x) { return x(1) + 0.0 * x(0); });
  const auto tr = integrate_dirac_hamiltonian(D, H, vec({1, 0}), 0.5, with_h(1e-3));
  EXPECT_NEAR(tr.states.back()(0), 2.0, 1e-5);
  EXPECT_NEAR(tr.states.back()(1), 0.0, 1e-14);
}

TEST(DiracHamiltonian, SingularLeafIsInvariant) {
  const auto D = build_dirac_poisson(mixed_bivector());
  const auto H = make_scalar_field(space4(), [](const auto& x) {
    return x(0) * x(0) * x(2) + 0.5 * x(1) * x(3) + 0.5 * (x(2) * x(2) + x(3) * x(3)) - x(0) * x(1);
  });
  const auto tr = integrate_dirac_hamiltonian(D, H, vec({0, 0, 0.5, -0.3}), 2.0, with_h(1e-2));
  double off = 0.0;
  for (const Vec& x : tr.states) off = std::max({off, std::abs(x(0)), std::abs(x(1))});
  EXPECT_LT(off, 1e-10);
  EXPECT_GT((tr.states.back() - tr.states.front()).norm(), 0.1);
}

TEST(DiracHamiltonian, RigidBodyEulerEquations) {
  const auto D = build_dirac_poisson(so3_bivector());
  const Vec I = vec({1, 2, 3});
  const auto H = make_scalar_field(space3(), [I](const auto& m) {
    return 0.5 * (m(0) * m(0) / I(0) + m(1) * m(1) / I(1) + m(2) * m(2) / I(2));
  });
  const Vec mu = vec({0.4, -0.7, 1.1});
  const Vec omega = mu.cwiseQuotient(I);
  const Vec expected = mu.head<3>().cross(omega.head<3>());
  EXPECT_LT((dirac_hamiltonian_vector(D, H, mu, IntegratorConfig{}) - expected).norm(), 1e-12);
}

TEST(DiracHamiltonian, CasimirDriftIsFourthOrder) {
  const auto D = build_dirac_poisson(so3_bivector());
  const auto H = make_scalar_field(space3(), [](const auto& m) {
    return 0.5 * (m(0) * m(0) + m(1) * m(1) / 2.0 + m(2) * m(2) / 3.0);
  });
  const auto C = make_scalar_field(space3(), [](const auto& m) { return m(0) * m(0) + m(1) * m(1) + m(2) * m(2); });
  const Vec m0 = vec({1, 0.5, 0.3});
  auto drift = [&](double h) {
    const auto tr = integrate_dirac_hamiltonian(D, H, m0, 10.0, with_h(h), {C});
    double d = 0.0;
    for (const auto& g : tr.diagnostics) d = std::max(d, std::abs(g.casimir_values.at(0) - C(m0)));
    return d;
  };
  const double ratio = drift(0.025) / drift(0.0125);
  EXPECT_GE(ratio, 12.0);
  EXPECT_LE(ratio, 20.0);
}

TEST(DiracHamiltonian, UnattainableAbortsNamingThePoint) {
  const auto g = VecFn::generic(2, 1, [](const auto& x) {
    using T = S<decltype(x)>;
    VecT<T> out(1);
    out(0) = x(1);
    return out;
  });
  const auto D = build_dirac_foliation(g, {VectorField::coordinate(plane(), 0)});
  const auto Hy = make_scalar_field(plane(), [](const auto& x) { return x(1) + 0.0 * x(0); });
  const auto tr = integrate_dirac_hamiltonian(D, Hy, vec({0.2, 0.4}), 0.1, with_h(0.01));
  EXPECT_EQ(tr.diagnostics.front().kernel_dim, 1);
  EXPECT_LT((tr.states.back() - vec({0.2, 0.4})).norm(), 1e-14);
  const auto Hx = make_scalar_field(plane(), [](const auto& x) { return x(0) + 0.0 * x(1); });
  try {
    integrate_dirac_hamiltonian(D, Hx, vec({0.2, 0.4}), 0.1, with_h(0.01));
    FAIL() << "expected AttainabilityError";
  } catch (const AttainabilityError& e) {
    EXPECT_NE(std::string(e.what()).find("0.2"), std::string::npos);
  }
}

TEST(DiracHamiltonian, ImplicitMidpointAccuracyAndReversibility) {
  const auto D = build_dirac_form(dxdy());
  const auto H = half_norm(plane());
  IntegratorConfig cfg = with_h(1e-2);
  cfg.method = Method::implicit_midpoint;
  const auto tr = integrate_dirac_hamiltonian(D, H, vec({1, 0}), 2 * M_PI, cfg);
  EXPECT_LT((tr.states.back() - vec({1, 0})).norm(), 1e-3);
  // The midpoint rule preserves quadratic invariants.
  for (const auto& d : tr.diagnostics) EXPECT_NEAR(d.H_value, 0.5, 1e-9);
  EXPECT_GT(tr.newton_iterations, 0);

  std::mt19937 rng(5);
  for (int i = 0; i < 20; ++i) {
    const Vec x = random_vec(2, rng);
    const Vec y = dirac_hamiltonian_step(D, H, x, 0.05, cfg);
    const Vec back = dirac_hamiltonian_step(D, H, y, -0.05, cfg);
    EXPECT_LT((back - x).cwiseAbs().maxCoeff(), 10 * cfg.newton_tol);
  }
}

TEST(DiscreteLagrangian, GradientMatchesFiniteDifferences) {
  std::mt19937 rng(99);
  const Lagrangian L(plane(), make_scalar_field(tangent_chart(plane()), [](const auto& z) {
                       return 0.5 * (1.0 + z(0) * z(0)) * z(2) * z(2) + 0.5 * z(3) * z(3) + z(2) * z(3) * sin(z(1)) -
                              cos(z(0) * z(1));
                     }));
  const auto theta = make_one_form_field(plane(), [](const auto& x) {
    using T = S<decltype(x)>;
    VecT<T> a(2);
    a << x(1) * x(1), sin(x(0));
    return a;
  });
  for (auto quad : {Quadrature::left, Quadrature::midpoint}) {
    const DiscreteLagrangian DL(L, theta, quad);
    for (int i = 0; i < 20; ++i) {
      const Vec a = random_vec(2, rng), b = a + 0.1 * random_vec(2, rng);
      const double h = 0.1;
      const Vec g = DL.gradient(a, b, h);
      Vec z(4);
      z << a, b;
      for (int j = 0; j < 4; ++j) {
        Vec zp = z, zm = z;
        zp(j) += 1e-6;
        zm(j) -= 1e-6;
        const double fd = (DL.value(zp.head(2), zp.tail(2), h) - DL.value(zm.head(2), zm.tail(2), h)) / 2e-6;
        EXPECT_NEAR(g(j), fd, 1e-7 * (1 + std::abs(fd)));
      }
    }
  }
}

TEST(MagneticStep, OscillatorEnergyBounded) {
  const auto run = integrate_variational(oscillator(), std::nullopt, std::nullopt, vec({1, 0}), vec({0, 1}), 100.0,
                                         with_h(0.01));
  ASSERT_EQ(run.positions.size(), 10001u);
  const double E0 = run.trajectory.diagnostics.front().H_value;
  double dE = 0.0;
  for (const auto& d : run.trajectory.diagnostics) dE = std::max(dE, std::abs(d.H_value - E0));
  EXPECT_LT(dE, 5e-3);
}

TEST(MagneticStep, LarmorCircle) {
  const auto run = integrate_variational(free_particle(plane()), larmor_theta(), std::nullopt, vec({1, 0}),
                                         vec({0, -1}), 2 * M_PI, with_h(1e-3));
  double err = 0.0;
  for (std::size_t k = 0; k < run.positions.size(); ++k) {
    const double t = run.trajectory.times[k];
    err = std::max(err, (run.positions[k] - vec({std::cos(t), -std::sin(t)})).norm());
  }
  EXPECT_LT(err, 1e-3);
}

TEST(MagneticStep, SolvesDiscreteEulerLagrange) {
  const DiscreteLagrangian DL(free_particle(plane()), larmor_theta(2.0), Quadrature::left);
  const Vec q0 = vec({0.3, 0.1}), q1 = vec({0.31, 0.12});
  ElStepResult info;
  const Vec q2 = magnetic_el_step(DL.lagrangian(), DL.theta(), q0, q1, 0.01, 0.02, IntegratorConfig{}, &info);
  EXPECT_LT((DL.D2(q0, q1, 0.01) + DL.D1(q1, q2, 0.02)).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE(info.residual, 1e-9);
}

TEST(MagneticStep, ObservedOrders) {
  auto endpoint_error = [](Quadrature q, double h) {
    const auto run = integrate_variational(oscillator(), std::nullopt, std::nullopt, vec({1, 0}), vec({0, 1}), 1.0,
                                           with_h(h, q));
    const Vec exact = vec({std::cos(1.0), std::sin(1.0), -std::sin(1.0), std::cos(1.0)});
    return (run.trajectory.states.back() - exact).norm();
  };
  const double left = std::log2(endpoint_error(Quadrature::left, 0.01) / endpoint_error(Quadrature::left, 0.005));
  const double mid =
      std::log2(endpoint_error(Quadrature::midpoint, 0.01) / endpoint_error(Quadrature::midpoint, 0.005));
  EXPECT_GE(left, 0.8);
  EXPECT_LE(left, 1.2);
  EXPECT_GE(mid, 1.7);
  EXPECT_LE(mid, 2.3);
}

TEST(MagneticStep, FirstStepMatchesContinuousMomentum) {
  const auto L = free_particle(plane());
  const auto theta = larmor_theta();
  const Vec q0 = vec({1, 0}), qd0 = vec({0, -1});
  const IntegratorConfig cfg = with_h(0.01);
  const auto run = integrate_variational(L, theta, std::nullopt, q0, qd0, 0.05, cfg);
  const DiscreteLagrangian DL(L, theta, cfg.quadrature);
  const Vec p0 = qd0 + theta(q0);
  EXPECT_LT((-DL.D1(q0, run.positions[1], 0.01) - p0).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((run.trajectory.states[0].tail(2) - p0).norm(), 1e-15);
}

TEST(ConstrainedStep, PendulumStaysOnCircleWithCorrectPeriod) {
  const double th0 = 0.05;
  const auto g = sphere_constraint(2);
  const auto run = integrate_variational(pendulum(), std::nullopt, g, vec({std::sin(th0), -std::cos(th0)}),
                                         vec({0, 0}), 5.0, with_h(1e-3));
  for (const Vec& q : run.positions) ASSERT_LE(std::abs(g(q)(0)), 1e-10);
  EXPECT_LE(run.max_constraint_drift, 1e-10);
  std::vector<double> crossings;
  for (std::size_t k = 1; k < run.positions.size(); ++k) {
    const double a = run.positions[k - 1](0), b = run.positions[k](0);
    if (a > 0 && b <= 0) crossings.push_back(run.trajectory.times[k - 1] + 1e-3 * a / (a - b));
  }
  ASSERT_GE(crossings.size(), 2u);
  const double linear = 2 * M_PI / std::sqrt(9.81);
  EXPECT_LT(std::abs(crossings[1] - crossings[0] - linear) / linear, 0.01);
}

TEST(ConstrainedStep, GeodesicOnSphere) {
  const Chart r3 = space3();
  const auto run = integrate_variational(free_particle(r3), std::nullopt, sphere_constraint(3), vec({1, 0, 0}),
                                         vec({0, 0.6, 0.8}), 1.0, with_h(1e-3));
  ASSERT_EQ(run.positions.size(), 1001u);
  double speed_dev = 0.0;
  for (std::size_t k = 0; k < run.positions.size(); ++k) {
    EXPECT_NEAR(run.positions[k].norm(), 1.0, 1e-10);
    if (k > 0) speed_dev = std::max(speed_dev, std::abs((run.positions[k] - run.positions[k - 1]).norm() / 1e-3 - 1.0));
  }
  EXPECT_LT(speed_dev, 1e-6);
}

TEST(ConstrainedStep, EmptyConstraintIsTheMagneticStep) {
  const auto L = free_particle(plane());
  const auto empty = VecFn::generic(2, 0, [](const auto& x) { return VecT<S<decltype(x)>>(0); });
  const IntegratorConfig cfg;
  std::mt19937 rng(8);
  for (int i = 0; i < 10; ++i) {
    const Vec q0 = random_vec(2, rng), q1 = q0 + 0.01 * random_vec(2, rng);
    const auto c = constrained_el_step(L, empty, Vec(), q0, q1, 0.01, 0.01, cfg, larmor_theta());
    const Vec m = magnetic_el_step(L, larmor_theta(), q0, q1, 0.01, 0.01, cfg);
    EXPECT_EQ(c.q_next, m);
    EXPECT_EQ(c.lambda.size(), 0);
  }
}

TEST(ConstrainedStep, Preconditions) {
  const auto g = sphere_constraint(2);
  EXPECT_THROW(constrained_el_step(pendulum(), g, vec({0}), vec({0.9, 0}), vec({0.9, 0.01}), 0.01, 0.01,
                                   IntegratorConfig{}),
               DomainError);
  const auto flat = VecFn::generic(2, 1, [](const auto& x) {
    using T = S<decltype(x)>;
    VecT<T> out(1);
    out(0) = x(0) * x(0);
    return out;
  });
  EXPECT_THROW(constrained_el_step(pendulum(), flat, vec({0}), vec({0, 0}), vec({0, 0.01}), 0.01, 0.01,
                                   IntegratorConfig{}),
               ConstructionError);
}

TEST(Dvp, Theorem1OscillatorQuarterArc) {
  const auto D = build_dirac_form(dxdy());
  const double T = M_PI / 2;
  const Theorem1Functional f{D, oscillator_primitive(), half_norm(plane()), Quadrature::midpoint};
  const auto sol = dvp_solve(make_path(f, vec({1, 0}), vec({0, -1}), T, 200), IntegratorConfig{});
  EXPECT_LT(arc_error(sol), 1e-3);
  EXPECT_LE(sol.stationarity, 1e-10);
}

TEST(Dvp, Theorem1SummandClosedForm) {
  // Left rule: x_a (y_b - y_a) + h H(a).
  const auto D = build_dirac_form(dxdy());
  const DiscreteFunctional f = Theorem1Functional{D, oscillator_primitive(), half_norm(plane()), Quadrature::left};
  std::mt19937 rng(3);
  for (int i = 0; i < 20; ++i) {
    const Vec a = random_vec(2, rng), b = random_vec(2, rng);
    const double h = 0.07;
    EXPECT_NEAR(discrete_summand(f, a, b, h), a(0) * (b(1) - a(1)) + h * 0.5 * a.squaredNorm(), 1e-12);
    const Vec g = discrete_summand_gradient(f, a, b, h);
    EXPECT_NEAR(g(0), b(1) - a(1) + h * a(0), 1e-8);
    EXPECT_NEAR(g(1), -a(0) + h * a(1), 1e-8);
    EXPECT_NEAR(g(2), 0.0, 1e-8);
    EXPECT_NEAR(g(3), a(0), 1e-8);
  }
}

TEST(Dvp, FreeParticleIsUniformStraightLine) {
  const IlsFunctional f{free_particle(space3()), std::nullopt, std::nullopt, Quadrature::left};
  const Vec a = vec({0.1, -0.4, 2.0}), b = vec({1.5, 0.3, -1.0});
  auto guess = make_path(f, a, b, 2.0, 40);
  std::mt19937 rng(12);
  for (int k = 1; k < 40; ++k) guess.nodes[k] += 0.2 * random_vec(3, rng);
  const auto sol = dvp_solve(guess, IntegratorConfig{});
  for (int k = 0; k <= 40; ++k) EXPECT_LT((sol.nodes[k] - (a + (b - a) * (k / 40.0))).norm(), 1e-10);
}

TEST(Dvp, DifferentLeavesAreRejected) {
  const auto g = VecFn::generic(3, 1, [](const auto& x) {
    using T = S<decltype(x)>;
    VecT<T> out(1);
    out(0) = x(2);
    return out;
  });
  const auto D = build_dirac_foliation(g, {VectorField::coordinate(space3(), 0), VectorField::coordinate(space3(), 1)});
  const auto H = half_norm(space3());
  const Theorem1Functional f{D, CourantSection(VectorField::zero(space3()), OneFormField::zero(space3())), H};
  EXPECT_THROW(dvp_solve(make_path(f, vec({0, 0, 0}), vec({1, 0, 0.5}), 1.0, 10), IntegratorConfig{}),
               LeafMismatchError);
}

TEST(Dvp, SameLeafOfFoliationSolves) {
  // omega_D = 0 and tau = 0: the summand reduces to h H, stationary along the leaf.
  const auto g = VecFn::generic(3, 1, [](const auto& x) {
    using T = S<decltype(x)>;
    VecT<T> out(1);
    out(0) = x(2);
    return out;
  });
  const auto D = build_dirac_foliation(g, {VectorField::coordinate(space3(), 0), VectorField::coordinate(space3(), 1)});
  const auto H = make_scalar_field(space3(), [](const auto& x) { return x(0) * x(0) + x(1) * x(1) + x(2) * x(2); });
  const Theorem1Functional f{D, CourantSection(VectorField::zero(space3()), OneFormField::zero(space3())), H};
  const auto sol = dvp_solve(make_path(f, vec({1, 1, 0.3}), vec({-1, 2, 0.3}), 1.0, 10), IntegratorConfig{});
  for (int k = 1; k < 10; ++k) {
    EXPECT_NEAR(sol.nodes[k](2), 0.3, 1e-12);
    EXPECT_NEAR(sol.nodes[k](0), 0.0, 1e-8);
    EXPECT_NEAR(sol.nodes[k](1), 0.0, 1e-8);
  }
}

TEST(Dvp, ConstrainedPendulumArc) {
  const auto g = sphere_constraint(2);
  const IlsFunctional f{pendulum(), std::nullopt, g, Quadrature::midpoint};
  const double a0 = 0.3, a1 = -0.2;
  auto guess = make_path(f, vec({std::sin(a0), -std::cos(a0)}), vec({std::sin(a1), -std::cos(a1)}), 0.5, 50);
  for (auto& q : guess.nodes) q.normalize();
  const auto sol = dvp_solve(guess, IntegratorConfig{});
  for (const Vec& q : sol.nodes) EXPECT_NEAR(g(q)(0), 0.0, 1e-10);
  EXPECT_LE(sol.stationarity, 1e-9);
  EXPECT_EQ(sol.multipliers.size(), sol.nodes.size());
}

TEST(Dvp, Preconditions) {
  const IlsFunctional f{free_particle(plane()), std::nullopt, std::nullopt, Quadrature::left};
  EXPECT_THROW(make_path(f, vec({0, 0}), vec({1, 1}), 1.0, 1), std::invalid_argument);
  auto p = make_path(f, vec({0, 0}), vec({1, 1}), 1.0, 4);
  p.times.pop_back();
  EXPECT_THROW(dvp_solve(p, IntegratorConfig{}), std::invalid_argument);
}

TEST(Stationarity, MagneticStepperOutputIsStationary) {
  const auto L = free_particle(plane());
  const IntegratorConfig cfg = with_h(0.01);
  const auto run = integrate_variational(L, larmor_theta(), std::nullopt, vec({1, 0}), vec({0, -1}), 1.0, cfg);
  const DiscretePath path{run.trajectory.times, run.positions, {}, IlsFunctional{L, larmor_theta(), std::nullopt}};
  EXPECT_LE(stationarity_residual(path), 10 * cfg.newton_tol);
}

TEST(Stationarity, ConstrainedStepperOutputIsStationary) {
  const auto g = sphere_constraint(2);
  const IntegratorConfig cfg = with_h(0.01);
  const auto run = integrate_variational(pendulum(), std::nullopt, g, vec({0.3, -std::sqrt(0.91)}), vec({0, 0}), 1.0,
                                         cfg);
  const DiscretePath path{run.trajectory.times, run.positions, {}, IlsFunctional{pendulum(), std::nullopt, g}};
  EXPECT_LE(stationarity_residual(path), 10 * cfg.newton_tol);
}

TEST(Stationarity, ContinuumSolutionConvergesUnderLeftRule) {
  auto residual = [](int N) {
    std::vector<double> t;
    std::vector<Vec> q;
    for (int k = 0; k <= N; ++k) {
      t.push_back(k * 1.0 / N);
      q.push_back(vec({std::cos(t.back()), std::sin(t.back())}));
    }
    return stationarity_residual(DiscretePath{t, q, {}, IlsFunctional{oscillator(), std::nullopt, std::nullopt}});
  };
  double prev = residual(50);
  for (int N : {100, 200}) {
    const double r = residual(N);
    EXPECT_GE(std::log2(prev / r), 0.8);
    prev = r;
  }
}

TEST(Stationarity, PerturbationIsDetected) {
  const IntegratorConfig cfg = with_h(0.01);
  const auto run = integrate_variational(oscillator(), std::nullopt, std::nullopt, vec({1, 0}), vec({0, 1}), 1.0, cfg);
  DiscretePath path{run.trajectory.times, run.positions, {}, IlsFunctional{oscillator(), std::nullopt, std::nullopt}};
  path.nodes[50](0) += 1e-2;
  EXPECT_GE(stationarity_residual(path), 1e-3);
  EXPECT_THROW(stationarity_residual(DiscretePath{{0, 1}, {vec({0, 0}), vec({1, 1})}, {}, path.functional}),
               std::invalid_argument);
}

TEST(Stationarity, Theorem1LoopConverges) {
  const auto D = build_dirac_form(dxdy());
  const auto H = half_norm(plane());
  auto residual = [&](int N) {
    const auto tr = integrate_dirac_hamiltonian(D, H, vec({1, 0}), 2 * M_PI, with_h(2 * M_PI / N));
    return stationarity_residual(DiscretePath{tr.times, tr.states, {}, Theorem1Functional{D, oscillator_primitive(), H}});
  };
  double prev = residual(100);
  for (int N : {200, 400}) {
    const double r = residual(N);
    EXPECT_GE(std::log2(prev / r), 0.8);
    prev = r;
  }
}
