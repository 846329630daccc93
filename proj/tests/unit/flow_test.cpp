#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"
#include "varflow/error.hpp"
#include "varflow/flow.hpp"
#include "varflow/metrics.hpp"
#include "varflow/parallel.hpp"
#include "varflow/presets.hpp"

namespace {

using namespace varflow;
using testing_support::rotation2;
using testing_support::vec;

FlowConfig small_config(double eps, double dt, double end_time) {
  FlowConfig cfg;
  cfg.eps = eps;
  cfg.mass_bound = 7.0;
  cfg.gate_constant = 1e-9;
  cfg.subdivision = Subdivision::uniform(end_time, dt);
  return cfg;
}

Matrix random_matrix(std::uint64_t seed, int n) {
  CounterRng rng(seed, 0);
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) m(i, j) = rng.normal();
  }
  return m;
}

TEST(TangentialJacobian, ScalingAndIsometries) {
  const auto line = GrassmannElement::coordinate(2, 1);
  EXPECT_NEAR(tangential_jacobian(Matrix::Identity(2, 2), line), 1.0, 1e-15);
  EXPECT_NEAR(tangential_jacobian(2.0 * Matrix::Identity(2, 2), line), 2.0, 1e-14);
  EXPECT_NEAR(tangential_jacobian(2.0 * Matrix::Identity(3, 3), GrassmannElement::coordinate(3, 2)), 4.0,
              1e-14);
  for (std::uint64_t s = 0; s < 10; ++s) {
    CounterRng rng(s, 4);
    const auto plane = random_plane(rng, 2, 1);
    EXPECT_NEAR(tangential_jacobian(rotation2(0.3 * static_cast<double>(s)), plane), 1.0, 1e-13);
  }
}

TEST(PlaneImage, IdentityRotationAndGramSchmidt) {
  CounterRng rng(1, 1);
  const auto s = random_plane(rng, 3, 2);
  EXPECT_LT((plane_image(Matrix::Identity(3, 3), s).projection() - s.projection()).norm(), 1e-13);
  const auto p2 = random_plane(rng, 2, 1);
  const Matrix r = rotation2(1.1);
  EXPECT_LT((plane_image(r, p2).projection() - r * p2.projection() * r.transpose()).norm(), 1e-13);
  const Matrix df = Matrix::Identity(3, 3) + 0.3 * random_matrix(5, 3);
  const Matrix b = s.orthonormal_basis();
  Vector u1 = (df * b.col(0)).normalized();
  Vector u2 = df * b.col(1);
  u2 = (u2 - u1.dot(u2) * u1).normalized();
  const Matrix oracle = u1 * u1.transpose() + u2 * u2.transpose();
  EXPECT_LT((plane_image(df, s).projection() - oracle).norm(), 1e-12);
}

TEST(Pushforward, TranslationAndScaling) {
  const auto v = testing_support::random_varifold(2, 20, 2, 1);
  const Vector shift = vec({0.5, -1.0});
  const auto moved = pushforward(v, testing_support::affine_field(Matrix::Identity(2, 2), shift));
  for (std::size_t i = 0; i < v.size(); ++i) {
    EXPECT_LT((moved.atom(i).position - v.atom(i).position - shift).norm(), 1e-15);
    EXPECT_LT((moved.atom(i).plane.projection() - v.atom(i).plane.projection()).norm(), 1e-14);
    EXPECT_DOUBLE_EQ(moved.atom(i).mass, v.atom(i).mass);
  }
  const auto doubled = pushforward(v, testing_support::affine_field(2.0 * Matrix::Identity(2, 2), Vector::Zero(2)));
  EXPECT_NEAR(total_mass(doubled), 2.0 * total_mass(v), 1e-12);
}

TEST(Pushforward, DualityWithDirectFormula) {
  const auto v = testing_support::random_varifold(3, 15, 3, 2, 0.5);
  const auto f = testing_support::wave_field(0.5 * random_matrix(6, 3), vec({0.1, 0.2, 0.3}));
  VectorField map{[&](const Vector& x) -> Vector { return x + 0.2 * f.value(x); },
                  [&](const Vector& x) -> Matrix { return Matrix::Identity(3, 3) + 0.2 * f.jacobian(x); }};
  const auto phi = testing_support::bump_field(vec({0.1, 0.0, -0.1}));
  double direct = 0.0;
  for (const auto& a : v.atoms()) {
    // Independent J_S f: sqrt(det(B^T Df^T Df B)) with an orthonormal basis B of S.
    const Matrix b = a.plane.orthonormal_basis();
    const Matrix y = map.jacobian(a.position) * b;
    direct += a.mass * std::sqrt((y.transpose() * y).determinant()) * phi.value(map.value(a.position), 0.0);
  }
  EXPECT_NEAR(mass_integral(pushforward(v, map), phi, 0.0), direct, 1e-12 * std::abs(direct));
}

TEST(Pushforward, RejectsSingularMaps) {
  const auto v = testing_support::random_varifold(4, 3, 2, 1);
  try {
    pushforward(v, testing_support::affine_field(Matrix::Zero(2, 2), Vector::Zero(2)));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularMap);
  }
}

TEST(Advance, LoneAtomStaysPut) {
  DiscreteVarifold v(2, 1);
  v.add(vec({0.2, 0.1}), GrassmannElement::coordinate(2, 1), 1.0);
  const auto cfg = small_config(0.2, 1e-3, 1e-3);
  const auto next = advance(v, cfg);
  EXPECT_LT((next.atom(0).position - v.atom(0).position).norm(), 1e-12);
  // The only change is the tangential stretch, of size dt times the dissipation.
  const KernelField field(v, cfg.kernel(2));
  const double budget = 1e-3 * field.dissipation(field.domain_grid(cfg.refinement));
  EXPECT_LE(v.atom(0).mass - next.atom(0).mass, 1.01 * budget);
}

TEST(Advance, CircleRadiiShrinkAndMassBound) {
  const auto v = circle_varifold(200, 1.0, Vector::Zero(2));
  auto cfg = small_config(0.1, 1e-3, 1e-3);
  cfg.gate_constant = 5e-11;
  const auto next = advance(v, cfg);
  for (std::size_t i = 0; i < v.size(); ++i) {
    EXPECT_LT(next.atom(i).position.norm(), v.atom(i).position.norm());
  }
  EXPECT_LE(total_mass(next), total_mass(v) + 1e-3);
}

TEST(Advance, ZeroStepIsIdentity) {
  const auto v = circle_varifold(20, 1.0, Vector::Zero(2));
  const auto cfg = small_config(0.2, 1e-3, 1e-3);
  const auto same = advance(v, cfg, 0.0);
  for (std::size_t i = 0; i < v.size(); ++i) {
    EXPECT_EQ(same.atom(i).position, v.atom(i).position);
    EXPECT_EQ(same.atom(i).mass, v.atom(i).mass);
  }
}

TEST(Advance, GateAndMassPreconditions) {
  const auto v = circle_varifold(20, 1.0, Vector::Zero(2));
  auto cfg = small_config(0.2, 1e-3, 1e-2);
  cfg.gate_constant = 1.0;
  try {
    advance(v, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::GateViolated);
  }
  cfg.enforce_gate = false;
  EXPECT_NO_THROW(advance(v, cfg));
  cfg.mass_bound = 1.0;
  try {
    advance(v, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MassBoundExceeded);
  }
}

TEST(Run, ZeroStepsKeepsInitialData) {
  const auto v = circle_varifold(30, 1.0, Vector::Zero(2));
  auto cfg = small_config(0.2, 1e-3, 0.0);
  const auto trace = run(v, cfg);
  ASSERT_EQ(trace.snapshots.size(), 1u);
  EXPECT_TRUE(trace.steps.empty());
  EXPECT_EQ(trace.snapshots[0].varifold.size(), v.size());
}

TEST(Run, MassChainAndJacobians) {
  const auto v = circle_varifold(64, 1.0, Vector::Zero(2));
  const auto trace = run(v, small_config(0.2, 2e-3, 0.1));
  const auto& s = trace.snapshots;
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    EXPECT_LE(s[i + 1].mass, s[i].mass + (s[i + 1].time - s[i].time));
    EXPECT_LE(s[i + 1].mass, s[0].mass + s[i + 1].time);
    EXPECT_GT(trace.steps[i].min_tangential_jacobian, 0.0);
  }
}

TEST(Run, TangentialJacobianDeviationHalvesWithStep) {
  const auto v = circle_varifold(64, 1.0, Vector::Zero(2));
  auto worst = [&](double dt) {
    const auto trace = run(v, small_config(0.2, dt, 0.02));
    double m = 0.0;
    for (const auto& st : trace.steps) m = std::max(m, st.max_tangential_jacobian_deviation);
    return m;
  };
  const double ratio = worst(2e-3) / worst(1e-3);
  EXPECT_GT(ratio, 1.5);
  EXPECT_LT(ratio, 3.0);
}

TEST(Run, DeterministicAcrossThreadCounts) {
  const auto v = circle_varifold(64, 1.0, Vector::Zero(2));
  const auto cfg = small_config(0.2, 2e-3, 0.02);
  const unsigned saved = thread_count();
  set_thread_count(1);
  const auto a = run(v, cfg);
  set_thread_count(3);
  const auto b = run(v, cfg);
  set_thread_count(saved);
  const auto& x = a.snapshots.back().varifold;
  const auto& y = b.snapshots.back().varifold;
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_EQ(x.atom(i).position, y.atom(i).position);
    EXPECT_EQ(x.atom(i).mass, y.atom(i).mass);
  }
  EXPECT_EQ(a.snapshots.back().dissipation, b.snapshots.back().dissipation);
}

TEST(Run, RejectsExcessInitialMass) {
  const auto v = circle_varifold(64, 2.0, Vector::Zero(2));
  auto cfg = small_config(0.2, 1e-3, 1e-2);
  cfg.mass_bound = 5.0;
  EXPECT_THROW(run(v, cfg), Error);
}

TEST(Sample, NodesAndInterpolation) {
  const auto v = circle_varifold(48, 1.0, Vector::Zero(2));
  const auto trace = run(v, small_config(0.2, 5e-3, 0.02));
  for (const auto mode : {FlowMode::Piecewise, FlowMode::Interpolated}) {
    const auto s = sample(trace, trace.snapshots[2].time, mode);
    EXPECT_EQ(s.atom(5).position, trace.snapshots[2].varifold.atom(5).position);
  }
  const double t = 0.5 * (trace.snapshots[1].time + trace.snapshots[2].time);
  const auto mid = sample(trace, t, FlowMode::Interpolated);
  EXPECT_LE(total_mass(mid), trace.snapshots[1].mass + (t - trace.snapshots[1].time));
  const auto pw = sample(trace, t, FlowMode::Piecewise);
  EXPECT_EQ(pw.atom(0).position, trace.snapshots[1].varifold.atom(0).position);
  try {
    sample(trace, 1.0, FlowMode::Piecewise);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OutOfSpan);
  }
}

TEST(Sample, PiecewiseInterpolatedGapHalves) {
  const auto v = circle_varifold(48, 1.0, Vector::Zero(2));
  auto gap = [&](double dt) {
    const auto trace = run(v, small_config(0.2, dt, 0.04));
    double worst = 0.0;
    for (std::size_t i = 0; i + 1 < trace.snapshots.size(); ++i) {
      const double t = 0.5 * (trace.snapshots[i].time + trace.snapshots[i + 1].time);
      worst = std::max(worst, bounded_lipschitz(mass_measure(sample(trace, t, FlowMode::Piecewise)),
                                                mass_measure(sample(trace, t, FlowMode::Interpolated)))
                                  .distance);
    }
    return worst;
  };
  const double ratio = gap(4e-3) / gap(2e-3);
  EXPECT_GT(ratio, 1.5);
  EXPECT_LT(ratio, 3.0);
}

// A round circle makes the phi = 1 residual vanish to roundoff (the tangential
// stretch is then exactly linear in dt), so the order test uses an ellipse.
DiscreteVarifold ellipse(int atoms) {
  Matrix a(2, 2);
  a << 1.3, 0.0, 0.0, 0.8;
  return pushforward(circle_varifold(atoms, 1.0, Vector::Zero(2)),
                     testing_support::affine_field(a, Vector::Zero(2)));
}

TEST(BrakkeResidual, ConstantTestFunctionHalves) {
  const auto v = ellipse(48);
  const auto one = ScalarField::constant(2, 1.0);
  auto residual = [&](double dt) {
    const auto trace = run(v, small_config(0.2, dt, 0.04));
    const double r = brakke_residual(trace, one, 0.0, 0.04);
    // With phi = 1 the residual is the mass defect against the dissipation integral.
    const double direct = std::abs(trace.snapshots.back().mass - trace.snapshots.front().mass +
                                   dissipation_budget(trace));
    EXPECT_NEAR(r, direct, 1e-9);
    return r;
  };
  const double ratio = residual(4e-3) / residual(2e-3);
  EXPECT_GT(ratio, 1.5);
  EXPECT_LT(ratio, 3.0);
}

TEST(BrakkeResidual, TimeDependentBumpHalves) {
  const auto v = ellipse(48);
  const auto phi = testing_support::bump_field(vec({0.6, 0.3}));
  auto residual = [&](double dt) {
    return brakke_residual(run(v, small_config(0.2, dt, 0.04)), phi, 0.0, 0.04);
  };
  const double ratio = residual(4e-3) / residual(2e-3);
  EXPECT_GT(ratio, 1.5);
  EXPECT_LT(ratio, 3.0);
}

TEST(BrakkeResidual, RejectsReversedInterval) {
  const auto trace = run(circle_varifold(16, 1.0, Vector::Zero(2)), small_config(0.2, 1e-2, 0.02));
  EXPECT_THROW(brakke_residual(trace, ScalarField::constant(2, 1.0), 0.02, 0.0), Error);
}

TEST(DissipationBudget, StationaryAndCircle) {
  DiscreteVarifold empty(2, 1);
  FlowTrace t0;
  t0.snapshots.push_back({});
  EXPECT_EQ(dissipation_budget(t0), 0.0);
  const auto v = circle_varifold(64, 1.0, Vector::Zero(2));
  const auto cfg = small_config(0.2, 2e-3, 0.1);
  const auto trace = run(v, cfg);
  const double budget = dissipation_budget(trace);
  const double drop = trace.snapshots.front().mass - trace.snapshots.back().mass;
  EXPECT_GT(budget, 0.0);
  EXPECT_LE(budget, 2.0 * cfg.mass_bound);
  EXPECT_NEAR(budget, drop, 0.1 * drop);
  EXPECT_LE(budget, drop + trace.snapshots.back().time);
}

TEST(Subdivision, UniformNodes) {
  const auto s = Subdivision::uniform(0.3, 0.1);
  ASSERT_EQ(s.steps(), 3u);
  EXPECT_NEAR(s.max_gap(), 0.1, 1e-15);
  EXPECT_DOUBLE_EQ(s.end_time(), 0.3);
  const auto r = Subdivision::uniform(0.25, 0.1);
  EXPECT_EQ(r.steps(), 3u);
  EXPECT_DOUBLE_EQ(r.end_time(), 0.25);
}

}  // namespace
