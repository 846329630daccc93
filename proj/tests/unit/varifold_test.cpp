#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "test_support.hpp"
#include "varflow/error.hpp"
#include "varflow/flow.hpp"
#include "varflow/varifold.hpp"

namespace {

using namespace varflow;
using testing_support::affine_field;
using testing_support::random_varifold;
using testing_support::vec;
using testing_support::wave_field;

Matrix random_matrix(std::uint64_t seed, int rows, int cols) {
  CounterRng rng(seed, 0);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
  }
  return m;
}

TEST(Grassmann, AxisLineInPlane) {
  const auto s = GrassmannElement::from_basis(vec({1.0, 0.0}));
  Matrix expected(2, 2);
  expected << 1, 0, 0, 0;
  EXPECT_TRUE(s.projection().isApprox(expected, 1e-15));
  EXPECT_EQ(s.dim(), 1);
}

TEST(Grassmann, DiagonalLine) {
  const auto s = GrassmannElement::from_basis(vec({1.0, 1.0}));
  Matrix expected(2, 2);
  expected << 0.5, 0.5, 0.5, 0.5;
  EXPECT_LT((s.projection() - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Grassmann, RandomTwoPlaneInR4MatchesGramSchmidt) {
  const Matrix basis = random_matrix(7, 4, 2);
  const auto s = GrassmannElement::from_basis(basis);
  // Independent oracle: classical Gram-Schmidt then sum of outer products.
  Vector u1 = basis.col(0).normalized();
  Vector u2 = basis.col(1) - u1.dot(basis.col(1)) * u1;
  u2.normalize();
  const Matrix oracle = u1 * u1.transpose() + u2 * u2.transpose();
  const Matrix& p = s.projection();
  EXPECT_LT((p - oracle).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((p * p - p).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_NEAR(p.trace(), 2.0, 1e-10);
  EXPECT_LT((p - p.transpose()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Grassmann, VectorListMatchesMatrixBasis) {
  const Matrix basis = random_matrix(3, 3, 2);
  const std::vector<Vector> cols = {basis.col(0), basis.col(1)};
  const auto a = grassmann_from_basis(cols);
  const auto b = GrassmannElement::from_basis(basis);
  EXPECT_LT((a.projection() - b.projection()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Grassmann, RejectsDependentBasis) {
  Matrix basis(3, 2);
  basis << 1, 2, 0, 0, 1, 2;
  try {
    GrassmannElement::from_basis(basis);
    FAIL() << "expected DegenerateBasis";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateBasis);
  }
}

TEST(Grassmann, RejectsNonProjection) {
  Matrix p(2, 2);
  p << 1, 0.1, 0, 0;
  EXPECT_THROW(GrassmannElement::from_projection(p, 1), Error);
  Matrix q = Matrix::Identity(2, 2);
  EXPECT_THROW(GrassmannElement::from_projection(q, 1), Error);
}

TEST(Grassmann, BasisAndComplementAreConsistent) {
  const auto s = GrassmannElement::from_basis(random_matrix(11, 3, 2));
  const Matrix b = s.orthonormal_basis();
  EXPECT_EQ(b.cols(), 2);
  EXPECT_LT((b.transpose() * b - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((b * b.transpose() - s.projection()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((s.projection() + s.complement() - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Varifold, TotalMass) {
  DiscreteVarifold v(2, 1);
  EXPECT_EQ(total_mass(v), 0.0);
  const auto line = GrassmannElement::coordinate(2, 1);
  v.add(vec({0, 0}), line, 2.5);
  EXPECT_EQ(total_mass(v), 2.5);
  DiscreteVarifold w(2, 1);
  for (double m : {1.0, 2.0, 3.0}) w.add(vec({m, 0}), line, m);
  EXPECT_EQ(total_mass(w), 6.0);
}

TEST(Varifold, RejectsBadAtoms) {
  DiscreteVarifold v(2, 1);
  const auto line = GrassmannElement::coordinate(2, 1);
  EXPECT_THROW(v.add(vec({0, 0}), line, 0.0), Error);
  EXPECT_THROW(v.add(vec({0, 0}), line, -1.0), Error);
  EXPECT_THROW(v.add(vec({NAN, 0}), line, 1.0), Error);
  EXPECT_THROW(v.add(vec({0, 0, 0}), GrassmannElement::coordinate(3, 1), 1.0), Error);
  EXPECT_THROW(v.add(vec({0, 0}), line, INFINITY), Error);
}

TEST(Varifold, MassIntegral) {
  const auto v = random_varifold(5, 10, 2, 1);
  EXPECT_DOUBLE_EQ(mass_integral(v, ScalarField::constant(2, 1.0), 0.0), total_mass(v));
  EXPECT_EQ(mass_integral(v, ScalarField::constant(2, 0.0), 0.0), 0.0);
  ScalarField sq;
  sq.value = [](const Vector& x, double) { return x.squaredNorm(); };
  double oracle = 0.0;
  for (std::size_t i = v.size(); i-- > 0;) oracle += v.atom(i).mass * v.atom(i).position.squaredNorm();
  EXPECT_NEAR(mass_integral(v, sq, 0.0), oracle, 1e-12 * oracle);
}

TEST(Varifold, TangentialDivergence) {
  const auto s = GrassmannElement::from_basis(random_matrix(2, 3, 2));
  EXPECT_NEAR(tangential_divergence(s, Matrix::Identity(3, 3)), 2.0, 1e-12);
  Matrix anti = random_matrix(4, 3, 3);
  anti = (anti - anti.transpose()).eval();
  EXPECT_NEAR(tangential_divergence(s, anti), 0.0, 1e-12);
  Matrix j(2, 2);
  j << 1.5, -2.0, 3.0, 4.0;
  EXPECT_NEAR(tangential_divergence(GrassmannElement::coordinate(2, 1), j), 1.5, 1e-15);
}

TEST(Varifold, TangentialDivergenceSeesOnlySymmetricPart) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CounterRng rng(seed, 99);
    const auto s = random_plane(rng, 3, 1 + static_cast<int>(seed % 2));
    const Matrix j = random_matrix(seed + 100, 3, 3);
    EXPECT_NEAR(tangential_divergence(s, j), tangential_divergence(s, 0.5 * (j + j.transpose())),
                1e-13);
  }
}

TEST(FirstVariation, PositionFieldGivesDimensionTimesMass) {
  const auto v = random_varifold(1, 12, 3, 2);
  const auto x = affine_field(Matrix::Identity(3, 3), Vector::Zero(3));
  EXPECT_NEAR(first_variation(v, x), 2.0 * total_mass(v), 1e-12);
  const auto c = affine_field(Matrix::Zero(3, 3), vec({1, 2, 3}));
  EXPECT_EQ(first_variation(v, c), 0.0);
}

TEST(FirstVariation, IsLinear) {
  const auto v = random_varifold(9, 15, 2, 1);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto x = wave_field(random_matrix(seed, 2, 2), random_matrix(seed + 50, 2, 1).col(0));
    const auto y = affine_field(random_matrix(seed + 7, 2, 2), random_matrix(seed + 8, 2, 1).col(0));
    CounterRng rng(seed, 3);
    const double a = rng.normal(), b = rng.normal();
    VectorField combo{[&](const Vector& p) -> Vector { return a * x.value(p) + b * y.value(p); },
                      [&](const Vector& p) -> Matrix { return a * x.jacobian(p) + b * y.jacobian(p); }};
    const double lhs = first_variation(v, combo);
    const double rhs = a * first_variation(v, x) + b * first_variation(v, y);
    EXPECT_NEAR(lhs, rhs, 1e-12 * std::max(1.0, std::abs(rhs)));
  }
}

// First variation against the finite-difference derivative of the pushed
// forward mass; the error must shrink linearly with tau.
TEST(FirstVariation, MatchesPushforwardFiniteDifference) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto v = random_varifold(seed + 200, 5, 2, 1);
    const auto x = wave_field(random_matrix(seed + 300, 2, 2), random_matrix(seed + 400, 2, 1).col(0));
    const double exact = first_variation(v, x);
    double errors[2];
    const double taus[2] = {1e-4, 1e-5};
    for (int k = 0; k < 2; ++k) {
      const double tau = taus[k];
      VectorField f{[&](const Vector& p) -> Vector { return p + tau * x.value(p); },
                    [&](const Vector& p) -> Matrix {
                      return Matrix::Identity(2, 2) + tau * x.jacobian(p);
                    }};
      const double fd = (total_mass(pushforward(v, f)) - total_mass(v)) / tau;
      errors[k] = std::abs(fd - exact);
    }
    EXPECT_LT(errors[0], 1e-3 * std::max(1.0, std::abs(exact)));
    EXPECT_LT(errors[1], 0.2 * errors[0] + 1e-9);
  }
}

TEST(WeightedFirstVariation, ReducesAndVanishes) {
  const auto v = random_varifold(21, 8, 2, 1);
  const auto x = wave_field(random_matrix(1, 2, 2), vec({0.3, -0.2}));
  ScalarField one = ScalarField::constant(2, 1.0);
  EXPECT_NEAR(weighted_first_variation(v, one, x, 0.0), first_variation(v, x), 1e-13);
  const auto zero = affine_field(Matrix::Zero(2, 2), Vector::Zero(2));
  EXPECT_EQ(weighted_first_variation(v, testing_support::bump_field(vec({0, 0})), zero, 0.0), 0.0);
}

TEST(WeightedFirstVariation, MatchesFiniteDifference) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto v = random_varifold(seed + 500, 6, 2, 1);
    const auto x = wave_field(random_matrix(seed + 600, 2, 2), vec({0.1, 0.4}));
    const auto phi = testing_support::bump_field(vec({0.2, -0.1}));
    const double t = 0.3;
    const double exact = weighted_first_variation(v, phi, x, t);
    const double tau = 1e-6;
    auto pushed = [&](double s) {
      VectorField f{[&](const Vector& p) -> Vector { return p + s * x.value(p); },
                    [&](const Vector& p) -> Matrix {
                      return Matrix::Identity(2, 2) + s * x.jacobian(p);
                    }};
      return mass_integral(pushforward(v, f), phi, t);
    };
    const double fd = (pushed(tau) - pushed(-tau)) / (2.0 * tau);
    EXPECT_NEAR(fd, exact, 1e-6 * std::max(1.0, std::abs(exact)));
  }
}

TEST(Fields, BumpDerivativesMatchFiniteDifferences) {
  const auto phi = testing_support::bump_field(vec({0.1, 0.2}));
  const Vector x = vec({0.4, -0.3});
  const double h = 1e-5;
  for (int a = 0; a < 2; ++a) {
    Vector e = Vector::Zero(2);
    e[a] = h;
    const double fd = (phi.value(x + e, 0.5) - phi.value(x - e, 0.5)) / (2 * h);
    EXPECT_NEAR(fd, phi.gradient(x, 0.5)[a], 1e-8);
    const Vector gfd = (phi.gradient(x + e, 0.5) - phi.gradient(x - e, 0.5)) / (2 * h);
    EXPECT_LT((gfd - phi.hessian(x, 0.5).col(a)).norm(), 1e-8);
  }
}

}  // namespace
