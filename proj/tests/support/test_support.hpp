#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>

#include "varflow/error.hpp"
#include "varflow/random.hpp"
#include "varflow/varifold.hpp"

namespace testing_support {

using varflow::Matrix;
using varflow::Vector;

inline varflow::DiscreteVarifold random_varifold(std::uint64_t seed, int count, int n, int d,
                                                 double spread = 1.0) {
  varflow::DiscreteVarifold v(n, d);
  for (int i = 0; i < count; ++i) {
    varflow::CounterRng rng(seed, static_cast<std::uint64_t>(i));
    Vector x = spread * varflow::gaussian_vector(rng, n);
    auto plane = varflow::random_plane(rng, n, d);
    v.add(std::move(x), std::move(plane), 0.1 + rng.uniform());
  }
  return v;
}

inline Matrix rotation2(double theta) {
  Matrix r(2, 2);
  r << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return r;
}

// X(x) = A x + b
inline varflow::VectorField affine_field(const Matrix& a, const Vector& b) {
  return {[a, b](const Vector& x) -> Vector { return a * x + b; },
          [a](const Vector&) -> Matrix { return a; }};
}

// X_k(x) = sin(w_k . x + c_k), a smooth nonlinear field
inline varflow::VectorField wave_field(const Matrix& w, const Vector& c) {
  return {[w, c](const Vector& x) -> Vector {
            return (w * x + c).array().sin().matrix();
          },
          [w, c](const Vector& x) -> Matrix {
            const Vector phase = (w * x + c).array().cos().matrix();
            return phase.asDiagonal() * w;
          }};
}

// phi(x, t) = (1 + t) exp(-|x - a|^2)
inline varflow::ScalarField bump_field(const Vector& a) {
  varflow::ScalarField f;
  f.value = [a](const Vector& x, double t) { return (1.0 + t) * std::exp(-(x - a).squaredNorm()); };
  f.gradient = [a](const Vector& x, double t) -> Vector {
    return -2.0 * (1.0 + t) * std::exp(-(x - a).squaredNorm()) * (x - a);
  };
  f.hessian = [a](const Vector& x, double t) -> Matrix {
    const Vector z = x - a;
    const auto n = z.size();
    return (1.0 + t) * std::exp(-z.squaredNorm()) *
           (4.0 * z * z.transpose() - 2.0 * Matrix::Identity(n, n));
  };
  f.time_derivative = [a](const Vector& x, double) { return std::exp(-(x - a).squaredNorm()); };
  f.c1_norm = 2.0 * (1.0 + std::sqrt(2.0 / std::exp(1.0)));
  f.c2_norm = f.c1_norm + 4.0;
  return f;
}

inline Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

// Runs f and returns the code of the varflow::Error it throws.
template <class F>
std::optional<varflow::ErrorCode> error_code(F&& f) {
  try {
    f();
  } catch (const varflow::Error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace testing_support
