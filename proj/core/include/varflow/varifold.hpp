#pragma once

// Atomic varifolds: finite sums of weighted Dirac masses on R^n x G(d,n),
// their mass measures and first variations.

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace varflow {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Numerical tolerances shared by every module.
struct Tolerances {
  double projector_symmetry = 1e-12;
  double projector_idempotence = 1e-10;
  double projector_trace = 1e-10;
  double gram_determinant = 1e-12;
  double singular_determinant = 1e-12;
  double zero_barrier = 1e-14;
  double lipschitz_slack = 1e-9;
  double vertex_collision = 1e-10;
};

inline constexpr Tolerances kTolerances{};

/// A d-plane in R^n stored as its orthogonal projection matrix.
class GrassmannElement {
 public:
  GrassmannElement() = default;

  /// Validates symmetry, idempotence and trace against kTolerances.
  static GrassmannElement from_projection(const Matrix& projection, int d);

  /// Projection onto the span of the columns of `basis` (n x d).
  static GrassmannElement from_basis(const Matrix& basis);

  /// Span of the first d coordinate axes.
  static GrassmannElement coordinate(int n, int d);

  const Matrix& projection() const { return projection_; }
  int dim() const { return d_; }
  int ambient_dim() const { return static_cast<int>(projection_.rows()); }

  /// Orthonormal basis of the plane, one column per direction.
  Matrix orthonormal_basis() const;
  Matrix complement() const;

 private:
  GrassmannElement(Matrix projection, int d) : projection_(std::move(projection)), d_(d) {}

  Matrix projection_;
  int d_ = 0;
};

GrassmannElement grassmann_from_basis(std::span<const Vector> vectors);

struct Atom {
  Vector position;
  GrassmannElement plane;
  double mass = 0.0;
};

class DiscreteVarifold {
 public:
  DiscreteVarifold() = default;
  DiscreteVarifold(int n, int d);

  int ambient_dim() const { return n_; }
  int dim() const { return d_; }
  std::size_t size() const { return atoms_.size(); }
  bool empty() const { return atoms_.empty(); }

  const Atom& atom(std::size_t i) const { return atoms_[i]; }
  const std::vector<Atom>& atoms() const { return atoms_; }

  /// Rejects non-positive or non-finite mass, non-finite positions and
  /// dimension mismatches.
  void add(Atom atom);
  void add(Vector position, GrassmannElement plane, double mass);

  void reserve(std::size_t count) { atoms_.reserve(count); }

 private:
  int n_ = 0;
  int d_ = 0;
  std::vector<Atom> atoms_;
};

/// Test function phi(x, t) with derivative evaluators and declared norms.
struct ScalarField {
  std::function<double(const Vector&, double)> value;
  std::function<Vector(const Vector&, double)> gradient;
  std::function<Matrix(const Vector&, double)> hessian;
  std::function<double(const Vector&, double)> time_derivative;
  double c1_norm = 0.0;
  double c2_norm = 0.0;

  static ScalarField constant(int n, double c);
};

struct VectorField {
  std::function<Vector(const Vector&)> value;
  std::function<Matrix(const Vector&)> jacobian;
};

double total_mass(const DiscreteVarifold& varifold);

/// sum_i m_i phi(x_i, t)
double mass_integral(const DiscreteVarifold& varifold, const ScalarField& phi, double t);

/// S : J = trace(S J^T)
double tangential_divergence(const GrassmannElement& plane, const Matrix& jacobian);

/// delta V(X) = sum_i m_i S_i : DX(x_i)
double first_variation(const DiscreteVarifold& varifold, const VectorField& field);

/// delta(V, phi)(X) = sum_i m_i [phi(x_i,t) S_i : DX(x_i) + grad phi(x_i,t) . X(x_i)]
double weighted_first_variation(const DiscreteVarifold& varifold, const ScalarField& phi,
                                const VectorField& field, double t);

}  // namespace varflow
