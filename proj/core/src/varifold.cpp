#include "varflow/varifold.hpp"

#include <cmath>
#include <sstream>

#include "varflow/error.hpp"

namespace varflow {

GrassmannElement GrassmannElement::from_projection(const Matrix& projection, int d) {
  const auto n = projection.rows();
  if (projection.cols() != n || d < 1 || d >= n) {
    fail(ErrorCode::InvalidArgument, "projection must be square with 1 <= d < n");
  }
  const double asym = (projection - projection.transpose()).cwiseAbs().maxCoeff();
  const double idem = (projection * projection - projection).cwiseAbs().maxCoeff();
  const double trace_err = std::abs(projection.trace() - d);
  if (asym > kTolerances.projector_symmetry || idem > kTolerances.projector_idempotence ||
      trace_err > kTolerances.projector_trace) {
    std::ostringstream msg;
    msg << "not an orthogonal projector of rank " << d << " (asym " << asym << ", idem " << idem
        << ", trace error " << trace_err << ")";
    fail(ErrorCode::InvalidArgument, msg.str());
  }
  return GrassmannElement(projection, d);
}

GrassmannElement GrassmannElement::from_basis(const Matrix& basis) {
  const auto n = basis.rows();
  const auto d = basis.cols();
  if (d < 1 || d >= n) fail(ErrorCode::InvalidArgument, "basis must have 1 <= d < n columns");
  const Matrix gram = basis.transpose() * basis;
  if (!(gram.determinant() > kTolerances.gram_determinant)) {
    fail(ErrorCode::DegenerateBasis, "Gram determinant below threshold");
  }
  Matrix p = basis * gram.ldlt().solve(basis.transpose());
  p = 0.5 * (p + p.transpose());
  return GrassmannElement(std::move(p), static_cast<int>(d));
}

GrassmannElement GrassmannElement::coordinate(int n, int d) {
  Matrix p = Matrix::Zero(n, n);
  for (int i = 0; i < d; ++i) p(i, i) = 1.0;
  return from_projection(p, d);
}

Matrix GrassmannElement::orthonormal_basis() const {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(projection_);
  // Eigenvalues are ascending: the plane is spanned by the last d vectors.
  return solver.eigenvectors().rightCols(d_);
}

Matrix GrassmannElement::complement() const {
  return Matrix::Identity(projection_.rows(), projection_.cols()) - projection_;
}

GrassmannElement grassmann_from_basis(std::span<const Vector> vectors) {
  if (vectors.empty()) fail(ErrorCode::InvalidArgument, "empty basis");
  Matrix basis(vectors.front().size(), static_cast<Eigen::Index>(vectors.size()));
  for (std::size_t j = 0; j < vectors.size(); ++j) {
    if (vectors[j].size() != basis.rows()) fail(ErrorCode::InvalidArgument, "ragged basis");
    basis.col(static_cast<Eigen::Index>(j)) = vectors[j];
  }
  return GrassmannElement::from_basis(basis);
}

DiscreteVarifold::DiscreteVarifold(int n, int d) : n_(n), d_(d) {
  if (d < 1 || d >= n) fail(ErrorCode::InvalidArgument, "varifold needs 1 <= d < n");
}

void DiscreteVarifold::add(Atom atom) {
  if (atom.position.size() != n_ || atom.plane.ambient_dim() != n_ || atom.plane.dim() != d_) {
    fail(ErrorCode::InvalidArgument, "atom dimensions do not match varifold");
  }
  if (!(atom.mass > 0.0) || !std::isfinite(atom.mass)) {
    fail(ErrorCode::InvalidArgument, "atom mass must be positive and finite");
  }
  if (!atom.position.allFinite()) fail(ErrorCode::InvalidArgument, "atom position not finite");
  atoms_.push_back(std::move(atom));
}

void DiscreteVarifold::add(Vector position, GrassmannElement plane, double mass) {
  add(Atom{std::move(position), std::move(plane), mass});
}

ScalarField ScalarField::constant(int n, double c) {
  ScalarField f;
  f.value = [c](const Vector&, double) { return c; };
  f.gradient = [n](const Vector&, double) { return Vector::Zero(n); };
  f.hessian = [n](const Vector&, double) { return Matrix::Zero(n, n); };
  f.time_derivative = [](const Vector&, double) { return 0.0; };
  f.c1_norm = std::abs(c);
  f.c2_norm = std::abs(c);
  return f;
}

double total_mass(const DiscreteVarifold& varifold) {
  double sum = 0.0;
  for (const auto& a : varifold.atoms()) sum += a.mass;
  return sum;
}

double mass_integral(const DiscreteVarifold& varifold, const ScalarField& phi, double t) {
  double sum = 0.0;
  for (const auto& a : varifold.atoms()) sum += a.mass * phi.value(a.position, t);
  return sum;
}

double tangential_divergence(const GrassmannElement& plane, const Matrix& jacobian) {
  // trace(S J^T) is the Frobenius product.
  return plane.projection().cwiseProduct(jacobian).sum();
}

double first_variation(const DiscreteVarifold& varifold, const VectorField& field) {
  double sum = 0.0;
  for (const auto& a : varifold.atoms()) {
    sum += a.mass * tangential_divergence(a.plane, field.jacobian(a.position));
  }
  return sum;
}

double weighted_first_variation(const DiscreteVarifold& varifold, const ScalarField& phi,
                                const VectorField& field, double t) {
  double sum = 0.0;
  for (const auto& a : varifold.atoms()) {
    const double div = tangential_divergence(a.plane, field.jacobian(a.position));
    sum += a.mass * (phi.value(a.position, t) * div +
                     phi.gradient(a.position, t).dot(field.value(a.position)));
  }
  return sum;
}

}  // namespace varflow
