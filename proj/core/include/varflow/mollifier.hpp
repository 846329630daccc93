#pragma once

// Compactly supported radial kernel, the smoothed mass and first-variation
// fields of an atomic varifold, and the regularized curvature built from them:
//
//   h~(y) = -(dV * Phi)(y) / ((|V| * Phi)(y) + eps),   h(x) = (Phi * h~)(x).
//
// The outer convolution is evaluated by tensor-grid quadrature.

#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "varflow/varifold.hpp"

namespace varflow {

/// Phi(x) = C exp(-|x|^2 / (2 eps^2)) (1 - |x|^2 / (k eps)^2)^3 for |x| < k eps,
/// zero outside; C is fixed numerically so that Phi integrates to one.
/// The cubic cutoff makes Phi C^2 across the support boundary.
class Mollifier {
 public:
  Mollifier(int n, double eps, double cutoff_multiple = 4.0);

  int ambient_dim() const { return n_; }
  double eps() const { return eps_; }
  double cutoff_multiple() const { return k_; }
  double support_radius() const { return radius_; }
  double normalization() const { return norm_; }

  double value(const Vector& z) const;
  Vector gradient(const Vector& z) const;
  Matrix hessian(const Vector& z) const;

  /// Radial profile in u = |z|^2: Phi(z) = g(u), grad Phi(z) = 2 g'(u) z.
  /// Returns false outside the support (outputs untouched).
  bool profile(double u, double& g, double& dg) const {
    if (u >= radius_sq_) return false;
    const double p = 1.0 - u * inv_radius_sq_;
    const double e = norm_ * std::exp(u * a_);
    const double p2 = p * p;
    g = e * p2 * p;
    dg = e * p2 * (a_ * p - 3.0 * inv_radius_sq_);
    return true;
  }

  void profile_second(double u, double& g, double& dg, double& d2g) const;

 private:
  int n_;
  double eps_;
  double k_;
  double radius_;
  double radius_sq_;
  double inv_radius_sq_;
  double a_;  // -1 / (2 eps^2)
  double norm_ = 1.0;
};

/// Axis-aligned lattice with spacing eps / q over a box; trapezoid weights, so
/// the weights sum exactly to the box volume.
class QuadratureGrid {
 public:
  /// Box [-L, L]^n centred at the origin with L the smallest multiple of the
  /// spacing that is >= radius. Nodes are offsets relative to a query point.
  static QuadratureGrid covering_ball(int n, double radius, double eps, int refinement);

  /// Lattice over [lo, hi] (extended to whole cells), absolute coordinates.
  static QuadratureGrid covering_box(const Vector& lo, const Vector& hi, double eps,
                                     int refinement);

  int ambient_dim() const { return static_cast<int>(lo_.size()); }
  int refinement() const { return q_; }
  double spacing() const { return h_; }
  const Vector& lower() const { return lo_; }
  Vector upper() const;
  std::size_t node_count() const;
  double covered_volume() const;
  double total_weight() const;

  /// Centred grids only: radius of the largest ball contained in the box.
  double half_width() const { return -lo_.minCoeff(); }

  Vector node(std::size_t index) const;
  double weight(std::size_t index) const;

 private:
  Vector lo_;
  std::vector<std::int64_t> counts_;  // nodes per axis
  double h_ = 0.0;
  int q_ = 0;
};

/// Uniform hash of atom indices into cubic cells; cell order is fixed, so
/// query results depend only on geometry.
class SpatialHash {
 public:
  SpatialHash() = default;
  SpatialHash(const std::vector<double>& positions, int n, double cell_size);

  /// Indices of atoms in all cells touched by the box [p - r, p + r].
  void candidates(const double* p, double r, std::vector<int>& out) const;

 private:
  std::uint64_t key(const std::int64_t* cell) const;

  int n_ = 0;
  double cell_ = 1.0;
  std::size_t count_ = 0;
  std::unordered_map<std::uint64_t, std::vector<int>> cells_;
};

/// Precomputed, read-only kernel view of one varifold snapshot.
class KernelField {
 public:
  KernelField(const DiscreteVarifold& varifold, const Mollifier& kernel);

  const Mollifier& kernel() const { return kernel_; }
  int ambient_dim() const { return n_; }
  std::size_t atom_count() const { return mass_.size(); }

  /// (|V| * Phi)(y)
  double smoothed_mass(const Vector& y) const;
  /// (dV * Phi)(y) = -sum_i m_i S_i grad Phi(y - x_i)
  Vector smoothed_first_variation(const Vector& y) const;
  Vector h_tilde(const Vector& y) const;

  struct Curvature {
    Vector h;     ///< h_eps(x)
    Matrix grad;  ///< D h_eps(x), grad(a, b) = d h_a / d x_b
  };

  /// Kernel weights of a centred grid, reusable across query points.
  struct Stencil {
    int n = 0;
    std::vector<double> offsets;  // node offsets o inside the kernel support
    std::vector<double> wphi;     // w * Phi(o)
    std::vector<double> wgrad;    // w * grad Phi(-o)
  };
  Stencil make_stencil(const QuadratureGrid& local) const;

  /// h_eps and its Jacobian at x with a centred grid from covering_ball.
  Curvature curvature(const Vector& x, const QuadratureGrid& local) const;
  Curvature curvature(const Vector& x, const Stencil& stencil) const;

  /// int |dV * Phi|^2 / (|V| * Phi + eps) dy over an absolute grid.
  double dissipation(const QuadratureGrid& domain) const;

  /// h~ sampled once on an absolute lattice so that many query points share
  /// the inner convolution. Nodes beyond the kernel radius of every atom hold
  /// zero, which makes the lattice equivalent to an unbounded one for h_eps.
  struct Lattice {
    Vector lo;
    double h = 0.0;
    std::vector<std::int64_t> counts;  // nodes per axis, axis 0 fastest
    std::vector<double> tilde;         // node_count * n
    double dissipation = 0.0;          // trapezoid sum of |dV * Phi|^2 / (|V| * Phi + eps)
  };
  Lattice lattice(const QuadratureGrid& domain) const;

  /// h_eps and its Jacobian at x from a precomputed lattice.
  Curvature curvature(const Vector& x, const Lattice& lattice) const;

  /// Bounding box of the atoms fattened by the kernel support.
  QuadratureGrid domain_grid(int refinement) const;

 private:
  // Smoothed mass and first variation at y from a candidate list.
  void smoothed_at(const double* y, const std::vector<int>& cands, double& rho,
                   double* fv) const;
  template <int N>
  Curvature curvature_impl(const Vector& x, const Stencil& stencil) const;
  template <int N>
  double dissipation_impl(const QuadratureGrid& domain) const;

  Mollifier kernel_;
  int n_;
  std::vector<double> pos_;   // atom_count * n
  std::vector<double> mass_;
  std::vector<double> proj_;  // atom_count * n * n, row-major
  SpatialHash hash_;
};

double smoothed_mass(const DiscreteVarifold& varifold, const Mollifier& kernel, const Vector& y);
Vector smoothed_first_variation(const DiscreteVarifold& varifold, const Mollifier& kernel,
                                const Vector& y);
Vector h_tilde(const DiscreteVarifold& varifold, const Mollifier& kernel, const Vector& y);

/// Throws GridTooCoarse when grid.refinement() < 2.
Vector h_eps(const DiscreteVarifold& varifold, const Mollifier& kernel,
             const QuadratureGrid& grid, const Vector& x);
Matrix grad_h_eps(const DiscreteVarifold& varifold, const Mollifier& kernel,
                  const QuadratureGrid& grid, const Vector& x);
double dissipation(const DiscreteVarifold& varifold, const Mollifier& kernel,
                   const QuadratureGrid& domain);

/// Centred local grid matching the kernel support.
QuadratureGrid local_grid(const Mollifier& kernel, int refinement);

}  // namespace varflow
