#pragma once

// Sphere barriers psi(x, t) = gamma(|x - a|^2 + 2 d t) and monitors that
// evaluate barrier and avoidance inequalities along flow traces.

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "varflow/flow.hpp"
#include "varflow/verdict.hpp"

namespace varflow {

enum class BarrierOrientation {
  External,  // gamma(r) = (R^2 - r)^beta for r < R^2, zero outside
  Internal,  // gamma(r) = (r - R^2)^beta for r > R^2, zero inside
};

class BarrierFunction {
 public:
  BarrierFunction(Vector center, double radius, int d, double beta = 4.0,
                  BarrierOrientation orientation = BarrierOrientation::External);

  const Vector& center() const { return center_; }
  double radius() const { return radius_; }
  double beta() const { return beta_; }
  int dim() const { return d_; }
  int ambient_dim() const { return static_cast<int>(center_.size()); }
  BarrierOrientation orientation() const { return orientation_; }

  /// k-th derivative of gamma at r, k in [0, 3].
  double gamma(double r, int k = 0) const;

  double value(const Vector& x, double t) const;
  Vector gradient(const Vector& x, double t) const;
  Matrix hessian(const Vector& x, double t) const;
  double time_derivative(const Vector& x, double t) const;

  /// (gamma')^2 <= 4 gamma gamma'' on `samples` points of the support in r;
  /// returns the largest violation (<= 0 when the axiom holds).
  double axiom_violation(int samples = 4096) const;

  /// Sup norms over space at t = 0 (where they are largest), by a radial
  /// sweep with spacing R / 256 and a 1.05 safety factor.
  /// c3_norm = |psi|_inf + |D psi|_inf + |D^2 psi|_inf + |D^3 psi|_inf (Frobenius).
  double c2_norm() const;
  double c3_norm() const;
  /// || grad psi(., 0) ||_{L^2}, external orientation only.
  double gradient_l2_norm() const;

  ScalarField as_field() const;

 private:
  void radial_norms(double& c0, double& c1, double& c2, double& c3) const;

  Vector center_;
  double radius_;
  int d_;
  double beta_;
  BarrierOrientation orientation_;
};

/// (1/4)|S grad phi|^2 / phi + grad phi . h - (-|h|^2 phi + S_perp grad phi . h).
/// Throws NonpositiveWeight when phi <= 0.
double technical_gap(const Vector& h, double phi, const Vector& grad_phi, const GrassmannElement& plane);

/// Smallest technical_gap over `samples` random inputs in R^n with d-planes;
/// every tenth sample sits on the equality case h = -S grad phi / (2 phi).
double technical_lemma_sweep(std::size_t samples, std::uint64_t seed, int n, int d);

/// (1/4)|S grad psi|^2 / psi - S : D^2 psi + d/dt psi. Throws ZeroBarrier when
/// psi(x, t) <= 1e-14.
double barrier_defect(const BarrierFunction& psi, const Vector& x, const GrassmannElement& plane,
                      double t);

struct DefectSweep {
  double max_defect = -std::numeric_limits<double>::infinity();
  std::size_t evaluations = 0;
};

/// Largest barrier_defect over a tensor grid of `per_axis` points per space
/// axis on the cube around B(a, R) and `per_axis` times in [0, R^2 / (4 d)],
/// each tested against `planes` random d-planes. Points with psi <= 1e-14
/// are skipped.
DefectSweep barrier_defect_sweep(const BarrierFunction& psi, int per_axis, int planes,
                                 std::uint64_t seed);

struct SeriesPoint {
  double time = 0.0;
  double value = 0.0;
  bool empty = false;  // window vanished
};

/// Mass inside the open ball B(a, sqrt(R^2 - 2 d t_i)) per snapshot.
std::vector<SeriesPoint> external_sphere_monitor(const FlowTrace& trace, const Vector& center,
                                                 double radius);

/// max_i |x_i - a| - sqrt(max(R^2 - 2 d t, 0)) per snapshot; empty snapshots
/// report -inf.
std::vector<SeriesPoint> internal_sphere_monitor(const FlowTrace& trace, const Vector& center,
                                                 double radius);

struct BarrierCertificateOptions {
  double c5 = 1.0;
  double eps0 = 1.0;
};

struct BarrierCertificate {
  Verdict verdict;
  double c = 0.0;
  double c7 = 0.0;
  double c3_norm = 0.0;
  double gradient_l2 = 0.0;
  double max_increase = 0.0;  // max over t1 <= t2 of ||V(t2)||(psi(t2)) - ||V(t1)||(psi(t1))
};

/// c7 = c (10 M + 9), c = 2 max{||psi||_C3, ||grad psi||_L2, 1}; checks the
/// increase of ||V(t)||(psi(., t)) over all snapshot pairs against c7 eps^{1/6}.
/// Throws PreconditionViolated when c5 delta eps^-8 > eps or eps >= eps0.
BarrierCertificate epsilon_barrier_certificate(const FlowTrace& trace, const BarrierFunction& psi,
                                               const BarrierCertificateOptions& options = {});

/// Distance of the point to conv(points), by Wolfe's minimum-norm-point method.
double hull_distance(const std::vector<Vector>& points, const Vector& query);

/// Max distance of atoms to the convex hull of the initial atoms, per snapshot.
std::vector<SeriesPoint> convex_hull_monitor(const FlowTrace& trace);

/// Minimum distance between atoms of the two traces per snapshot.
/// Throws GridMismatch when the time grids differ.
std::vector<SeriesPoint> avoidance_distance(const FlowTrace& a, const FlowTrace& b);

struct LscReport {
  Verdict verdict;
  double constant = 0.0;  // C
  std::vector<SeriesPoint> series;  // ||V(t_i)||(psi) - C t_i
  double max_increment = 0.0;
};

/// Checks that t -> ||V(t)||(psi) - C t is nonincreasing up to tol * delta per
/// step. C defaults to psi.c2_norm * ||V_0||(R^n).
LscReport lsc_monitor(const FlowTrace& trace, const ScalarField& psi,
                      std::optional<double> constant = std::nullopt, double tol = 1.0);

}  // namespace varflow
