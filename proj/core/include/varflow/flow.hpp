#pragma once

// Varifold pushforward and the time-discrete approximate mean curvature flow:
//
//   V(t_i) = (f_i)_# V(t_{i-1}),   f_i = Id + (t_i - t_{i-1}) h_eps(., V(t_{i-1})).
//
// A FlowTrace keeps every snapshot together with the velocity field that
// produced the next one, so interpolated samples and Brakke-type residuals can
// be evaluated afterwards without re-running the kernel sums.

#include <span>
#include <vector>

#include "varflow/mollifier.hpp"
#include "varflow/varifold.hpp"

namespace varflow {

enum class FlowMode { Piecewise, Interpolated };

struct Subdivision {
  std::vector<double> nodes;  // 0 = t_0 < t_1 < ... < t_m

  /// Uniform nodes 0, dt, 2 dt, ... up to end_time; the last gap is shortened
  /// to land on end_time exactly. dt = 0 or end_time = 0 gives {0}.
  static Subdivision uniform(double end_time, double step);

  double max_gap() const;
  double end_time() const { return nodes.empty() ? 0.0 : nodes.back(); }
  std::size_t steps() const { return nodes.empty() ? 0 : nodes.size() - 1; }
};

struct FlowConfig {
  double eps = 0.1;
  double mass_bound = 1.0;  // M
  Subdivision subdivision;
  double gate_constant = 1.0;  // c3 in  c3 * dt_max <= (M + 1)^-3 eps^8
  bool enforce_gate = true;
  double cutoff_multiple = 4.0;
  int refinement = 4;
  FlowMode mode = FlowMode::Piecewise;
  bool record_dissipation = true;

  double gate_lhs() const { return gate_constant * subdivision.max_gap(); }
  double gate_rhs() const;
  bool gate_holds() const { return gate_lhs() <= gate_rhs(); }

  /// Largest uniform step admitted by the gate.
  double max_gate_step() const;

  Mollifier kernel(int n) const { return Mollifier(n, eps, cutoff_multiple); }
};

/// Diagnostics of one step map f = Id + dt h_eps, taken over atoms and tracers.
struct StepStats {
  double step = 0.0;
  double max_displacement = 0.0;        // sup |f - Id|
  double max_jacobian_deviation = 0.0;  // sup |det Df - 1|
  double min_tangential_jacobian = 1.0;
  double max_tangential_jacobian_deviation = 0.0;  // sup |J_S f - 1|
};

struct Snapshot {
  double time = 0.0;
  DiscreteVarifold varifold;
  std::vector<Vector> velocity;           // h_eps(x_i)
  std::vector<Matrix> velocity_gradient;  // D h_eps(x_i)
  std::vector<Vector> tracers;            // auxiliary points moved by the same maps
  double mass = 0.0;
  double dissipation = 0.0;
  double max_speed = 0.0;
  double velocity_first_variation = 0.0;  // delta V(h_eps)
};

struct FlowTrace {
  FlowConfig config;
  std::vector<Snapshot> snapshots;
  std::vector<StepStats> steps;

  std::vector<double> times() const;
  std::vector<double> masses() const;
  double max_gap() const;
  int ambient_dim() const { return snapshots.front().varifold.ambient_dim(); }
  int dim() const { return snapshots.front().varifold.dim(); }
};

/// det(Y^T Y)^{1/2} with Y = Df * (orthonormal basis of S). Throws SingularMap
/// when |det Df| <= 1e-12.
double tangential_jacobian(const Matrix& df, const GrassmannElement& plane);

/// Projection onto Df(S): Y (Y^T Y)^{-1} Y^T.
GrassmannElement plane_image(const Matrix& df, const GrassmannElement& plane);

/// Atoms map to (f(x), Df(x)(S), m J_S f(x)).
DiscreteVarifold pushforward(const DiscreteVarifold& varifold, const VectorField& map);

/// Pushforward under x -> x + dt v_i with Df = I + dt Dv_i given per atom.
DiscreteVarifold pushforward_by_velocity(const DiscreteVarifold& varifold,
                                         std::span<const Vector> velocity,
                                         std::span<const Matrix> velocity_gradient, double dt,
                                         StepStats* stats = nullptr);

struct VelocitySample {
  std::vector<Vector> value;
  std::vector<Matrix> gradient;
};

/// h_eps and D h_eps at every point, in parallel over points. The outer
/// convolution runs over the lattice of field.domain_grid(refinement).
VelocitySample evaluate_velocity(const KernelField& field, int refinement,
                                 std::span<const Vector> points);
VelocitySample evaluate_velocity(const KernelField& field, const KernelField::Lattice& lattice,
                                 std::span<const Vector> points);

/// One step of size dt (default: the largest subdivision gap).
/// Throws GateViolated or MassBoundExceeded.
DiscreteVarifold advance(const DiscreteVarifold& varifold, const FlowConfig& config);
DiscreteVarifold advance(const DiscreteVarifold& varifold, const FlowConfig& config, double dt);

/// Iterates advance over config.subdivision, recording per-snapshot
/// diagnostics. Tracers are moved by the same step maps as the atoms.
FlowTrace run(const DiscreteVarifold& initial, const FlowConfig& config,
              std::vector<Vector> tracers = {});

/// Piecewise: V(t_i) on [t_i, t_{i+1}). Interpolated: (Id + (t - t_i) h_i)_# V(t_i).
/// Throws OutOfSpan.
DiscreteVarifold sample(const FlowTrace& trace, double t, FlowMode mode);

/// Absolute defect of the epsilon-Brakke identity for the piecewise flow on
/// [t1, t2], with left-endpoint rectangles for both time integrals.
double brakke_residual(const FlowTrace& trace, const ScalarField& phi, double t1, double t2);

/// sum_i (t_{i+1} - t_i) * dissipation(V(t_i))
double dissipation_budget(const FlowTrace& trace);

}  // namespace varflow
