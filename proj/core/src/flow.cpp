#include "varflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "varflow/error.hpp"
#include "varflow/parallel.hpp"

namespace varflow {

Subdivision Subdivision::uniform(double end_time, double step) {
  if (end_time < 0.0 || step < 0.0) fail(ErrorCode::InvalidArgument, "negative time or step");
  Subdivision s;
  s.nodes.push_back(0.0);
  if (end_time == 0.0 || step == 0.0) return s;
  const auto count = static_cast<std::size_t>(std::ceil(end_time / step - 1e-9));
  for (std::size_t i = 1; i <= count; ++i) {
    s.nodes.push_back(i == count ? end_time : static_cast<double>(i) * step);
  }
  return s;
}

double Subdivision::max_gap() const {
  double gap = 0.0;
  for (std::size_t i = 1; i < nodes.size(); ++i) gap = std::max(gap, nodes[i] - nodes[i - 1]);
  return gap;
}

double FlowConfig::gate_rhs() const {
  return std::pow(mass_bound + 1.0, -3.0) * std::pow(eps, 8.0);
}

double FlowConfig::max_gate_step() const { return gate_rhs() / gate_constant; }

std::vector<double> FlowTrace::times() const {
  std::vector<double> t;
  t.reserve(snapshots.size());
  for (const auto& s : snapshots) t.push_back(s.time);
  return t;
}

std::vector<double> FlowTrace::masses() const {
  std::vector<double> m;
  m.reserve(snapshots.size());
  for (const auto& s : snapshots) m.push_back(s.mass);
  return m;
}

double FlowTrace::max_gap() const {
  double gap = 0.0;
  for (std::size_t i = 1; i < snapshots.size(); ++i) {
    gap = std::max(gap, snapshots[i].time - snapshots[i - 1].time);
  }
  return gap;
}

namespace {

void require_invertible(const Matrix& df) {
  if (!(std::abs(df.determinant()) > kTolerances.singular_determinant)) {
    fail(ErrorCode::SingularMap, "map differential is not invertible");
  }
}

struct PlaneImage {
  GrassmannElement plane;
  double jacobian;
};

PlaneImage map_plane(const Matrix& df, const GrassmannElement& plane) {
  require_invertible(df);
  const Matrix y = df * plane.orthonormal_basis();
  const Matrix gram = y.transpose() * y;
  const double det = gram.determinant();
  if (!(det > 0.0)) fail(ErrorCode::SingularMap, "tangential Jacobian vanishes");
  Matrix p = y * gram.ldlt().solve(y.transpose());
  p = 0.5 * (p + p.transpose());
  return {GrassmannElement::from_projection(p, plane.dim()), std::sqrt(det)};
}

}  // namespace

double tangential_jacobian(const Matrix& df, const GrassmannElement& plane) {
  require_invertible(df);
  const Matrix y = df * plane.orthonormal_basis();
  return std::sqrt((y.transpose() * y).determinant());
}

GrassmannElement plane_image(const Matrix& df, const GrassmannElement& plane) {
  return map_plane(df, plane).plane;
}

DiscreteVarifold pushforward(const DiscreteVarifold& varifold, const VectorField& map) {
  DiscreteVarifold out(varifold.ambient_dim(), varifold.dim());
  out.reserve(varifold.size());
  for (const auto& atom : varifold.atoms()) {
    auto image = map_plane(map.jacobian(atom.position), atom.plane);
    out.add(map.value(atom.position), std::move(image.plane), atom.mass * image.jacobian);
  }
  return out;
}

DiscreteVarifold pushforward_by_velocity(const DiscreteVarifold& varifold,
                                         std::span<const Vector> velocity,
                                         std::span<const Matrix> velocity_gradient, double dt,
                                         StepStats* stats) {
  if (velocity.size() != varifold.size() || velocity_gradient.size() != varifold.size()) {
    fail(ErrorCode::InvalidArgument, "velocity sample does not match atoms");
  }
  if (stats) stats->step = dt;
  if (dt == 0.0) return varifold;
  const auto n = varifold.ambient_dim();
  std::vector<Atom> atoms(varifold.size());
  std::vector<StepStats> local(varifold.size());
  parallel_for(varifold.size(), [&](std::size_t i) {
    const Atom& a = varifold.atom(i);
    const Matrix df = Matrix::Identity(n, n) + dt * velocity_gradient[i];
    auto image = map_plane(df, a.plane);
    atoms[i] = Atom{a.position + dt * velocity[i], std::move(image.plane), a.mass * image.jacobian};
    local[i].max_displacement = dt * velocity[i].norm();
    local[i].max_jacobian_deviation = std::abs(df.determinant() - 1.0);
    local[i].min_tangential_jacobian = image.jacobian;
    local[i].max_tangential_jacobian_deviation = std::abs(image.jacobian - 1.0);
  });
  DiscreteVarifold out(n, varifold.dim());
  out.reserve(atoms.size());
  for (auto& a : atoms) out.add(std::move(a));
  if (stats) {
    for (const auto& s : local) {
      stats->max_displacement = std::max(stats->max_displacement, s.max_displacement);
      stats->max_jacobian_deviation = std::max(stats->max_jacobian_deviation, s.max_jacobian_deviation);
      stats->min_tangential_jacobian = std::min(stats->min_tangential_jacobian, s.min_tangential_jacobian);
      stats->max_tangential_jacobian_deviation =
          std::max(stats->max_tangential_jacobian_deviation, s.max_tangential_jacobian_deviation);
    }
  }
  return out;
}

VelocitySample evaluate_velocity(const KernelField& field, int refinement,
                                 std::span<const Vector> points) {
  return evaluate_velocity(field, field.lattice(field.domain_grid(refinement)), points);
}

VelocitySample evaluate_velocity(const KernelField& field, const KernelField::Lattice& lattice,
                                 std::span<const Vector> points) {
  VelocitySample out;
  out.value.resize(points.size());
  out.gradient.resize(points.size());
  parallel_for(points.size(), [&](std::size_t i) {
    auto c = field.curvature(points[i], lattice);
    out.value[i] = std::move(c.h);
    out.gradient[i] = std::move(c.grad);
  });
  return out;
}

namespace {

void check_step_preconditions(const DiscreteVarifold& varifold, const FlowConfig& config) {
  if (config.enforce_gate && !config.gate_holds()) {
    std::ostringstream msg;
    msg << "c3 * dt_max = " << config.gate_lhs() << " exceeds (M+1)^-3 eps^8 = " << config.gate_rhs();
    fail(ErrorCode::GateViolated, msg.str());
  }
  const double mass = total_mass(varifold);
  if (mass > config.mass_bound + 1.0) {
    std::ostringstream msg;
    msg << "mass " << mass << " exceeds M + 1 = " << config.mass_bound + 1.0;
    fail(ErrorCode::MassBoundExceeded, msg.str());
  }
}

std::vector<Vector> positions(const DiscreteVarifold& varifold) {
  std::vector<Vector> p;
  p.reserve(varifold.size());
  for (const auto& a : varifold.atoms()) p.push_back(a.position);
  return p;
}

// Fills the velocity and the diagnostics of a snapshot; returns tracer velocities.
VelocitySample annotate(Snapshot& snap, const FlowConfig& config) {
  const int n = snap.varifold.ambient_dim();
  const KernelField field(snap.varifold, config.kernel(n));
  const auto pts = positions(snap.varifold);
  const auto lattice = field.lattice(field.domain_grid(config.refinement));
  auto atoms = evaluate_velocity(field, lattice, pts);
  snap.velocity = std::move(atoms.value);
  snap.velocity_gradient = std::move(atoms.gradient);
  snap.mass = total_mass(snap.varifold);
  snap.max_speed = 0.0;
  snap.velocity_first_variation = 0.0;
  for (std::size_t i = 0; i < snap.varifold.size(); ++i) {
    const auto& a = snap.varifold.atom(i);
    snap.max_speed = std::max(snap.max_speed, snap.velocity[i].norm());
    snap.velocity_first_variation += a.mass * tangential_divergence(a.plane, snap.velocity_gradient[i]);
  }
  snap.dissipation = config.record_dissipation ? lattice.dissipation : 0.0;
  return evaluate_velocity(field, lattice, snap.tracers);
}

}  // namespace

DiscreteVarifold advance(const DiscreteVarifold& varifold, const FlowConfig& config) {
  return advance(varifold, config, config.subdivision.max_gap());
}

DiscreteVarifold advance(const DiscreteVarifold& varifold, const FlowConfig& config, double dt) {
  check_step_preconditions(varifold, config);
  if (dt == 0.0 || varifold.empty()) return varifold;
  const KernelField field(varifold, config.kernel(varifold.ambient_dim()));
  const auto pts = positions(varifold);
  const auto v = evaluate_velocity(field, config.refinement, pts);
  return pushforward_by_velocity(varifold, v.value, v.gradient, dt);
}

FlowTrace run(const DiscreteVarifold& initial, const FlowConfig& config,
              std::vector<Vector> tracers) {
  if (config.subdivision.nodes.empty() || config.subdivision.nodes.front() != 0.0) {
    fail(ErrorCode::InvalidArgument, "subdivision must start at 0");
  }
  for (std::size_t i = 1; i < config.subdivision.nodes.size(); ++i) {
    if (!(config.subdivision.nodes[i] > config.subdivision.nodes[i - 1])) {
      fail(ErrorCode::InvalidArgument, "subdivision nodes must be strictly increasing");
    }
  }
  if (total_mass(initial) > config.mass_bound) {
    fail(ErrorCode::MassBoundExceeded, "initial mass exceeds the configured bound M");
  }
  if (config.enforce_gate && !config.gate_holds()) {
    std::ostringstream msg;
    msg << "c3 * dt_max = " << config.gate_lhs() << " exceeds (M+1)^-3 eps^8 = " << config.gate_rhs();
    fail(ErrorCode::GateViolated, msg.str());
  }

  FlowTrace trace;
  trace.config = config;
  const auto& nodes = config.subdivision.nodes;
  trace.snapshots.reserve(nodes.size());
  trace.steps.reserve(nodes.size() - 1);

  Snapshot current;
  current.time = nodes.front();
  current.varifold = initial;
  current.tracers = std::move(tracers);
  auto tracer_velocity = annotate(current, config);

  for (std::size_t i = 1; i < nodes.size(); ++i) {
    const double dt = nodes[i] - nodes[i - 1];
    check_step_preconditions(current.varifold, config);
    StepStats stats;
    Snapshot next;
    next.time = nodes[i];
    next.varifold = pushforward_by_velocity(current.varifold, current.velocity,
                                            current.velocity_gradient, dt, &stats);
    next.tracers.reserve(current.tracers.size());
    const int n = current.varifold.ambient_dim();
    for (std::size_t k = 0; k < current.tracers.size(); ++k) {
      next.tracers.push_back(current.tracers[k] + dt * tracer_velocity.value[k]);
      const Matrix df = Matrix::Identity(n, n) + dt * tracer_velocity.gradient[k];
      stats.max_displacement = std::max(stats.max_displacement, dt * tracer_velocity.value[k].norm());
      stats.max_jacobian_deviation =
          std::max(stats.max_jacobian_deviation, std::abs(df.determinant() - 1.0));
    }
    trace.snapshots.push_back(std::move(current));
    trace.steps.push_back(stats);
    current = std::move(next);
    tracer_velocity = annotate(current, config);
  }
  trace.snapshots.push_back(std::move(current));
  return trace;
}

namespace {

// Index i with t_i <= t < t_{i+1}, or the last index when t == t_m.
std::size_t locate(const FlowTrace& trace, double t) {
  const auto& s = trace.snapshots;
  if (s.empty()) fail(ErrorCode::OutOfSpan, "empty trace");
  constexpr double slack = 1e-12;
  if (t < s.front().time - slack || t > s.back().time + slack) {
    std::ostringstream msg;
    msg << "t = " << t << " outside [" << s.front().time << ", " << s.back().time << "]";
    fail(ErrorCode::OutOfSpan, msg.str());
  }
  auto it = std::upper_bound(s.begin(), s.end(), t,
                             [](double value, const Snapshot& snap) { return value < snap.time; });
  if (it == s.begin()) return 0;
  return static_cast<std::size_t>(std::distance(s.begin(), it)) - 1;
}

double weighted_velocity_variation(const Snapshot& snap, const ScalarField& phi, double t) {
  double sum = 0.0;
  for (std::size_t i = 0; i < snap.varifold.size(); ++i) {
    const auto& a = snap.varifold.atom(i);
    const double div = tangential_divergence(a.plane, snap.velocity_gradient[i]);
    sum += a.mass * (phi.value(a.position, t) * div + phi.gradient(a.position, t).dot(snap.velocity[i]));
  }
  return sum;
}

double time_derivative_integral(const Snapshot& snap, const ScalarField& phi, double t) {
  double sum = 0.0;
  for (const auto& a : snap.varifold.atoms()) sum += a.mass * phi.time_derivative(a.position, t);
  return sum;
}

}  // namespace

DiscreteVarifold sample(const FlowTrace& trace, double t, FlowMode mode) {
  const std::size_t i = locate(trace, t);
  const Snapshot& snap = trace.snapshots[i];
  if (mode == FlowMode::Piecewise || t <= snap.time) return snap.varifold;
  return pushforward_by_velocity(snap.varifold, snap.velocity, snap.velocity_gradient, t - snap.time);
}

double brakke_residual(const FlowTrace& trace, const ScalarField& phi, double t1, double t2) {
  if (t2 < t1) fail(ErrorCode::InvalidArgument, "brakke_residual needs t1 <= t2");
  const std::size_t i1 = locate(trace, t1);
  const std::size_t i2 = locate(trace, t2);
  const auto& s = trace.snapshots;
  double value = mass_integral(s[i2].varifold, phi, t2) - mass_integral(s[i1].varifold, phi, t1);
  double integral = 0.0;
  for (std::size_t i = i1; i <= i2; ++i) {
    const double a = std::max(t1, s[i].time);
    const double b = (i + 1 < s.size()) ? std::min(t2, s[i + 1].time) : t2;
    if (!(b > a)) continue;
    integral += (b - a) * (weighted_velocity_variation(s[i], phi, a) +
                           time_derivative_integral(s[i], phi, a));
  }
  return std::abs(value - integral);
}

double dissipation_budget(const FlowTrace& trace) {
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < trace.snapshots.size(); ++i) {
    sum += (trace.snapshots[i + 1].time - trace.snapshots[i].time) * trace.snapshots[i].dissipation;
  }
  return sum;
}

}  // namespace varflow
