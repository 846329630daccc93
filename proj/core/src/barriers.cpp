#include "varflow/barriers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "varflow/error.hpp"
#include "varflow/parallel.hpp"
#include "varflow/random.hpp"

namespace varflow {

BarrierFunction::BarrierFunction(Vector center, double radius, int d, double beta,
                                 BarrierOrientation orientation)
    : center_(std::move(center)), radius_(radius), d_(d), beta_(beta), orientation_(orientation) {
  if (!(radius > 0.0)) fail(ErrorCode::InvalidArgument, "barrier radius must be positive");
  if (!(beta > 0.0)) fail(ErrorCode::InvalidArgument, "barrier exponent must be positive");
  if (d < 1 || d >= center_.size()) fail(ErrorCode::InvalidArgument, "barrier needs 1 <= d < n");
}

double BarrierFunction::gamma(double r, int k) const {
  const double r2 = radius_ * radius_;
  const bool external = orientation_ == BarrierOrientation::External;
  const double s = external ? r2 - r : r - r2;
  if (s <= 0.0) return 0.0;
  double coeff = 1.0;
  for (int j = 0; j < k; ++j) coeff *= beta_ - j;
  if (coeff == 0.0) return 0.0;
  if (external && (k % 2 == 1)) coeff = -coeff;
  return coeff * std::pow(s, beta_ - k);
}

double BarrierFunction::value(const Vector& x, double t) const {
  return gamma((x - center_).squaredNorm() + 2.0 * d_ * t, 0);
}

Vector BarrierFunction::gradient(const Vector& x, double t) const {
  const Vector y = x - center_;
  return 2.0 * gamma(y.squaredNorm() + 2.0 * d_ * t, 1) * y;
}

Matrix BarrierFunction::hessian(const Vector& x, double t) const {
  const Vector y = x - center_;
  const double r = y.squaredNorm() + 2.0 * d_ * t;
  const auto n = y.size();
  return 4.0 * gamma(r, 2) * y * y.transpose() + 2.0 * gamma(r, 1) * Matrix::Identity(n, n);
}

double BarrierFunction::time_derivative(const Vector& x, double t) const {
  return 2.0 * d_ * gamma((x - center_).squaredNorm() + 2.0 * d_ * t, 1);
}

double BarrierFunction::axiom_violation(int samples) const {
  const double r2 = radius_ * radius_;
  // External support is r in [0, R^2); internal support is sampled on (R^2, 4 R^2].
  const double lo = orientation_ == BarrierOrientation::External ? 0.0 : r2;
  const double hi = orientation_ == BarrierOrientation::External ? r2 : 4.0 * r2;
  double worst = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < samples; ++i) {
    const double r = lo + (hi - lo) * (i + 0.5) / samples;
    const double g = gamma(r, 0);
    if (!(g > 0.0)) continue;
    const double g1 = gamma(r, 1);
    const double g2 = gamma(r, 2);
    // Scale-free form: (gamma')^2 / gamma - 4 gamma''.
    worst = std::max(worst, g1 * g1 / g - 4.0 * g2);
  }
  return worst;
}

void BarrierFunction::radial_norms(double& c0, double& c1, double& c2, double& c3) const {
  const int n = ambient_dim();
  const double rho_max =
      orientation_ == BarrierOrientation::External ? radius_ : 2.0 * radius_;
  const int steps = 256 * static_cast<int>(std::ceil(rho_max / radius_));
  const double h = rho_max / steps;
  c0 = c1 = c2 = c3 = 0.0;
  for (int i = 0; i <= steps; ++i) {
    const double rho = i * h;
    const double r = rho * rho;
    const double g0 = gamma(r, 0), g1 = gamma(r, 1), g2 = gamma(r, 2), g3 = gamma(r, 3);
    c0 = std::max(c0, std::abs(g0));
    c1 = std::max(c1, 2.0 * std::abs(g1) * rho);
    // y = rho e_1: D^2 psi = 4 g2 y y^T + 2 g1 I.
    const double d2 = std::sqrt(std::pow(4.0 * g2 * r + 2.0 * g1, 2) + (n - 1) * 4.0 * g1 * g1);
    c2 = std::max(c2, d2);
    // D^3 psi_ijk = 8 g3 y_i y_j y_k + 4 g2 (delta_ij y_k + delta_ik y_j + delta_jk y_i).
    // With y = rho e_1 the nonzero entries are (1,1,1) and the permutations of (1,j,j), j > 1.
    const double e111 = 8.0 * g3 * r * rho + 12.0 * g2 * rho;
    const double e1jj = 4.0 * g2 * rho;
    c3 = std::max(c3, std::sqrt(e111 * e111 + 3.0 * (n - 1) * e1jj * e1jj));
  }
  constexpr double safety = 1.05;
  c0 *= safety;
  c1 *= safety;
  c2 *= safety;
  c3 *= safety;
}

double BarrierFunction::c2_norm() const {
  double c0, c1, c2, c3;
  radial_norms(c0, c1, c2, c3);
  return c0 + c1 + c2;
}

double BarrierFunction::c3_norm() const {
  double c0, c1, c2, c3;
  radial_norms(c0, c1, c2, c3);
  return c0 + c1 + c2 + c3;
}

double BarrierFunction::gradient_l2_norm() const {
  if (orientation_ != BarrierOrientation::External) {
    fail(ErrorCode::InvalidArgument, "internal barriers are not square integrable");
  }
  const int n = ambient_dim();
  const double sphere = 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
  auto integrand = [&](double rho) {
    const double g = 2.0 * gamma(rho * rho, 1) * rho;
    return g * g * sphere * std::pow(rho, n - 1);
  };
  const double sq = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      integrand, 0.0, radius_, 10, 1e-13);
  return std::sqrt(sq);
}

ScalarField BarrierFunction::as_field() const {
  ScalarField f;
  const BarrierFunction self = *this;
  f.value = [self](const Vector& x, double t) { return self.value(x, t); };
  f.gradient = [self](const Vector& x, double t) { return self.gradient(x, t); };
  f.hessian = [self](const Vector& x, double t) { return self.hessian(x, t); };
  f.time_derivative = [self](const Vector& x, double t) { return self.time_derivative(x, t); };
  double c0, c1, c2, c3;
  radial_norms(c0, c1, c2, c3);
  f.c1_norm = c0 + c1;
  f.c2_norm = c0 + c1 + c2;
  return f;
}

double technical_gap(const Vector& h, double phi, const Vector& grad_phi,
                     const GrassmannElement& plane) {
  if (!(phi > 0.0)) fail(ErrorCode::NonpositiveWeight, "technical_gap needs phi > 0");
  // Extended precision: at the equality case the two sides cancel to zero
  // from terms of size |S grad phi|^2 / phi.
  using Wide = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
  const Wide g = grad_phi.cast<long double>();
  const Wide v = h.cast<long double>();
  const long double w = phi;
  const Wide s_grad = plane.projection().cast<long double>() * g;
  const Wide perp_grad = g - s_grad;
  const long double rhs = 0.25L * s_grad.squaredNorm() / w + g.dot(v);
  const long double lhs = -v.squaredNorm() * w + perp_grad.dot(v);
  return static_cast<double>(rhs - lhs);
}

double technical_lemma_sweep(std::size_t samples, std::uint64_t seed, int n, int d) {
  std::vector<double> gaps(samples);
  parallel_for(samples, [&](std::size_t i) {
    CounterRng rng(seed, i);
    const auto plane = random_plane(rng, n, d);
    // Log-uniform scales exercise both tiny and large weights.
    const double phi = std::exp(8.0 * (rng.uniform() - 0.5));
    const Vector grad = std::exp(4.0 * (rng.uniform() - 0.5)) * gaussian_vector(rng, n);
    Vector h = std::exp(4.0 * (rng.uniform() - 0.5)) * gaussian_vector(rng, n);
    if (i % 10 == 0) h = -0.5 * (plane.projection() * grad) / phi;
    gaps[i] = technical_gap(h, phi, grad, plane);
  });
  double worst = std::numeric_limits<double>::infinity();
  for (double g : gaps) worst = std::min(worst, g);
  return worst;
}

double barrier_defect(const BarrierFunction& psi, const Vector& x, const GrassmannElement& plane,
                      double t) {
  const double v = psi.value(x, t);
  if (!(v > kTolerances.zero_barrier)) fail(ErrorCode::ZeroBarrier, "barrier vanishes at x");
  const Vector s_grad = plane.projection() * psi.gradient(x, t);
  return 0.25 * s_grad.squaredNorm() / v - tangential_divergence(plane, psi.hessian(x, t)) +
         psi.time_derivative(x, t);
}

DefectSweep barrier_defect_sweep(const BarrierFunction& psi, int per_axis, int planes,
                                 std::uint64_t seed) {
  if (per_axis < 2 || planes < 1) fail(ErrorCode::InvalidArgument, "sweep needs per_axis >= 2, planes >= 1");
  const int n = psi.ambient_dim();
  const int d = psi.dim();
  const double r = psi.radius();
  const double t_max = r * r / (4.0 * d);
  std::vector<GrassmannElement> sampled;
  for (int k = 0; k < planes; ++k) {
    CounterRng rng(seed, static_cast<std::uint64_t>(k));
    sampled.push_back(random_plane(rng, n, d));
  }
  std::size_t points = 1;
  for (int i = 0; i < n; ++i) points *= static_cast<std::size_t>(per_axis);
  // One task per time level; within a level, spatial nodes in lexicographic order.
  std::vector<DefectSweep> level(static_cast<std::size_t>(per_axis));
  parallel_for(level.size(), [&](std::size_t it) {
    const double t = t_max * static_cast<double>(it) / (per_axis - 1);
    DefectSweep local;
    Vector x(n);
    for (std::size_t idx = 0; idx < points; ++idx) {
      std::size_t rest = idx;
      for (int k = 0; k < n; ++k) {
        const auto j = static_cast<double>(rest % static_cast<std::size_t>(per_axis));
        rest /= static_cast<std::size_t>(per_axis);
        x(k) = psi.center()(k) - r + 2.0 * r * j / (per_axis - 1);
      }
      if (!(psi.value(x, t) > kTolerances.zero_barrier)) continue;
      for (const auto& plane : sampled) {
        local.max_defect = std::max(local.max_defect, barrier_defect(psi, x, plane, t));
        ++local.evaluations;
      }
    }
    level[it] = local;
  });
  DefectSweep total;
  for (const auto& l : level) {
    total.max_defect = std::max(total.max_defect, l.max_defect);
    total.evaluations += l.evaluations;
  }
  return total;
}

std::vector<SeriesPoint> external_sphere_monitor(const FlowTrace& trace, const Vector& center,
                                                 double radius) {
  std::vector<SeriesPoint> out;
  out.reserve(trace.snapshots.size());
  const int d = trace.dim();
  for (const auto& s : trace.snapshots) {
    SeriesPoint p{s.time, 0.0, false};
    const double w2 = radius * radius - 2.0 * d * s.time;
    if (w2 <= 0.0) {
      p.empty = true;
    } else {
      for (const auto& a : s.varifold.atoms()) {
        if ((a.position - center).squaredNorm() < w2) p.value += a.mass;
      }
    }
    out.push_back(p);
  }
  return out;
}

std::vector<SeriesPoint> internal_sphere_monitor(const FlowTrace& trace, const Vector& center,
                                                 double radius) {
  std::vector<SeriesPoint> out;
  out.reserve(trace.snapshots.size());
  const int d = trace.dim();
  for (const auto& s : trace.snapshots) {
    const double w2 = radius * radius - 2.0 * d * s.time;
    SeriesPoint p{s.time, -std::numeric_limits<double>::infinity(), w2 <= 0.0};
    for (const auto& a : s.varifold.atoms()) {
      p.value = std::max(p.value, (a.position - center).norm() - std::sqrt(std::max(w2, 0.0)));
    }
    out.push_back(p);
  }
  return out;
}

BarrierCertificate epsilon_barrier_certificate(const FlowTrace& trace, const BarrierFunction& psi,
                                               const BarrierCertificateOptions& options) {
  const double eps = trace.config.eps;
  const double delta = trace.max_gap();
  const double lhs = options.c5 * delta * std::pow(eps, -8.0);
  if (lhs > eps) {
    std::ostringstream msg;
    msg << "c5 * delta * eps^-8 = " << lhs << " exceeds eps = " << eps;
    fail(ErrorCode::PreconditionViolated, msg.str());
  }
  if (!(eps < options.eps0)) {
    std::ostringstream msg;
    msg << "eps = " << eps << " is not below eps0 = " << options.eps0;
    fail(ErrorCode::PreconditionViolated, msg.str());
  }
  if (trace.config.mode != FlowMode::Piecewise) {
    fail(ErrorCode::PreconditionViolated, "certificate applies to the piecewise flow");
  }

  BarrierCertificate cert;
  cert.c3_norm = psi.c3_norm();
  cert.gradient_l2 = psi.gradient_l2_norm();
  cert.c = 2.0 * std::max({cert.c3_norm, cert.gradient_l2, 1.0});
  cert.c7 = cert.c * (10.0 * trace.config.mass_bound + 9.0);

  // max_{i <= j} v_j - v_i via the running minimum.
  double running_min = std::numeric_limits<double>::infinity();
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& s : trace.snapshots) {
    double v = 0.0;
    for (const auto& a : s.varifold.atoms()) v += a.mass * psi.value(a.position, s.time);
    running_min = std::min(running_min, v);
    best = std::max(best, v - running_min);
  }
  cert.max_increase = best;

  auto& verdict = cert.verdict;
  verdict.name = "epsilon_sphere_barrier";
  verdict.anchor = "approximate sphere barrier: mass under psi grows by at most c7 eps^(1/6)";
  verdict.bound = cert.c7 * std::pow(eps, 1.0 / 6.0);
  verdict.measured = best;
  verdict.pass = best <= verdict.bound;
  verdict.details = {{"c", cert.c},           {"c7", cert.c7},   {"c3_norm", cert.c3_norm},
                     {"grad_l2", cert.gradient_l2}, {"eps", eps}, {"delta", delta}};
  return cert;
}

double hull_distance(const std::vector<Vector>& points, const Vector& query) {
  if (points.empty()) fail(ErrorCode::InvalidArgument, "empty point set");
  const std::size_t m = points.size();
  const auto n = query.size();
  Matrix p(n, static_cast<Eigen::Index>(m));
  double scale = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    p.col(static_cast<Eigen::Index>(i)) = points[i] - query;
    scale = std::max(scale, p.col(static_cast<Eigen::Index>(i)).squaredNorm());
  }
  if (scale == 0.0) return 0.0;
  const double tol = 1e-13 * scale;

  std::vector<Eigen::Index> active;
  std::vector<double> lambda;
  {
    Eigen::Index best = 0;
    p.colwise().squaredNorm().minCoeff(&best);
    active.push_back(best);
    lambda.push_back(1.0);
  }
  Vector x = p.col(active.front());

  const std::size_t max_iter = 10 * m + 100;
  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    if (x.squaredNorm() <= tol) return 0.0;
    Eigen::Index j = 0;
    const Vector dots = p.transpose() * x;
    dots.minCoeff(&j);
    if (x.squaredNorm() - dots(j) <= tol) break;
    if (std::find(active.begin(), active.end(), j) != active.end()) break;
    active.push_back(j);
    lambda.push_back(0.0);

    for (std::size_t inner = 0; inner < max_iter; ++inner) {
      // Affine minimum-norm point of the active set.
      const auto k = static_cast<Eigen::Index>(active.size());
      Matrix q(n, k);
      for (Eigen::Index c = 0; c < k; ++c) q.col(c) = p.col(active[static_cast<std::size_t>(c)]);
      Matrix kkt = Matrix::Zero(k + 1, k + 1);
      kkt.topLeftCorner(k, k) = q.transpose() * q;
      kkt.block(0, k, k, 1).setOnes();
      kkt.block(k, 0, 1, k).setOnes();
      Vector rhs = Vector::Zero(k + 1);
      rhs(k) = 1.0;
      const Vector sol = kkt.completeOrthogonalDecomposition().solve(rhs);
      const Vector mu = sol.head(k);
      if (mu.minCoeff() > 1e-14) {
        for (Eigen::Index c = 0; c < k; ++c) lambda[static_cast<std::size_t>(c)] = mu(c);
        break;
      }
      double theta = 1.0;
      for (Eigen::Index c = 0; c < k; ++c) {
        const double l = lambda[static_cast<std::size_t>(c)];
        if (mu(c) <= 1e-14 && l - mu(c) > 0.0) theta = std::min(theta, l / (l - mu(c)));
      }
      std::vector<Eigen::Index> keep;
      std::vector<double> kept;
      for (Eigen::Index c = 0; c < k; ++c) {
        const double l = lambda[static_cast<std::size_t>(c)];
        const double nl = l + theta * (mu(c) - l);
        if (nl > 1e-14) {
          keep.push_back(active[static_cast<std::size_t>(c)]);
          kept.push_back(nl);
        }
      }
      if (keep.empty()) {
        keep.push_back(active.back());
        kept.push_back(1.0);
      }
      double sum = 0.0;
      for (double l : kept) sum += l;
      for (double& l : kept) l /= sum;
      active = std::move(keep);
      lambda = std::move(kept);
    }
    Vector next = Vector::Zero(n);
    for (std::size_t c = 0; c < active.size(); ++c) next += lambda[c] * p.col(active[c]);
    if (next.squaredNorm() >= x.squaredNorm() - 1e-16 * scale && iter > 0) {
      x = next;
      break;
    }
    x = next;
  }
  return x.norm();
}

std::vector<SeriesPoint> convex_hull_monitor(const FlowTrace& trace) {
  std::vector<Vector> initial;
  for (const auto& a : trace.snapshots.front().varifold.atoms()) initial.push_back(a.position);
  std::vector<SeriesPoint> out(trace.snapshots.size());
  parallel_for(trace.snapshots.size(), [&](std::size_t i) {
    const auto& s = trace.snapshots[i];
    double worst = 0.0;
    for (const auto& a : s.varifold.atoms()) worst = std::max(worst, hull_distance(initial, a.position));
    out[i] = SeriesPoint{s.time, worst, s.varifold.empty()};
  });
  return out;
}

std::vector<SeriesPoint> avoidance_distance(const FlowTrace& a, const FlowTrace& b) {
  if (a.snapshots.size() != b.snapshots.size()) {
    fail(ErrorCode::GridMismatch, "traces have different snapshot counts");
  }
  for (std::size_t i = 0; i < a.snapshots.size(); ++i) {
    if (std::abs(a.snapshots[i].time - b.snapshots[i].time) > 1e-12) {
      fail(ErrorCode::GridMismatch, "traces have different time grids");
    }
  }
  std::vector<SeriesPoint> out(a.snapshots.size());
  parallel_for(a.snapshots.size(), [&](std::size_t i) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : a.snapshots[i].varifold.atoms()) {
      for (const auto& q : b.snapshots[i].varifold.atoms()) {
        best = std::min(best, (p.position - q.position).squaredNorm());
      }
    }
    out[i] = SeriesPoint{a.snapshots[i].time, std::sqrt(best), !std::isfinite(best)};
  });
  return out;
}

LscReport lsc_monitor(const FlowTrace& trace, const ScalarField& psi,
                      std::optional<double> constant, double tol) {
  LscReport report;
  report.constant = constant ? *constant : psi.c2_norm * trace.snapshots.front().mass;
  const double delta = trace.max_gap();
  for (const auto& s : trace.snapshots) {
    report.series.push_back(
        SeriesPoint{s.time, mass_integral(s.varifold, psi, s.time) - report.constant * s.time, false});
  }
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < report.series.size(); ++i) {
    worst = std::max(worst, report.series[i].value - report.series[i - 1].value);
  }
  if (report.series.size() < 2) worst = 0.0;
  report.max_increment = worst;
  auto& v = report.verdict;
  v.name = "lower_semicontinuity";
  v.anchor = "t -> ||V(t)||(psi) - C t is nonincreasing";
  v.bound = tol * delta;
  v.measured = worst;
  v.pass = worst <= v.bound;
  v.details = {{"C", report.constant}, {"delta", delta}};
  return report;
}

}  // namespace varflow
