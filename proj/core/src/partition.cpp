#include "varflow/partition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>

#include "varflow/error.hpp"
#include "varflow/parallel.hpp"

namespace varflow {

void OpenPartition::validate() const {
  boundary.validate();
  for (int r = 1; r < region_count(); ++r) {
    if (!is_closed(boundary, r)) {
      fail(ErrorCode::OpenMesh, "boundary of region " + std::to_string(r) + " is not closed");
    }
  }
}

double unit_ball_volume(int n) {
  return std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

double volume_change_constant(int n, double radius) {
  const double w = unit_ball_volume(n);
  return w * std::pow(radius, n) +
         std::max(std::pow(2.0, n) * w, 2.0 * n * w * std::pow(radius + 1.0, n - 1));
}

Vector sample_ball(const Vector& center, double radius, std::uint64_t seed, std::uint64_t index) {
  CounterRng rng(seed, index);
  const auto n = center.size();
  Vector u(n);
  for (;;) {
    for (Eigen::Index k = 0; k < n; ++k) u(k) = 2.0 * rng.uniform() - 1.0;
    if (u.squaredNorm() < 1.0) return center + radius * u;
  }
}

namespace {

struct McSum {
  double mean = 0.0;
  double standard_error = 0.0;
};

// Mean and standard error of values in {-1, 0, 1} indexed by sample.
McSum summarize(const std::vector<signed char>& x) {
  double s1 = 0.0, s2 = 0.0;
  for (signed char v : x) {
    s1 += v;
    s2 += v * v;
  }
  const auto n = static_cast<double>(x.size());
  const double mean = s1 / n;
  const double var = n > 1 ? std::max(0.0, (s2 - n * mean * mean) / (n - 1.0)) : 0.0;
  return {mean, std::sqrt(var / n)};
}

// Uniform cell grid over the simplices of a mesh, each simplex registered in
// every cell its bounding box (grown by `reach`) touches. Answers "is p within
// reach of the mesh" while looking only at the cell containing p.
class SimplexGrid {
 public:
  SimplexGrid(const SurfaceMesh& mesh, double reach) : mesh_(mesh), reach_(reach), n_(mesh.n) {
    lo_ = Vector::Constant(n_, std::numeric_limits<double>::infinity());
    Vector hi = Vector::Constant(n_, -std::numeric_limits<double>::infinity());
    for (const auto& v : mesh.vertices) {
      lo_ = lo_.cwiseMin(v);
      hi = hi.cwiseMax(v);
    }
    lo_.array() -= reach;
    hi.array() += reach;
    const double span = (hi - lo_).maxCoeff();
    // About as many cells as simplices, at most 64 per axis.
    const double per_axis = std::clamp(std::pow(static_cast<double>(mesh.simplex_count()), 1.0 / n_), 1.0, 64.0);
    cell_ = std::max(span / per_axis, 1e-12);
    dims_.resize(static_cast<std::size_t>(n_));
    std::size_t total = 1;
    for (int k = 0; k < n_; ++k) {
      dims_[static_cast<std::size_t>(k)] = static_cast<std::size_t>(std::floor((hi(k) - lo_(k)) / cell_)) + 1;
      total *= dims_[static_cast<std::size_t>(k)];
    }
    cells_.resize(total);
    for (std::size_t s = 0; s < mesh.simplex_count(); ++s) {
      Vector a = Vector::Constant(n_, std::numeric_limits<double>::infinity());
      Vector b = -a;
      for (int id : mesh.simplices[s]) {
        a = a.cwiseMin(mesh.vertices[static_cast<std::size_t>(id)]);
        b = b.cwiseMax(mesh.vertices[static_cast<std::size_t>(id)]);
      }
      a.array() -= reach;
      b.array() += reach;
      std::vector<std::size_t> first(static_cast<std::size_t>(n_)), last(first);
      for (int k = 0; k < n_; ++k) {
        first[static_cast<std::size_t>(k)] = coord(a(k), k);
        last[static_cast<std::size_t>(k)] = coord(b(k), k);
      }
      std::vector<std::size_t> idx = first;
      for (;;) {
        cells_[flat(idx)].push_back(s);
        int k = 0;
        for (; k < n_; ++k) {
          const auto uk = static_cast<std::size_t>(k);
          if (++idx[uk] <= last[uk]) break;
          idx[uk] = first[uk];
        }
        if (k == n_) break;
      }
    }
  }

  bool near(const Vector& p) const {
    std::vector<std::size_t> idx(static_cast<std::size_t>(n_));
    for (int k = 0; k < n_; ++k) {
      if (p(k) < lo_(k) || p(k) > lo_(k) + cell_ * static_cast<double>(dims_[static_cast<std::size_t>(k)])) {
        return false;
      }
      idx[static_cast<std::size_t>(k)] = coord(p(k), k);
    }
    for (std::size_t s : cells_[flat(idx)]) {
      if (simplex_distance(mesh_, s, p) <= reach_) return true;
    }
    return false;
  }

 private:
  std::size_t coord(double x, int k) const {
    const double c = std::floor((x - lo_(k)) / cell_);
    return static_cast<std::size_t>(std::clamp(c, 0.0, static_cast<double>(dims_[static_cast<std::size_t>(k)] - 1)));
  }
  std::size_t flat(const std::vector<std::size_t>& idx) const {
    std::size_t f = 0;
    for (int k = n_ - 1; k >= 0; --k) f = f * dims_[static_cast<std::size_t>(k)] + idx[static_cast<std::size_t>(k)];
    return f;
  }

  const SurfaceMesh& mesh_;
  double reach_;
  int n_;
  Vector lo_;
  double cell_ = 1.0;
  std::vector<std::size_t> dims_;
  std::vector<std::vector<std::size_t>> cells_;
};

}  // namespace

VolumeChange clipped_volume_change(const SurfaceMesh& before, const SurfaceMesh& after,
                                   const Vector& center, double radius, double delta,
                                   const VolumeChangeOptions& options) {
  if (!(delta < 1.0)) {
    std::ostringstream msg;
    msg << "delta = " << delta << " must be below 1";
    fail(ErrorCode::DeltaTooLarge, msg.str());
  }
  if (options.samples == 0) fail(ErrorCode::InvalidArgument, "need at least one sample");
  const int n = before.n;
  // Moving the vertices linearly from `before` to `after` moves every mesh point
  // by at most the largest vertex displacement, so a sample further than that
  // from `before` keeps its winding number. Only nearby samples are tested.
  double reach = 0.0;
  const bool same_topology = before.vertices.size() == after.vertices.size() &&
                             before.simplices == after.simplices && before.regions == after.regions;
  if (same_topology) {
    for (std::size_t v = 0; v < before.vertices.size(); ++v) {
      reach = std::max(reach, (after.vertices[v] - before.vertices[v]).norm());
    }
  }
  std::optional<SimplexGrid> grid;
  if (same_topology) grid.emplace(before, reach * (1.0 + 1e-9) + 1e-12);
  std::vector<signed char> diff(options.samples, 0);
  parallel_for(options.samples, [&](std::size_t i) {
    const Vector p = sample_ball(center, radius, options.seed, i);
    if (grid && !grid->near(p)) return;
    const bool in_after = winding_number(after, options.region, p) > 0.5;
    const bool in_before = winding_number(before, options.region, p) > 0.5;
    diff[i] = static_cast<signed char>(static_cast<int>(in_after) - static_cast<int>(in_before));
  });
  const auto sum = summarize(diff);
  const double vol = unit_ball_volume(n) * std::pow(radius, n);
  VolumeChange out;
  out.delta = delta;
  out.c8 = volume_change_constant(n, radius);
  out.bound = out.c8 * delta;
  out.measured = std::abs(sum.mean) * vol;
  out.standard_error = sum.standard_error * vol;
  out.pass = out.measured <= out.bound + 3.0 * out.standard_error;
  return out;
}

std::pair<double, double> clipped_volume(const SurfaceMesh& mesh, const Vector& center,
                                         double radius, const VolumeChangeOptions& options) {
  std::vector<signed char> inside(options.samples, 0);
  parallel_for(options.samples, [&](std::size_t i) {
    const Vector p = sample_ball(center, radius, options.seed, i);
    inside[i] = winding_number(mesh, options.region, p) > 0.5 ? 1 : 0;
  });
  const auto sum = summarize(inside);
  const double vol = unit_ball_volume(mesh.n) * std::pow(radius, mesh.n);
  return {sum.mean * vol, sum.standard_error * vol};
}

double step_delta(const StepStats& stats) {
  return std::max(stats.max_displacement, stats.max_jacobian_deviation);
}

VolumeChangeCertificate volume_change_certificate(const FlowTrace& trace, const SurfaceMesh& mesh,
                                                  const Vector& center, double radius,
                                                  const VolumeChangeOptions& options) {
  VolumeChangeCertificate cert;
  auto& v = cert.verdict;
  v.name = "volume_change";
  v.anchor = "clipped volume change per step is at most c8 delta";
  v.pass = true;
  v.measured = 0.0;
  double worst_ratio = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < trace.snapshots.size(); ++i) {
    const auto& a = trace.snapshots[i];
    const auto& b = trace.snapshots[i + 1];
    if (a.tracers.size() != mesh.vertices.size() || b.tracers.size() != mesh.vertices.size()) {
      fail(ErrorCode::MissingFrames, "trace does not carry the mesh vertices as tracers");
    }
    const auto before = with_vertices(mesh, a.tracers);
    const auto after = with_vertices(mesh, b.tracers);
    const auto step = clipped_volume_change(before, after, center, radius, step_delta(trace.steps[i]),
                                            options);
    cert.steps.push_back(step);
    v.pass = v.pass && step.pass;
    // Report the step closest to (or furthest past) its bound.
    const double allowed = step.bound + 3.0 * step.standard_error;
    const double ratio = allowed > 0.0 ? step.measured / allowed
                                       : (step.measured > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    if (ratio > worst_ratio) {
      worst_ratio = ratio;
      v.measured = step.measured;
      v.bound = step.bound + 3.0 * step.standard_error;
    }
  }
  if (cert.steps.empty()) v.bound = 0.0;
  v.details = {{"c8", volume_change_constant(mesh.n, radius)},
               {"steps", static_cast<double>(cert.steps.size())},
               {"samples", static_cast<double>(options.samples)}};
  return cert;
}

double isoperimetric_constant(int n) {
  return n * std::pow(unit_ball_volume(n), 1.0 / n);
}

NontrivialityReport nontriviality_certificate(const FlowTrace& trace, const SurfaceMesh& initial,
                                              const Vector& center, double radius,
                                              const NontrivialityOptions& options) {
  const int n = initial.n;
  const int region = region_at(initial, center);
  if (region == 0 || distance_to_mesh(initial, center) < radius) {
    fail(ErrorCode::BallNotInterior, "ball is not contained in a bounded region");
  }
  NontrivialityReport r;
  r.region = region;
  const int d = n - 1;
  r.t0 = radius * radius / (8.0 * d);
  r.c_n = options.isoperimetric ? *options.isoperimetric : isoperimetric_constant(n);
  const double quarter = 0.25 * unit_ball_volume(n) * std::pow(0.5 * radius, n);
  r.omega_tilde = r.c_n * std::pow(quarter, (n - 1.0) / n);
  r.min_mass = std::numeric_limits<double>::infinity();
  for (const auto& s : trace.snapshots) {
    if (s.time > r.t0 + 1e-12) break;
    r.min_mass = std::min(r.min_mass, total_mass(s.varifold));
  }
  const bool covers = !trace.snapshots.empty() && trace.snapshots.back().time >= r.t0 - 1e-12;
  auto& v = r.verdict;
  v.name = "nontriviality";
  v.anchor = "boundary mass stays above the isoperimetric floor up to t0 = R^2/(8d)";
  v.bound = r.omega_tilde;
  v.measured = r.min_mass;
  v.pass = covers && r.min_mass >= r.omega_tilde;
  v.details = {{"t0", r.t0}, {"c_n", r.c_n}, {"region", region}};
  if (!covers) v.note = "trace ends before t0";
  if (!options.isoperimetric) v.note += v.note.empty() ? "sharp isoperimetric constant" : "";
  return r;
}

}  // namespace varflow
