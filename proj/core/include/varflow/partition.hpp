#pragma once

// Open partitions given by their boundary mesh, Monte Carlo clipped volumes
// and the certificates built on them.

#include <cstdint>
#include <optional>
#include <vector>

#include "varflow/flow.hpp"
#include "varflow/mesh.hpp"
#include "varflow/random.hpp"
#include "varflow/verdict.hpp"

namespace varflow {

/// Regions 1..N-1 are bounded, region 0 is the unbounded complement.
struct OpenPartition {
  SurfaceMesh boundary;

  int region_count() const { return boundary.region_count(); }
  bool bounded(int region) const { return region > 0; }

  /// Throws OpenMesh when some bounded region has an open boundary chain.
  void validate() const;
};

/// Volume of the unit ball in R^n.
double unit_ball_volume(int n);

/// omega_n R^n + max{2^n omega_n, 2 n omega_n (R + 1)^{n-1}}
double volume_change_constant(int n, double radius);

/// Uniform point in B(center, radius), rejection from the cube on stream `index`.
Vector sample_ball(const Vector& center, double radius, std::uint64_t seed, std::uint64_t index);

struct VolumeChangeOptions {
  std::size_t samples = 100000;
  std::uint64_t seed = 1;
  int region = 1;
};

struct VolumeChange {
  double measured = 0.0;
  double standard_error = 0.0;
  double bound = 0.0;
  double c8 = 0.0;
  double delta = 0.0;
  bool pass = false;
};

/// |L^n(B n E_after) - L^n(B n E_before)| with common random numbers, against
/// c8 * delta. Throws DeltaTooLarge when delta >= 1.
VolumeChange clipped_volume_change(const SurfaceMesh& before, const SurfaceMesh& after,
                                   const Vector& center, double radius, double delta,
                                   const VolumeChangeOptions& options = {});

/// Monte Carlo estimate of L^n(B n E_region) with its standard error.
std::pair<double, double> clipped_volume(const SurfaceMesh& mesh, const Vector& center,
                                         double radius, const VolumeChangeOptions& options = {});

/// Step delta = max{sup |f - Id|, sup |det Df - 1|} from recorded diagnostics.
double step_delta(const StepStats& stats);

/// Applies clipped_volume_change to every step of a trace whose tracers are
/// the vertices of `mesh`.
struct VolumeChangeCertificate {
  Verdict verdict;
  std::vector<VolumeChange> steps;
};
VolumeChangeCertificate volume_change_certificate(const FlowTrace& trace, const SurfaceMesh& mesh,
                                                  const Vector& center, double radius,
                                                  const VolumeChangeOptions& options = {});

/// Sharp isoperimetric constant n omega_n^{1/n}.
double isoperimetric_constant(int n);

struct NontrivialityOptions {
  std::optional<double> isoperimetric;  // c_n, default sharp
};

struct NontrivialityReport {
  Verdict verdict;
  double t0 = 0.0;
  double omega_tilde = 0.0;
  double c_n = 0.0;
  double min_mass = 0.0;
  int region = 0;
};

/// Checks ||V(t)||(R^n) >= c_n (omega_n (R/2)^n / 4)^{(n-1)/n} for every
/// snapshot with t <= R^2 / (8 d). Throws BallNotInterior when B(a, R) is not
/// inside a bounded region of `initial`.
NontrivialityReport nontriviality_certificate(const FlowTrace& trace, const SurfaceMesh& initial,
                                              const Vector& center, double radius,
                                              const NontrivialityOptions& options = {});

}  // namespace varflow
