#pragma once

// End-to-end runs: build a scenario from a configuration, evolve each
// component, export frames plus a trace.json manifest, reload them and
// evaluate certificates.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "varflow/config.hpp"
#include "varflow/flow.hpp"
#include "varflow/mesh.hpp"
#include "varflow/metrics.hpp"
#include "varflow/verdict.hpp"

namespace varflow {

std::string version();

struct ComponentTrace {
  std::string name;
  FlowTrace trace;
  std::optional<SurfaceMesh> mesh;  // topology; vertices per snapshot are the tracers
};

struct Simulation {
  RunConfig config;
  std::vector<ComponentTrace> components;
  double wall_seconds = 0.0;
};

Simulation simulate(const RunConfig& config);

/// Writes <dir>/config.ini, <dir>/trace.json and per component
/// <dir>/<name>/frame_NNNNN.csv (+ .json sidecar), mesh.json and
/// mesh_NNNNN.csv. Returns the manifest path.
std::filesystem::path write_simulation(const Simulation& sim, const std::filesystem::path& dir,
                                       const std::vector<Verdict>& verdicts = {});

/// Throws MissingFrames when a listed file is absent.
Simulation load_simulation(const std::filesystem::path& manifest);

std::vector<std::string> certificate_names();

/// Certificates applicable to the simulation (two components for avoidance,
/// a mesh for volume-change and nontriviality).
std::vector<std::string> default_certificates(const Simulation& sim);

/// Throws InvalidArgument for unknown names.
Verdict run_certificate(const Simulation& sim, const std::string& name);
std::vector<Verdict> run_checks(const Simulation& sim, const std::vector<std::string>& names);

std::string verdicts_json(const std::vector<Verdict>& verdicts);
std::string distance_json(const BLResult& result);

struct VolumeQuery {
  std::optional<Vector> center;
  double radius = 1.0;
  std::size_t samples = 100000;
  std::uint64_t seed = 1;
};
std::string volume_json(const SurfaceMesh& mesh, const VolumeQuery& query);

}  // namespace varflow
