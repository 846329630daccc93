#pragma once

// Run configuration: an INI file with sections [run], [flow], [scenario] and
// [certificates]. Preset defaults are applied first, then every key in the
// file overrides them; unknown keys are rejected with their line number.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "varflow/flow.hpp"

namespace varflow {

struct RunConfig {
  // [run]
  std::string preset = "circle";
  std::uint64_t seed = 1;
  std::string output = "varflow-out";

  // [flow]
  FlowConfig flow;
  double dt = 1e-3;
  double end_time = 0.3;

  // [scenario]
  int atoms = 200;
  double radius = 1.0;
  int samples_per_simplex = 1;
  int subdivisions = 2;
  std::string mesh_file;

  // [certificates]
  double c5 = 1.0;
  double eps0 = 1.0;
  std::optional<double> c6;
  std::optional<double> isoperimetric;
  std::size_t mc_samples = 100000;
  std::size_t lemma_samples = 100000;
  double lsc_tol = 1.0;
  Vector barrier_center;
  double barrier_radius = 0.3;
  Vector ball_center;
  double ball_radius = 0.8;

  int ambient_dim() const;
  /// Rebuilds flow.subdivision from dt and end_time.
  void sync_subdivision();
};

/// Throws ConfigError ("<file>:<line>: <key>: <reason>").
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& text, const std::string& origin = "<config>");

/// INI text that parse_config maps back to the same configuration.
std::string to_ini(const RunConfig& config);

std::string to_string(FlowMode mode);
FlowMode parse_mode(const std::string& text);

}  // namespace varflow
