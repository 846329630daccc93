#pragma once

#include <optional>
#include <string>
#include <vector>

#include "varflow/config.hpp"
#include "varflow/mesh.hpp"
#include "varflow/varifold.hpp"

namespace varflow {

/// One independently evolved piece of a scenario. When `mesh` is set, its
/// vertices ride along as tracers.
struct Component {
  std::string name;
  DiscreteVarifold varifold;
  std::optional<SurfaceMesh> mesh;
};

struct Scenario {
  std::vector<Component> components;
};

std::vector<std::string> preset_names();

/// Defaults of a named preset. Throws ConfigError for unknown names.
RunConfig preset_config(const std::string& name);

/// Builds the initial data; a configured mesh file replaces the preset geometry.
Scenario build_scenario(const RunConfig& config);

/// N atoms at the midpoints of a regular N-gon inscribed in the circle.
DiscreteVarifold circle_varifold(int atoms, double radius, const Vector& center);

/// Circle of radius r in the plane spanned by orthonormal u, v in R^3.
DiscreteVarifold space_circle(int atoms, double radius, const Vector& center, const Vector& u,
                              const Vector& v);

}  // namespace varflow
