#include "varflow/presets.hpp"

#include <cmath>
#include <numbers>

#include "varflow/error.hpp"
#include "varflow/io.hpp"

namespace varflow {

std::vector<std::string> preset_names() {
  return {"circle",           "sphere",          "two-concentric-circles", "square-partition",
          "two-region-partition", "enlaced-circles"};
}

namespace {

Vector point(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

}  // namespace

RunConfig preset_config(const std::string& name) {
  RunConfig c;
  c.preset = name;
  // A step of 1e-3 passes the gate for eps >= 0.05 and M <= 7 with this c3.
  c.flow.gate_constant = 5e-11;
  c.flow.refinement = 4;
  c.c5 = 1e-9;
  c.dt = 1e-3;
  if (name == "circle") {
    c.flow.eps = 0.1;
    c.flow.mass_bound = 7.0;
    c.end_time = 0.3;
    c.atoms = 200;
    c.barrier_center = point({0.0, 0.0});
    c.barrier_radius = 0.3;
    c.ball_center = point({0.0, 0.0});
    c.ball_radius = 0.8;
  } else if (name == "sphere") {
    c.flow.eps = 0.2;
    c.flow.mass_bound = 14.0;
    c.flow.refinement = 2;
    c.end_time = 0.1;
    c.subdivisions = 2;
    c.barrier_center = point({0.0, 0.0, 0.0});
    c.barrier_radius = 0.3;
    c.ball_center = point({0.0, 0.0, 0.0});
    c.ball_radius = 0.8;
  } else if (name == "two-concentric-circles") {
    c.flow.eps = 0.05;
    c.flow.mass_bound = 7.0;
    c.end_time = 0.12;
    c.atoms = 200;
    c.barrier_center = point({0.0, 0.0});
    c.barrier_radius = 0.2;
    c.ball_center = point({0.0, 0.0});
    c.ball_radius = 0.4;
  } else if (name == "square-partition") {
    c.flow.eps = 0.05;
    c.flow.mass_bound = 9.0;
    c.flow.gate_constant = 1e-11;
    c.end_time = 0.11;
    c.atoms = 200;
    c.radius = 1.0;  // half side
    c.barrier_center = point({0.0, 0.0});
    c.barrier_radius = 0.3;
    c.ball_center = point({0.0, 0.0});
    c.ball_radius = 0.9;
  } else if (name == "two-region-partition") {
    c.flow.eps = 0.05;
    c.flow.mass_bound = 11.0;
    c.flow.gate_constant = 1e-11;
    c.end_time = 0.1;
    c.atoms = 200;
    c.radius = 1.0;
    c.barrier_center = point({-0.5, 0.0});
    c.barrier_radius = 0.2;
    c.ball_center = point({-0.5, 0.0});
    c.ball_radius = 0.45;
  } else if (name == "enlaced-circles") {
    c.flow.eps = 0.1;
    c.flow.mass_bound = 7.0;
    c.flow.refinement = 2;
    c.flow.gate_constant = 5e-9;
    c.dt = 2e-3;
    c.end_time = 0.45;
    c.atoms = 100;
    c.barrier_center = point({0.0, 0.0, 0.0});
    c.barrier_radius = 0.2;
    c.ball_center = point({0.0, 0.0, 0.0});
    c.ball_radius = 0.5;
  } else {
    fail(ErrorCode::ConfigError, "unknown preset '" + name + "'");
  }
  c.sync_subdivision();
  return c;
}

DiscreteVarifold circle_varifold(int atoms, double radius, const Vector& center) {
  return mesh_to_varifold(regular_polygon(atoms, radius, center), 1);
}

DiscreteVarifold space_circle(int atoms, double radius, const Vector& center, const Vector& u,
                              const Vector& v) {
  DiscreteVarifold out(3, 1);
  const double chord = 2.0 * radius * std::sin(std::numbers::pi / atoms);
  for (int k = 0; k < atoms; ++k) {
    const double th = 2.0 * std::numbers::pi * (k + 0.5) / atoms;
    // Midpoint of the chord and its direction.
    const double mid = radius * std::cos(std::numbers::pi / atoms);
    const Vector pos = center + mid * (std::cos(th) * u + std::sin(th) * v);
    Matrix dir(3, 1);
    dir.col(0) = -std::sin(th) * u + std::cos(th) * v;
    out.add(pos, GrassmannElement::from_basis(dir), chord);
  }
  return out;
}

Scenario build_scenario(const RunConfig& c) {
  Scenario s;
  auto add_mesh = [&](std::string name, SurfaceMesh mesh) {
    auto v = mesh_to_varifold(mesh, c.samples_per_simplex);
    s.components.push_back({std::move(name), std::move(v), std::move(mesh)});
  };
  if (!c.mesh_file.empty()) {
    add_mesh("mesh", read_mesh(c.mesh_file));
    return s;
  }
  const Vector origin2 = Vector::Zero(2);
  if (c.preset == "circle") {
    add_mesh("circle", regular_polygon(c.atoms, c.radius, origin2));
  } else if (c.preset == "sphere") {
    add_mesh("sphere", icosphere(c.subdivisions, c.radius, Vector::Zero(3)));
  } else if (c.preset == "two-concentric-circles") {
    add_mesh("outer", regular_polygon(c.atoms, c.radius, origin2));
    add_mesh("inner", regular_polygon(std::max(3, c.atoms / 2), 0.5 * c.radius, origin2));
  } else if (c.preset == "square-partition") {
    add_mesh("square", axis_square(2.0 * c.radius, origin2, std::max(1, c.atoms / 4)));
  } else if (c.preset == "two-region-partition") {
    const int per_side = std::max(2, (c.atoms / 4) / 2 * 2);
    add_mesh("partition", split_square(2.0 * c.radius, origin2, per_side));
  } else if (c.preset == "enlaced-circles") {
    const Vector e1 = Vector::Unit(3, 0), e2 = Vector::Unit(3, 1), e3 = Vector::Unit(3, 2);
    s.components.push_back({"ring_a", space_circle(c.atoms, c.radius, Vector::Zero(3), e1, e2), std::nullopt});
    s.components.push_back({"ring_b", space_circle(c.atoms, c.radius, c.radius * e1, e1, e3), std::nullopt});
  } else {
    fail(ErrorCode::ConfigError, "unknown preset '" + c.preset + "'");
  }
  return s;
}

}  // namespace varflow
