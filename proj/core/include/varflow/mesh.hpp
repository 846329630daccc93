#pragma once

// Closed polygonal curves (n = 2) and triangle surfaces (n = 3) bounding the
// regions of an open partition. Each simplex carries the labels of the region
// behind it (inside) and the region its normal points into (outside); region 0
// is the unbounded one.

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "varflow/varifold.hpp"

namespace varflow {

struct SurfaceMesh {
  int n = 2;
  std::vector<Vector> vertices;
  std::vector<std::vector<int>> simplices;      // n vertex indices each, oriented
  std::vector<std::array<int, 2>> regions;      // {inside, outside} per simplex

  std::size_t simplex_count() const { return simplices.size(); }

  /// Adds an oriented simplex; labels default to inside 1, outside 0.
  void add_simplex(std::vector<int> vertex_ids, int inside = 1, int outside = 0);

  /// Largest region label plus one.
  int region_count() const;

  /// Unit normal (outward from `inside`) and measure (length or area).
  Vector normal(std::size_t s) const;
  double measure(std::size_t s) const;
  double total_measure() const;

  /// Throws InvalidArgument on bad indices or dimensions.
  void validate() const;
};

/// Boundary of the chain of simplices bounding `region` is zero.
bool is_closed(const SurfaceMesh& mesh, int region);
/// Every bounded region label has a closed boundary chain.
bool is_closed(const SurfaceMesh& mesh);

/// Winding number of the boundary of `region` around p (1 inside, 0 outside).
double winding_number(const SurfaceMesh& mesh, int region, const Vector& p);
/// Region label containing p (0 when in no bounded region).
int region_at(const SurfaceMesh& mesh, const Vector& p);

/// Per simplex, `samples` atoms of equal mass measure/samples with the simplex
/// tangent plane. Segments accept any count; triangles accept 1, 3 or a
/// perfect square k^2 (centroids of the k^2 congruent subtriangles).
/// Throws DegenerateSimplex on zero-measure simplices.
DiscreteVarifold mesh_to_varifold(const SurfaceMesh& mesh, int samples_per_simplex);

/// (1/n) sum of cone determinants over the oriented simplices.
/// Throws OpenMesh when the simplices do not form a closed cycle.
double enclosed_volume(const SurfaceMesh& mesh);
/// Lebesgue measure of a bounded region from its boundary chain.
double region_volume(const SurfaceMesh& mesh, int region);

/// Maps vertices, keeps connectivity. Throws SelfIntersectionSuspected when two
/// images are closer than 1e-10.
SurfaceMesh advect_mesh(const SurfaceMesh& mesh, const std::function<Vector(const Vector&)>& f);
SurfaceMesh with_vertices(const SurfaceMesh& mesh, std::vector<Vector> vertices);

/// Distance from p to simplex s, and to the union of the simplices.
double simplex_distance(const SurfaceMesh& mesh, std::size_t s, const Vector& p);
double distance_to_mesh(const SurfaceMesh& mesh, const Vector& p);

SurfaceMesh reversed(const SurfaceMesh& mesh);

// Generators.
SurfaceMesh regular_polygon(int sides, double radius, const Vector& center, double phase = 0.0);
SurfaceMesh axis_square(double side, const Vector& center, int per_side = 1);
/// Square of side `side` split by a vertical segment into regions 1 (left) and 2.
SurfaceMesh split_square(double side, const Vector& center, int per_side);
SurfaceMesh icosphere(int subdivisions, double radius, const Vector& center);

}  // namespace varflow
