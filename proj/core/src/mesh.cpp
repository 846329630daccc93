#include "varflow/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include "varflow/error.hpp"

namespace varflow {

void SurfaceMesh::add_simplex(std::vector<int> vertex_ids, int inside, int outside) {
  simplices.push_back(std::move(vertex_ids));
  regions.push_back({inside, outside});
}

int SurfaceMesh::region_count() const {
  int count = 1;
  for (const auto& r : regions) count = std::max({count, r[0] + 1, r[1] + 1});
  return count;
}

void SurfaceMesh::validate() const {
  if (n != 2 && n != 3) fail(ErrorCode::InvalidArgument, "meshes live in R^2 or R^3");
  if (regions.size() != simplices.size()) fail(ErrorCode::InvalidArgument, "one label pair per simplex");
  for (const auto& v : vertices) {
    if (v.size() != n || !v.allFinite()) fail(ErrorCode::InvalidArgument, "bad mesh vertex");
  }
  const auto count = static_cast<int>(vertices.size());
  for (std::size_t s = 0; s < simplices.size(); ++s) {
    if (static_cast<int>(simplices[s].size()) != n) {
      fail(ErrorCode::InvalidArgument, "simplex has the wrong number of vertices");
    }
    for (int id : simplices[s]) {
      if (id < 0 || id >= count) fail(ErrorCode::InvalidArgument, "simplex vertex out of range");
    }
    if (regions[s][0] < 0 || regions[s][1] < 0 || regions[s][0] == regions[s][1]) {
      fail(ErrorCode::InvalidArgument, "simplex must separate two distinct regions");
    }
  }
}

namespace {

Vector cross3(const Vector& a, const Vector& b) {
  Vector c(3);
  c << a(1) * b(2) - a(2) * b(1), a(2) * b(0) - a(0) * b(2), a(0) * b(1) - a(1) * b(0);
  return c;
}

// Unnormalized normal: its length is the simplex measure (segments) or twice
// the area (triangles).
Vector raw_normal(const SurfaceMesh& mesh, std::size_t s) {
  const auto& ids = mesh.simplices[s];
  const Vector& a = mesh.vertices[static_cast<std::size_t>(ids[0])];
  const Vector& b = mesh.vertices[static_cast<std::size_t>(ids[1])];
  if (mesh.n == 2) {
    Vector nrm(2);
    nrm << b(1) - a(1), a(0) - b(0);
    return nrm;
  }
  const Vector& c = mesh.vertices[static_cast<std::size_t>(ids[2])];
  return cross3(b - a, c - a);
}

// Orientation of simplex s within the boundary chain of `region`.
int chain_sign(const SurfaceMesh& mesh, std::size_t s, int region) {
  if (mesh.regions[s][0] == region) return 1;
  if (mesh.regions[s][1] == region) return -1;
  return 0;
}

bool chain_closed(const SurfaceMesh& mesh, const std::function<int(std::size_t)>& sign) {
  if (mesh.n == 2) {
    std::vector<int> degree(mesh.vertices.size(), 0);
    for (std::size_t s = 0; s < mesh.simplices.size(); ++s) {
      const int sg = sign(s);
      if (!sg) continue;
      degree[static_cast<std::size_t>(mesh.simplices[s][1])] += sg;
      degree[static_cast<std::size_t>(mesh.simplices[s][0])] -= sg;
    }
    return std::all_of(degree.begin(), degree.end(), [](int v) { return v == 0; });
  }
  std::map<std::pair<int, int>, int> edges;
  for (std::size_t s = 0; s < mesh.simplices.size(); ++s) {
    const int sg = sign(s);
    if (!sg) continue;
    const auto& t = mesh.simplices[s];
    for (int k = 0; k < 3; ++k) {
      const int u = t[static_cast<std::size_t>(k)];
      const int v = t[static_cast<std::size_t>((k + 1) % 3)];
      if (u < v) {
        edges[{u, v}] += sg;
      } else {
        edges[{v, u}] -= sg;
      }
    }
  }
  return std::all_of(edges.begin(), edges.end(), [](const auto& e) { return e.second == 0; });
}

double cone(const SurfaceMesh& mesh, std::size_t s, const Vector& origin) {
  const auto& ids = mesh.simplices[s];
  const Vector a = mesh.vertices[static_cast<std::size_t>(ids[0])] - origin;
  const Vector b = mesh.vertices[static_cast<std::size_t>(ids[1])] - origin;
  if (mesh.n == 2) return 0.5 * (a(0) * b(1) - a(1) * b(0));
  const Vector c = mesh.vertices[static_cast<std::size_t>(ids[2])] - origin;
  return a.dot(cross3(b, c)) / 6.0;
}

Vector vertex_centroid(const SurfaceMesh& mesh) {
  Vector c = Vector::Zero(mesh.n);
  for (const auto& v : mesh.vertices) c += v;
  if (!mesh.vertices.empty()) c /= static_cast<double>(mesh.vertices.size());
  return c;
}

double segment_distance(const Vector& p, const Vector& a, const Vector& b) {
  const Vector ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

double triangle_distance(const Vector& p, const Vector& a, const Vector& b, const Vector& c) {
  // Closest point by Voronoi-region classification.
  const Vector ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return ap.norm();
  const Vector bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return bp.norm();
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return (p - (a + d1 / (d1 - d3) * ab)).norm();
  const Vector cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return cp.norm();
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return (p - (a + d2 / (d2 - d6) * ac)).norm();
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return (p - (b + w * (c - b))).norm();
  }
  const double denom = 1.0 / (va + vb + vc);
  return (p - (a + ab * (vb * denom) + ac * (vc * denom))).norm();
}

}  // namespace

Vector SurfaceMesh::normal(std::size_t s) const {
  Vector nrm = raw_normal(*this, s);
  const double len = nrm.norm();
  if (!(len > 0.0)) fail(ErrorCode::DegenerateSimplex, "zero-measure simplex");
  return nrm / len;
}

double SurfaceMesh::measure(std::size_t s) const {
  const double len = raw_normal(*this, s).norm();
  return n == 2 ? len : 0.5 * len;
}

double SurfaceMesh::total_measure() const {
  double sum = 0.0;
  for (std::size_t s = 0; s < simplices.size(); ++s) sum += measure(s);
  return sum;
}

bool is_closed(const SurfaceMesh& mesh, int region) {
  return chain_closed(mesh, [&](std::size_t s) { return chain_sign(mesh, s, region); });
}

bool is_closed(const SurfaceMesh& mesh) {
  for (int r = 1; r < mesh.region_count(); ++r) {
    if (!is_closed(mesh, r)) return false;
  }
  return true;
}

double winding_number(const SurfaceMesh& mesh, int region, const Vector& p) {
  if (mesh.n == 2) {
    // Crossing form of the winding number; exact integer, no trigonometry.
    int wn = 0;
    const double px = p(0), py = p(1);
    for (std::size_t s = 0; s < mesh.simplices.size(); ++s) {
      const int sg = chain_sign(mesh, s, region);
      if (!sg) continue;
      const Vector& a = mesh.vertices[static_cast<std::size_t>(mesh.simplices[s][0])];
      const Vector& b = mesh.vertices[static_cast<std::size_t>(mesh.simplices[s][1])];
      const double side = (b(0) - a(0)) * (py - a(1)) - (px - a(0)) * (b(1) - a(1));
      if (a(1) <= py) {
        if (b(1) > py && side > 0.0) wn += sg;
      } else if (b(1) <= py && side < 0.0) {
        wn -= sg;
      }
    }
    return wn;
  }
  double total = 0.0;
  for (std::size_t s = 0; s < mesh.simplices.size(); ++s) {
    const int sg = chain_sign(mesh, s, region);
    if (!sg) continue;
    const auto& t = mesh.simplices[s];
    const Vector a = mesh.vertices[static_cast<std::size_t>(t[0])] - p;
    const Vector b = mesh.vertices[static_cast<std::size_t>(t[1])] - p;
    const Vector c = mesh.vertices[static_cast<std::size_t>(t[2])] - p;
    const double la = a.norm(), lb = b.norm(), lc = c.norm();
    const double num = a.dot(cross3(b, c));
    const double den = la * lb * lc + a.dot(b) * lc + a.dot(c) * lb + b.dot(c) * la;
    total += sg * 2.0 * std::atan2(num, den);
  }
  return total / (4.0 * std::numbers::pi);
}

int region_at(const SurfaceMesh& mesh, const Vector& p) {
  for (int r = 1; r < mesh.region_count(); ++r) {
    if (winding_number(mesh, r, p) > 0.5) return r;
  }
  return 0;
}

DiscreteVarifold mesh_to_varifold(const SurfaceMesh& mesh, int samples_per_simplex) {
  mesh.validate();
  if (samples_per_simplex < 1) fail(ErrorCode::InvalidArgument, "need at least one sample per simplex");
  const int k = samples_per_simplex;
  std::vector<std::array<double, 2>> bary;  // (u, v) along edges ab, ac
  if (mesh.n == 3) {
    const int m = static_cast<int>(std::lround(std::sqrt(static_cast<double>(k))));
    if (k == 3) {
      bary = {{{1.0 / 6.0, 1.0 / 6.0}}, {{2.0 / 3.0, 1.0 / 6.0}}, {{1.0 / 6.0, 2.0 / 3.0}}};
    } else if (m * m == k) {
      for (int i = 0; i < m; ++i) {
        for (int j = 0; i + j < m; ++j) {
          bary.push_back({(i + 1.0 / 3.0) / m, (j + 1.0 / 3.0) / m});
          if (i + j < m - 1) bary.push_back({(i + 2.0 / 3.0) / m, (j + 2.0 / 3.0) / m});
        }
      }
    } else {
      fail(ErrorCode::InvalidArgument, "triangle samples must be 1, 3 or a perfect square");
    }
  }

  DiscreteVarifold v(mesh.n, mesh.n - 1);
  v.reserve(mesh.simplices.size() * static_cast<std::size_t>(k));
  for (std::size_t s = 0; s < mesh.simplices.size(); ++s) {
    const double meas = mesh.measure(s);
    if (!(meas > 1e-14)) fail(ErrorCode::DegenerateSimplex, "zero-measure simplex");
    const auto& ids = mesh.simplices[s];
    const Vector& a = mesh.vertices[static_cast<std::size_t>(ids[0])];
    const Vector& b = mesh.vertices[static_cast<std::size_t>(ids[1])];
    const double mass = meas / k;
    if (mesh.n == 2) {
      Matrix basis(2, 1);
      basis.col(0) = b - a;
      const auto plane = GrassmannElement::from_basis(basis / (b - a).norm());
      for (int j = 0; j < k; ++j) v.add(a + ((j + 0.5) / k) * (b - a), plane, mass);
    } else {
      const Vector& c = mesh.vertices[static_cast<std::size_t>(ids[2])];
      Matrix basis(3, 2);
      basis.col(0) = (b - a).normalized();
      basis.col(1) = c - a;
      basis.col(1) -= basis.col(0).dot(basis.col(1)) * basis.col(0);
      basis.col(1).normalize();
      const auto plane = GrassmannElement::from_basis(basis);
      for (const auto& uv : bary) v.add(a + uv[0] * (b - a) + uv[1] * (c - a), plane, mass);
    }
  }
  return v;
}

double enclosed_volume(const SurfaceMesh& mesh) {
  mesh.validate();
  if (!chain_closed(mesh, [](std::size_t) { return 1; })) {
    fail(ErrorCode::OpenMesh, "simplices do not form a closed oriented cycle");
  }
  const Vector origin = vertex_centroid(mesh);
  double vol = 0.0;
  for (std::size_t s = 0; s < mesh.simplices.size(); ++s) vol += cone(mesh, s, origin);
  return vol;
}

double region_volume(const SurfaceMesh& mesh, int region) {
  mesh.validate();
  if (region < 1) fail(ErrorCode::InvalidArgument, "region 0 is unbounded");
  if (!is_closed(mesh, region)) fail(ErrorCode::OpenMesh, "region boundary is not closed");
  const Vector origin = vertex_centroid(mesh);
  double vol = 0.0;
  for (std::size_t s = 0; s < mesh.simplices.size(); ++s) {
    const int sg = chain_sign(mesh, s, region);
    if (sg) vol += sg * cone(mesh, s, origin);
  }
  return vol;
}

SurfaceMesh with_vertices(const SurfaceMesh& mesh, std::vector<Vector> vertices) {
  if (vertices.size() != mesh.vertices.size()) {
    fail(ErrorCode::InvalidArgument, "vertex count mismatch");
  }
  // Sweep along the first coordinate for pairs closer than the collision tolerance.
  const double tol = kTolerances.vertex_collision;
  std::vector<std::size_t> order(vertices.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return vertices[a](0) < vertices[b](0); });
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      if (vertices[order[j]](0) - vertices[order[i]](0) > tol) break;
      if ((vertices[order[j]] - vertices[order[i]]).norm() <= tol) {
        fail(ErrorCode::SelfIntersectionSuspected, "two mesh vertices collide under the map");
      }
    }
  }
  SurfaceMesh out = mesh;
  out.vertices = std::move(vertices);
  return out;
}

SurfaceMesh advect_mesh(const SurfaceMesh& mesh, const std::function<Vector(const Vector&)>& f) {
  std::vector<Vector> moved;
  moved.reserve(mesh.vertices.size());
  for (const auto& v : mesh.vertices) moved.push_back(f(v));
  return with_vertices(mesh, std::move(moved));
}

double simplex_distance(const SurfaceMesh& mesh, std::size_t s, const Vector& p) {
  const auto& ids = mesh.simplices[s];
  const Vector& a = mesh.vertices[static_cast<std::size_t>(ids[0])];
  const Vector& b = mesh.vertices[static_cast<std::size_t>(ids[1])];
  return mesh.n == 2 ? segment_distance(p, a, b)
                     : triangle_distance(p, a, b, mesh.vertices[static_cast<std::size_t>(ids[2])]);
}

double distance_to_mesh(const SurfaceMesh& mesh, const Vector& p) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < mesh.simplex_count(); ++s) best = std::min(best, simplex_distance(mesh, s, p));
  return best;
}

SurfaceMesh reversed(const SurfaceMesh& mesh) {
  SurfaceMesh out = mesh;
  for (auto& s : out.simplices) std::swap(s[0], s[1]);
  return out;
}

SurfaceMesh regular_polygon(int sides, double radius, const Vector& center, double phase) {
  if (sides < 3 || !(radius > 0.0) || center.size() != 2) {
    fail(ErrorCode::InvalidArgument, "polygon needs >= 3 sides, radius > 0, center in R^2");
  }
  SurfaceMesh mesh;
  mesh.n = 2;
  for (int k = 0; k < sides; ++k) {
    const double th = phase + 2.0 * std::numbers::pi * k / sides;
    Vector v(2);
    v << center(0) + radius * std::cos(th), center(1) + radius * std::sin(th);
    mesh.vertices.push_back(v);
    mesh.add_simplex({k, (k + 1) % sides});
  }
  return mesh;
}

namespace {

// Counter-clockwise boundary points of an axis-aligned square.
std::vector<Vector> square_loop(double side, const Vector& center, int per_side) {
  const double h = 0.5 * side;
  const std::array<std::array<double, 2>, 4> corners{{{-h, -h}, {h, -h}, {h, h}, {-h, h}}};
  std::vector<Vector> pts;
  for (int c = 0; c < 4; ++c) {
    const auto& p = corners[static_cast<std::size_t>(c)];
    const auto& q = corners[static_cast<std::size_t>((c + 1) % 4)];
    for (int j = 0; j < per_side; ++j) {
      const double s = static_cast<double>(j) / per_side;
      Vector v(2);
      v << center(0) + p[0] + s * (q[0] - p[0]), center(1) + p[1] + s * (q[1] - p[1]);
      pts.push_back(v);
    }
  }
  return pts;
}

}  // namespace

SurfaceMesh axis_square(double side, const Vector& center, int per_side) {
  if (per_side < 1 || !(side > 0.0)) fail(ErrorCode::InvalidArgument, "bad square parameters");
  SurfaceMesh mesh;
  mesh.n = 2;
  mesh.vertices = square_loop(side, center, per_side);
  const int count = static_cast<int>(mesh.vertices.size());
  for (int k = 0; k < count; ++k) mesh.add_simplex({k, (k + 1) % count});
  return mesh;
}

SurfaceMesh split_square(double side, const Vector& center, int per_side) {
  if (per_side < 2 || per_side % 2 != 0) {
    fail(ErrorCode::InvalidArgument, "split square needs an even number of points per side");
  }
  SurfaceMesh mesh;
  mesh.n = 2;
  mesh.vertices = square_loop(side, center, per_side);
  const int count = static_cast<int>(mesh.vertices.size());
  for (int k = 0; k < count; ++k) {
    const Vector mid = 0.5 * (mesh.vertices[static_cast<std::size_t>(k)] +
                              mesh.vertices[static_cast<std::size_t>((k + 1) % count)]);
    mesh.add_simplex({k, (k + 1) % count}, mid(0) < center(0) ? 1 : 2, 0);
  }
  // Interior wall from the bottom midpoint (index per_side / 2) to the top
  // midpoint (index 2 per_side + per_side / 2), normal pointing into region 2.
  const int bottom = per_side / 2;
  const int top = 2 * per_side + per_side / 2;
  int prev = bottom;
  for (int j = 1; j < per_side; ++j) {
    const double s = static_cast<double>(j) / per_side;
    mesh.vertices.push_back((1.0 - s) * mesh.vertices[static_cast<std::size_t>(bottom)] +
                            s * mesh.vertices[static_cast<std::size_t>(top)]);
    const int id = static_cast<int>(mesh.vertices.size()) - 1;
    mesh.add_simplex({prev, id}, 1, 2);
    prev = id;
  }
  mesh.add_simplex({prev, top}, 1, 2);
  return mesh;
}

SurfaceMesh icosphere(int subdivisions, double radius, const Vector& center) {
  if (center.size() != 3 || !(radius > 0.0) || subdivisions < 0) {
    fail(ErrorCode::InvalidArgument, "bad icosphere parameters");
  }
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vector> verts;
  auto push = [&](double x, double y, double z) {
    Vector v(3);
    v << x, y, z;
    verts.push_back(v.normalized());
  };
  push(-1, t, 0); push(1, t, 0); push(-1, -t, 0); push(1, -t, 0);
  push(0, -1, t); push(0, 1, t); push(0, -1, -t); push(0, 1, -t);
  push(t, 0, -1); push(t, 0, 1); push(-t, 0, -1); push(-t, 0, 1);
  std::vector<std::array<int, 3>> faces{{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                        {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                        {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                        {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int level = 0; level < subdivisions; ++level) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      verts.push_back((verts[static_cast<std::size_t>(a)] + verts[static_cast<std::size_t>(b)]).normalized());
      const int id = static_cast<int>(verts.size()) - 1;
      midpoint.emplace(key, id);
      return id;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(faces.size() * 4);
    for (const auto& f : faces) {
      const int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
  }
  SurfaceMesh mesh;
  mesh.n = 3;
  for (const auto& v : verts) mesh.vertices.push_back(center + radius * v);
  for (auto f : faces) {
    const Vector& a = verts[static_cast<std::size_t>(f[0])];
    const Vector nrm = cross3(verts[static_cast<std::size_t>(f[1])] - a, verts[static_cast<std::size_t>(f[2])] - a);
    if (nrm.dot(a) < 0.0) std::swap(f[1], f[2]);
    mesh.add_simplex({f[0], f[1], f[2]});
  }
  return mesh;
}

}  // namespace varflow
