#include "varflow/io.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "varflow/error.hpp"

namespace varflow {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot read " + path.string());
  return in;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_number(const std::string& text, double& value) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  char* end = nullptr;
  value = std::strtod(t.c_str(), &end);
  return end == t.c_str() + t.size();
}

// Numeric CSV rows; a first line that does not parse is returned as header.
std::vector<std::vector<double>> read_rows(std::istream& in, const std::string& what,
                                           std::vector<std::string>* header = nullptr) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split(line, ',');
    std::vector<double> row;
    row.reserve(fields.size());
    bool numeric = true;
    for (const auto& f : fields) {
      double v = 0.0;
      if (!parse_number(f, v)) {
        numeric = false;
        break;
      }
      row.push_back(v);
    }
    if (!numeric) {
      if (rows.empty() && header && header->empty()) {
        for (const auto& f : fields) header->push_back(trim(f));
        continue;
      }
      fail(ErrorCode::IoError, what + ": non-numeric value on line " + std::to_string(lineno));
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      fail(ErrorCode::IoError, what + ": ragged row on line " + std::to_string(lineno));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

void write_varifold_csv(const fs::path& path, const DiscreteVarifold& varifold) {
  const int n = varifold.ambient_dim();
  auto out = open_out(path);
  for (int i = 1; i <= n; ++i) out << 'x' << i << ',';
  out << 'm';
  for (int i = 1; i <= n; ++i) {
    for (int j = 1; j <= n; ++j) out << ",p" << i << j;
  }
  out << '\n';
  for (const auto& a : varifold.atoms()) {
    for (int i = 0; i < n; ++i) out << format_double(a.position(i)) << ',';
    out << format_double(a.mass);
    const auto& p = a.plane.projection();
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) out << ',' << format_double(p(i, j));
    }
    out << '\n';
  }
  json side = {{"n", n}, {"d", varifold.dim()}, {"count", varifold.size()}};
  auto sidecar = open_out(fs::path(path.string() + ".json"));
  sidecar << side.dump() << '\n';
}

DiscreteVarifold read_varifold_csv(const fs::path& path) {
  auto in = open_in(path);
  std::vector<std::string> header;
  const auto rows = read_rows(in, path.string(), &header);
  int n = 0;
  for (const auto& h : header) {
    if (!h.empty() && h[0] == 'x') ++n;
  }
  if (n == 0 && !rows.empty()) {
    // n + 1 + n^2 columns without a header.
    const auto cols = static_cast<int>(rows.front().size());
    for (int k = 1; k * k + k + 1 <= cols; ++k) {
      if (k * k + k + 1 == cols) n = k;
    }
  }
  int d = 0;
  const fs::path side(path.string() + ".json");
  if (fs::exists(side)) {
    auto s = open_in(side);
    try {
      const json j = json::parse(s);
      d = j.at("d").get<int>();
      if (n == 0) n = j.at("n").get<int>();
    } catch (const json::exception& e) {
      fail(ErrorCode::IoError, side.string() + ": " + e.what());
    }
  }
  if (n < 2) fail(ErrorCode::IoError, path.string() + ": cannot determine ambient dimension");
  const auto cols = static_cast<std::size_t>(n + 1 + n * n);
  if (!rows.empty() && rows.front().size() != cols) {
    fail(ErrorCode::IoError, path.string() + ": expected " + std::to_string(cols) + " columns");
  }
  if (d == 0) {
    if (rows.empty()) fail(ErrorCode::IoError, path.string() + ": empty frame without sidecar");
    double trace = 0.0;
    for (int i = 0; i < n; ++i) trace += rows.front()[static_cast<std::size_t>(n + 1 + i * n + i)];
    d = static_cast<int>(std::lround(trace));
  }
  DiscreteVarifold v(n, d);
  v.reserve(rows.size());
  for (const auto& r : rows) {
    Vector x(n);
    Matrix p(n, n);
    for (int i = 0; i < n; ++i) x(i) = r[static_cast<std::size_t>(i)];
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) p(i, j) = r[static_cast<std::size_t>(n + 1 + i * n + j)];
    }
    v.add(std::move(x), GrassmannElement::from_projection(p, d), r[static_cast<std::size_t>(n)]);
  }
  return v;
}

void write_measure_csv(const fs::path& path, const DiscreteMeasure& measure) {
  auto out = open_out(path);
  const int n = measure.ambient_dim();
  for (int i = 1; i <= n; ++i) out << 'x' << i << ',';
  out << "w\n";
  for (std::size_t k = 0; k < measure.points.size(); ++k) {
    for (int i = 0; i < n; ++i) out << format_double(measure.points[k](i)) << ',';
    out << format_double(measure.weights[k]) << '\n';
  }
}

DiscreteMeasure read_measure_csv(const fs::path& path) {
  auto in = open_in(path);
  std::vector<std::string> header;
  const auto rows = read_rows(in, path.string(), &header);
  DiscreteMeasure m;
  for (const auto& r : rows) {
    if (r.size() < 2) fail(ErrorCode::IoError, path.string() + ": need at least x1,w");
    Vector x(static_cast<Eigen::Index>(r.size() - 1));
    for (std::size_t i = 0; i + 1 < r.size(); ++i) x(static_cast<Eigen::Index>(i)) = r[i];
    m.add(std::move(x), r.back());
  }
  return m;
}

void write_points_csv(const fs::path& path, const std::vector<Vector>& points) {
  auto out = open_out(path);
  const auto n = points.empty() ? 0 : points.front().size();
  for (Eigen::Index i = 0; i < n; ++i) out << (i ? "," : "") << 'x' << (i + 1);
  out << '\n';
  for (const auto& p : points) {
    for (Eigen::Index i = 0; i < p.size(); ++i) out << (i ? "," : "") << format_double(p(i));
    out << '\n';
  }
}

std::vector<Vector> read_points_csv(const fs::path& path) {
  auto in = open_in(path);
  std::vector<std::string> header;
  const auto rows = read_rows(in, path.string(), &header);
  std::vector<Vector> pts;
  pts.reserve(rows.size());
  for (const auto& r : rows) pts.push_back(Eigen::Map<const Vector>(r.data(), static_cast<Eigen::Index>(r.size())));
  return pts;
}

void write_mesh_topology(const fs::path& path, const SurfaceMesh& mesh) {
  json j;
  j["n"] = mesh.n;
  j["simplices"] = mesh.simplices;
  j["regions"] = mesh.regions;
  auto out = open_out(path);
  out << j.dump() << '\n';
}

SurfaceMesh read_mesh_topology(const fs::path& path) {
  auto in = open_in(path);
  try {
    const json j = json::parse(in);
    SurfaceMesh mesh;
    mesh.n = j.at("n").get<int>();
    mesh.simplices = j.at("simplices").get<std::vector<std::vector<int>>>();
    mesh.regions = j.at("regions").get<std::vector<std::array<int, 2>>>();
    return mesh;
  } catch (const json::exception& e) {
    fail(ErrorCode::IoError, path.string() + ": " + e.what());
  }
}

namespace {

// Next non-empty, non-comment line split on whitespace.
bool next_tokens(std::istream& in, std::vector<std::string>& tokens) {
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    tokens.clear();
    std::string tok;
    while (ss >> tok) tokens.push_back(tok);
    if (!tokens.empty()) return true;
  }
  return false;
}

double to_double(const std::string& s, const char* what) {
  double v = 0.0;
  if (!parse_number(s, v)) fail(ErrorCode::IoError, std::string(what) + ": bad number '" + s + "'");
  return v;
}

int to_index(const std::string& s, const char* what) {
  const auto slash = s.find('/');
  const double v = to_double(s.substr(0, slash), what);
  return static_cast<int>(v);
}

Vector vec3(double x, double y, double z) {
  Vector v(3);
  v << x, y, z;
  return v;
}

}  // namespace

SurfaceMesh read_off(std::istream& in) {
  std::vector<std::string> t;
  if (!next_tokens(in, t) || t[0].rfind("OFF", 0) != 0) fail(ErrorCode::IoError, "OFF: missing header");
  // Counts either follow the keyword on the header line or sit on the next line.
  if (t.size() == 1 && !next_tokens(in, t)) fail(ErrorCode::IoError, "OFF: missing counts");
  const std::size_t first = t[0].rfind("OFF", 0) == 0 ? 1 : 0;
  if (t.size() < first + 2) fail(ErrorCode::IoError, "OFF: bad counts line");
  const auto nv = static_cast<std::size_t>(to_double(t[first], "OFF"));
  const auto nf = static_cast<std::size_t>(to_double(t[first + 1], "OFF"));
  SurfaceMesh mesh;
  mesh.n = 3;
  for (std::size_t i = 0; i < nv; ++i) {
    if (!next_tokens(in, t) || t.size() < 3) fail(ErrorCode::IoError, "OFF: truncated vertices");
    mesh.vertices.push_back(vec3(to_double(t[0], "OFF"), to_double(t[1], "OFF"), to_double(t[2], "OFF")));
  }
  for (std::size_t i = 0; i < nf; ++i) {
    if (!next_tokens(in, t)) fail(ErrorCode::IoError, "OFF: truncated faces");
    const auto k = static_cast<std::size_t>(to_double(t[0], "OFF"));
    if (k < 3 || t.size() < k + 1) fail(ErrorCode::IoError, "OFF: bad face");
    const int a = to_index(t[1], "OFF");
    for (std::size_t j = 2; j < k; ++j) mesh.add_simplex({a, to_index(t[j], "OFF"), to_index(t[j + 1], "OFF")});
  }
  mesh.validate();
  return mesh;
}

SurfaceMesh read_obj(std::istream& in) {
  SurfaceMesh mesh;
  mesh.n = 3;
  std::vector<std::string> t;
  while (next_tokens(in, t)) {
    if (t[0] == "v") {
      if (t.size() < 4) fail(ErrorCode::IoError, "OBJ: bad vertex");
      mesh.vertices.push_back(vec3(to_double(t[1], "OBJ"), to_double(t[2], "OBJ"), to_double(t[3], "OBJ")));
    } else if (t[0] == "f") {
      if (t.size() < 4) fail(ErrorCode::IoError, "OBJ: bad face");
      std::vector<int> ids;
      for (std::size_t j = 1; j < t.size(); ++j) {
        int id = to_index(t[j], "OBJ");
        id = id < 0 ? static_cast<int>(mesh.vertices.size()) + id : id - 1;
        ids.push_back(id);
      }
      for (std::size_t j = 1; j + 1 < ids.size(); ++j) mesh.add_simplex({ids[0], ids[j], ids[j + 1]});
    }
  }
  mesh.validate();
  return mesh;
}

SurfaceMesh read_segment_csv(std::istream& in) {
  std::vector<std::string> header;
  const auto rows = read_rows(in, "segment CSV", &header);
  SurfaceMesh mesh;
  mesh.n = 2;
  if (rows.empty()) return mesh;
  const std::size_t cols = rows.front().size();
  if (cols != 2 && cols != 3) fail(ErrorCode::IoError, "segment CSV: expected x,y or loop,x,y");
  std::size_t start = 0;
  auto close_loop = [&](std::size_t end) {
    const auto count = static_cast<int>(end - start);
    if (count < 2) fail(ErrorCode::IoError, "segment CSV: loop with fewer than two points");
    const auto base = static_cast<int>(start);
    for (int k = 0; k < count; ++k) mesh.add_simplex({base + k, base + (k + 1) % count});
  };
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    Vector v(2);
    v << r[cols - 2], r[cols - 1];
    if (cols == 3 && i > start && r[0] != rows[start][0]) {
      close_loop(i);
      start = i;
    }
    mesh.vertices.push_back(v);
  }
  close_loop(rows.size());
  mesh.validate();
  return mesh;
}

SurfaceMesh read_mesh(const fs::path& path) {
  auto in = open_in(path);
  const auto ext = path.extension().string();
  if (ext == ".off" || ext == ".OFF") return read_off(in);
  if (ext == ".obj" || ext == ".OBJ") return read_obj(in);
  if (ext == ".csv" || ext == ".CSV") return read_segment_csv(in);
  fail(ErrorCode::IoError, "unknown mesh format '" + ext + "'");
}

}  // namespace varflow
