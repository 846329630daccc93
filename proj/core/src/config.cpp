#include "varflow/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "varflow/error.hpp"
#include "varflow/io.hpp"
#include "varflow/presets.hpp"

namespace varflow {

namespace pt = boost::property_tree;

int RunConfig::ambient_dim() const {
  if (!mesh_file.empty()) {
    const auto ext = std::filesystem::path(mesh_file).extension().string();
    return (ext == ".csv" || ext == ".CSV") ? 2 : 3;
  }
  return (preset == "sphere" || preset == "enlaced-circles") ? 3 : 2;
}

void RunConfig::sync_subdivision() { flow.subdivision = Subdivision::uniform(end_time, dt); }

std::string to_string(FlowMode mode) {
  return mode == FlowMode::Piecewise ? "piecewise" : "interpolated";
}

FlowMode parse_mode(const std::string& text) {
  if (text == "piecewise") return FlowMode::Piecewise;
  if (text == "interpolated") return FlowMode::Interpolated;
  throw std::invalid_argument("expected piecewise or interpolated");
}

namespace {

double to_double(const std::string& s) {
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("trailing characters");
  return v;
}

long long to_integer(const std::string& s) {
  std::size_t used = 0;
  const long long v = std::stoll(s, &used);
  if (used != s.size()) throw std::invalid_argument("expected an integer");
  return v;
}

bool to_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw std::invalid_argument("expected a boolean");
}

Vector to_vector(const std::string& s) {
  std::vector<double> values;
  std::string field;
  std::istringstream ss(s);
  while (std::getline(ss, field, ',')) {
    const auto b = field.find_first_not_of(" \t");
    const auto e = field.find_last_not_of(" \t");
    if (b == std::string::npos) throw std::invalid_argument("empty coordinate");
    values.push_back(to_double(field.substr(b, e - b + 1)));
  }
  if (values.empty()) throw std::invalid_argument("expected comma-separated coordinates");
  return Eigen::Map<Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

std::string vector_text(const Vector& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) out += (i ? "," : "") + format_double(v(i));
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"run.preset", [](RunConfig& c, const std::string& v) { c.preset = v; }},
      {"run.seed", [](RunConfig& c, const std::string& v) {
         const auto s = to_integer(v);
         if (s < 0) throw std::invalid_argument("seed must be >= 0");
         c.seed = static_cast<std::uint64_t>(s);
       }},
      {"run.output", [](RunConfig& c, const std::string& v) { c.output = v; }},
      {"flow.eps", [](RunConfig& c, const std::string& v) { c.flow.eps = to_double(v); }},
      {"flow.mass_bound", [](RunConfig& c, const std::string& v) { c.flow.mass_bound = to_double(v); }},
      {"flow.dt", [](RunConfig& c, const std::string& v) { c.dt = to_double(v); }},
      {"flow.end_time", [](RunConfig& c, const std::string& v) { c.end_time = to_double(v); }},
      {"flow.gate_constant", [](RunConfig& c, const std::string& v) { c.flow.gate_constant = to_double(v); }},
      {"flow.enforce_gate", [](RunConfig& c, const std::string& v) { c.flow.enforce_gate = to_bool(v); }},
      {"flow.cutoff_multiple", [](RunConfig& c, const std::string& v) { c.flow.cutoff_multiple = to_double(v); }},
      {"flow.refinement", [](RunConfig& c, const std::string& v) { c.flow.refinement = static_cast<int>(to_integer(v)); }},
      {"flow.mode", [](RunConfig& c, const std::string& v) { c.flow.mode = parse_mode(v); }},
      {"flow.record_dissipation", [](RunConfig& c, const std::string& v) { c.flow.record_dissipation = to_bool(v); }},
      {"scenario.atoms", [](RunConfig& c, const std::string& v) { c.atoms = static_cast<int>(to_integer(v)); }},
      {"scenario.radius", [](RunConfig& c, const std::string& v) { c.radius = to_double(v); }},
      {"scenario.samples_per_simplex", [](RunConfig& c, const std::string& v) { c.samples_per_simplex = static_cast<int>(to_integer(v)); }},
      {"scenario.subdivisions", [](RunConfig& c, const std::string& v) { c.subdivisions = static_cast<int>(to_integer(v)); }},
      {"scenario.mesh", [](RunConfig& c, const std::string& v) { c.mesh_file = v; }},
      {"certificates.c5", [](RunConfig& c, const std::string& v) { c.c5 = to_double(v); }},
      {"certificates.eps0", [](RunConfig& c, const std::string& v) { c.eps0 = to_double(v); }},
      {"certificates.c6", [](RunConfig& c, const std::string& v) { c.c6 = to_double(v); }},
      {"certificates.isoperimetric", [](RunConfig& c, const std::string& v) { c.isoperimetric = to_double(v); }},
      {"certificates.mc_samples", [](RunConfig& c, const std::string& v) {
         const auto s = to_integer(v);
         if (s < 1) throw std::invalid_argument("need at least one sample");
         c.mc_samples = static_cast<std::size_t>(s);
       }},
      {"certificates.lemma_samples", [](RunConfig& c, const std::string& v) {
         const auto s = to_integer(v);
         if (s < 1) throw std::invalid_argument("need at least one sample");
         c.lemma_samples = static_cast<std::size_t>(s);
       }},
      {"certificates.lsc_tol", [](RunConfig& c, const std::string& v) { c.lsc_tol = to_double(v); }},
      {"certificates.barrier_center", [](RunConfig& c, const std::string& v) { c.barrier_center = to_vector(v); }},
      {"certificates.barrier_radius", [](RunConfig& c, const std::string& v) { c.barrier_radius = to_double(v); }},
      {"certificates.ball_center", [](RunConfig& c, const std::string& v) { c.ball_center = to_vector(v); }},
      {"certificates.ball_radius", [](RunConfig& c, const std::string& v) { c.ball_radius = to_double(v); }},
  };
  return table;
}

// Line of each "section.key" in the raw text, for error messages.
std::map<std::string, int> key_lines(const std::string& text) {
  std::map<std::string, int> lines;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto b = line.find_first_not_of(" \t");
    if (b == std::string::npos || line[b] == ';' || line[b] == '#') continue;
    if (line[b] == '[') {
      const auto e = line.find(']', b);
      section = line.substr(b + 1, e == std::string::npos ? std::string::npos : e - b - 1);
      continue;
    }
    const auto eq = line.find('=', b);
    if (eq == std::string::npos) continue;
    auto key = line.substr(b, eq - b);
    key.erase(key.find_last_not_of(" \t") + 1);
    lines.emplace(section + "." + key, lineno);
  }
  return lines;
}

[[noreturn]] void config_error(const std::string& origin, int line, const std::string& key,
                               const std::string& reason) {
  std::ostringstream msg;
  msg << origin << ':' << line << ": " << key << ": " << reason;
  fail(ErrorCode::ConfigError, msg.str());
}

void check_ranges(const RunConfig& c, const std::string& origin, const std::map<std::string, int>& lines) {
  auto check = [&](bool ok, const std::string& key, const std::string& reason) {
    if (ok) return;
    const auto it = lines.find(key);
    config_error(origin, it == lines.end() ? 0 : it->second, key, reason);
  };
  check(c.flow.eps > 0.0 && c.flow.eps < 1.0, "flow.eps", "must lie in (0, 1)");
  check(c.flow.mass_bound >= 1.0, "flow.mass_bound", "must be >= 1");
  check(c.dt >= 0.0, "flow.dt", "must be >= 0");
  check(c.end_time >= 0.0 && c.end_time <= 1.0, "flow.end_time", "must lie in [0, 1]");
  check(c.flow.gate_constant > 0.0, "flow.gate_constant", "must be > 0");
  check(c.flow.cutoff_multiple > 0.0, "flow.cutoff_multiple", "must be > 0");
  check(c.flow.refinement >= 2, "flow.refinement", "must be >= 2");
  check(c.atoms >= 3, "scenario.atoms", "must be >= 3");
  check(c.radius > 0.0, "scenario.radius", "must be > 0");
  check(c.samples_per_simplex >= 1, "scenario.samples_per_simplex", "must be >= 1");
  check(c.subdivisions >= 0, "scenario.subdivisions", "must be >= 0");
  check(c.c5 > 0.0, "certificates.c5", "must be > 0");
  check(c.eps0 > 0.0, "certificates.eps0", "must be > 0");
  check(!c.c6 || *c.c6 >= 0.0, "certificates.c6", "must be >= 0");
  check(!c.isoperimetric || *c.isoperimetric > 0.0, "certificates.isoperimetric", "must be > 0");
  check(c.barrier_radius > 0.0, "certificates.barrier_radius", "must be > 0");
  check(c.ball_radius > 0.0, "certificates.ball_radius", "must be > 0");
  const auto n = c.ambient_dim();
  check(c.barrier_center.size() == n, "certificates.barrier_center", "dimension mismatch");
  check(c.ball_center.size() == n, "certificates.ball_center", "dimension mismatch");
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& origin) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    config_error(origin, static_cast<int>(e.line()), "<syntax>", e.message());
  }
  const auto lines = key_lines(text);
  auto line_of = [&](const std::string& key) {
    const auto it = lines.find(key);
    return it == lines.end() ? 0 : it->second;
  };

  RunConfig cfg;
  const std::string preset = tree.get("run.preset", std::string("circle"));
  try {
    cfg = preset_config(preset);
  } catch (const Error& e) {
    config_error(origin, line_of("run.preset"), "run.preset", e.what());
  }
  const bool explicit_barrier = tree.get_optional<std::string>("certificates.barrier_center").has_value();
  const bool explicit_ball = tree.get_optional<std::string>("certificates.ball_center").has_value();

  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      config_error(origin, line_of("." + section), section, "keys must live inside a section");
    }
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      const auto it = setters().find(full);
      if (it == setters().end()) config_error(origin, line_of(full), full, "unknown key");
      try {
        it->second(cfg, value.data());
      } catch (const std::exception& e) {
        config_error(origin, line_of(full), full, std::string("invalid value '") + value.data() + "' (" + e.what() + ")");
      }
    }
  }
  // A preset switch or a mesh file can change the ambient dimension.
  const auto n = cfg.ambient_dim();
  if (!explicit_barrier && cfg.barrier_center.size() != n) cfg.barrier_center = Vector::Zero(n);
  if (!explicit_ball && cfg.ball_center.size() != n) cfg.ball_center = Vector::Zero(n);
  check_ranges(cfg, origin, lines);
  cfg.sync_subdivision();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ConfigError, path.string() + ":0: cannot open file");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.string());
}

std::string to_ini(const RunConfig& c) {
  std::ostringstream out;
  auto b = [](bool v) { return v ? "true" : "false"; };
  out << "[run]\n"
      << "preset = " << c.preset << '\n'
      << "seed = " << c.seed << '\n'
      << "output = " << c.output << "\n\n"
      << "[flow]\n"
      << "eps = " << format_double(c.flow.eps) << '\n'
      << "mass_bound = " << format_double(c.flow.mass_bound) << '\n'
      << "dt = " << format_double(c.dt) << '\n'
      << "end_time = " << format_double(c.end_time) << '\n'
      << "gate_constant = " << format_double(c.flow.gate_constant) << '\n'
      << "enforce_gate = " << b(c.flow.enforce_gate) << '\n'
      << "cutoff_multiple = " << format_double(c.flow.cutoff_multiple) << '\n'
      << "refinement = " << c.flow.refinement << '\n'
      << "mode = " << to_string(c.flow.mode) << '\n'
      << "record_dissipation = " << b(c.flow.record_dissipation) << "\n\n"
      << "[scenario]\n"
      << "atoms = " << c.atoms << '\n'
      << "radius = " << format_double(c.radius) << '\n'
      << "samples_per_simplex = " << c.samples_per_simplex << '\n'
      << "subdivisions = " << c.subdivisions << '\n';
  if (!c.mesh_file.empty()) out << "mesh = " << c.mesh_file << '\n';
  out << "\n[certificates]\n"
      << "c5 = " << format_double(c.c5) << '\n'
      << "eps0 = " << format_double(c.eps0) << '\n';
  if (c.c6) out << "c6 = " << format_double(*c.c6) << '\n';
  if (c.isoperimetric) out << "isoperimetric = " << format_double(*c.isoperimetric) << '\n';
  out << "mc_samples = " << c.mc_samples << '\n'
      << "lemma_samples = " << c.lemma_samples << '\n'
      << "lsc_tol = " << format_double(c.lsc_tol) << '\n'
      << "barrier_center = " << vector_text(c.barrier_center) << '\n'
      << "barrier_radius = " << format_double(c.barrier_radius) << '\n'
      << "ball_center = " << vector_text(c.ball_center) << '\n'
      << "ball_radius = " << format_double(c.ball_radius) << '\n';
  return out.str();
}

}  // namespace varflow
