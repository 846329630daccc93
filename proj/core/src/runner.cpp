#include "varflow/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "varflow/barriers.hpp"
#include "varflow/error.hpp"
#include "varflow/io.hpp"
#include "varflow/partition.hpp"
#include "varflow/presets.hpp"

namespace varflow {

namespace fs = std::filesystem;
using nlohmann::json;

#ifndef VARFLOW_VERSION_STRING
#define VARFLOW_VERSION_STRING "0.0.0"
#endif

std::string version() { return VARFLOW_VERSION_STRING; }

Simulation simulate(const RunConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  Simulation sim;
  sim.config = config;
  sim.config.sync_subdivision();
  auto scenario = build_scenario(sim.config);
  for (auto& comp : scenario.components) {
    ComponentTrace ct;
    ct.name = comp.name;
    std::vector<Vector> tracers;
    if (comp.mesh) tracers = comp.mesh->vertices;
    ct.trace = run(comp.varifold, sim.config.flow, std::move(tracers));
    ct.mesh = std::move(comp.mesh);
    sim.components.push_back(std::move(ct));
  }
  sim.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return sim;
}

namespace {

std::string frame_name(const char* stem, std::size_t i, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%05zu.%s", stem, i, ext);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorCode::IoError, "write failed: " + path.string());
}

json verdict_to_json(const Verdict& v) {
  json details = json::object();
  for (const auto& [k, x] : v.details) details[k] = x;
  json j = {{"name", v.name},     {"anchor", v.anchor}, {"bound", v.bound},
            {"measured", v.measured}, {"pass", v.pass}, {"details", details}};
  if (!v.note.empty()) j["note"] = v.note;
  return j;
}

json stats_to_json(const StepStats& s) {
  return {{"step", s.step},
          {"max_displacement", s.max_displacement},
          {"max_jacobian_deviation", s.max_jacobian_deviation},
          {"min_tangential_jacobian", s.min_tangential_jacobian},
          {"max_tangential_jacobian_deviation", s.max_tangential_jacobian_deviation}};
}

StepStats stats_from_json(const json& j) {
  StepStats s;
  s.step = j.at("step").get<double>();
  s.max_displacement = j.at("max_displacement").get<double>();
  s.max_jacobian_deviation = j.at("max_jacobian_deviation").get<double>();
  s.min_tangential_jacobian = j.at("min_tangential_jacobian").get<double>();
  s.max_tangential_jacobian_deviation = j.at("max_tangential_jacobian_deviation").get<double>();
  return s;
}

fs::path require(const fs::path& path) {
  if (!fs::exists(path)) fail(ErrorCode::MissingFrames, "missing file " + path.string());
  return path;
}

}  // namespace

fs::path write_simulation(const Simulation& sim, const fs::path& dir,
                          const std::vector<Verdict>& verdicts) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
  const std::string ini = to_ini(sim.config);
  write_text(dir / "config.ini", ini);

  json manifest;
  manifest["version"] = version();
  manifest["seed"] = sim.config.seed;
  manifest["preset"] = sim.config.preset;
  manifest["config"] = ini;
  manifest["wall_seconds"] = sim.wall_seconds;
  manifest["components"] = json::array();
  for (const auto& comp : sim.components) {
    const fs::path sub = dir / comp.name;
    fs::create_directories(sub, ec);
    if (ec) fail(ErrorCode::IoError, "cannot create " + sub.string() + ": " + ec.message());
    const auto& tr = comp.trace;
    json c;
    c["name"] = comp.name;
    c["n"] = tr.ambient_dim();
    c["d"] = tr.dim();
    json frames = json::array(), meshes = json::array();
    json times = json::array(), masses = json::array(), diss = json::array(),
         speed = json::array(), first_var = json::array();
    for (std::size_t i = 0; i < tr.snapshots.size(); ++i) {
      const auto& s = tr.snapshots[i];
      const auto name = frame_name("frame", i, "csv");
      write_varifold_csv(sub / name, s.varifold);
      frames.push_back(comp.name + "/" + name);
      if (comp.mesh) {
        const auto mname = frame_name("mesh", i, "csv");
        write_points_csv(sub / mname, s.tracers);
        meshes.push_back(comp.name + "/" + mname);
      }
      times.push_back(s.time);
      masses.push_back(s.mass);
      diss.push_back(s.dissipation);
      speed.push_back(s.max_speed);
      first_var.push_back(s.velocity_first_variation);
    }
    c["frames"] = frames;
    c["times"] = times;
    c["masses"] = masses;
    c["dissipation"] = diss;
    c["max_speed"] = speed;
    c["first_variation"] = first_var;
    json steps = json::array();
    for (const auto& s : tr.steps) steps.push_back(stats_to_json(s));
    c["steps"] = steps;
    if (comp.mesh) {
      write_mesh_topology(sub / "mesh.json", *comp.mesh);
      c["mesh"] = comp.name + "/mesh.json";
      c["mesh_frames"] = meshes;
    }
    manifest["components"].push_back(c);
  }
  json vs = json::array();
  for (const auto& v : verdicts) vs.push_back(verdict_to_json(v));
  manifest["certificates"] = vs;
  const fs::path path = dir / "trace.json";
  write_text(path, manifest.dump(2) + "\n");
  return path;
}

Simulation load_simulation(const fs::path& manifest_path) {
  std::ifstream in(require(manifest_path));
  json m;
  try {
    in >> m;
  } catch (const json::exception& e) {
    fail(ErrorCode::IoError, manifest_path.string() + ": " + e.what());
  }
  const fs::path dir = manifest_path.parent_path();
  Simulation sim;
  try {
    sim.config = parse_config(m.at("config").get<std::string>(), manifest_path.string());
    sim.config.sync_subdivision();
    sim.wall_seconds = m.value("wall_seconds", 0.0);
    for (const auto& c : m.at("components")) {
      ComponentTrace ct;
      ct.name = c.at("name").get<std::string>();
      ct.trace.config = sim.config.flow;
      const auto& frames = c.at("frames");
      const auto& times = c.at("times");
      const auto& masses = c.at("masses");
      const auto& diss = c.at("dissipation");
      const auto& speed = c.at("max_speed");
      if (frames.size() != times.size()) {
        fail(ErrorCode::MissingFrames, ct.name + ": frame list and time grid differ in length");
      }
      const json* meshes = c.contains("mesh_frames") ? &c.at("mesh_frames") : nullptr;
      if (c.contains("mesh")) ct.mesh = read_mesh_topology(require(dir / c.at("mesh").get<std::string>()));
      for (std::size_t i = 0; i < frames.size(); ++i) {
        Snapshot s;
        s.time = times[i].get<double>();
        s.varifold = read_varifold_csv(require(dir / frames[i].get<std::string>()));
        s.mass = masses.at(i).get<double>();
        s.dissipation = diss.at(i).get<double>();
        s.max_speed = speed.at(i).get<double>();
        if (c.contains("first_variation")) {
          s.velocity_first_variation = c["first_variation"].at(i).get<double>();
        }
        if (meshes) {
          if (i >= meshes->size()) fail(ErrorCode::MissingFrames, ct.name + ": mesh frame list too short");
          s.tracers = read_points_csv(require(dir / (*meshes)[i].get<std::string>()));
        }
        ct.trace.snapshots.push_back(std::move(s));
      }
      for (const auto& st : c.at("steps")) ct.trace.steps.push_back(stats_from_json(st));
      if (ct.trace.snapshots.empty()) fail(ErrorCode::MissingFrames, ct.name + ": no frames");
      if (ct.mesh) {
        if (!meshes) fail(ErrorCode::MissingFrames, ct.name + ": mesh without vertex frames");
        ct.mesh->vertices = ct.trace.snapshots.front().tracers;
        ct.mesh->validate();
      }
      sim.components.push_back(std::move(ct));
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::IoError, manifest_path.string() + ": " + e.what());
  }
  return sim;
}

std::vector<std::string> certificate_names() {
  return {"mass-decay",    "dissipation-budget", "technical-lemma", "barrier-defect",
          "eps-sphere-barrier", "external-sphere", "internal-sphere", "convex-hull",
          "lsc",           "volume-change",      "nontriviality",   "avoidance"};
}

std::vector<std::string> default_certificates(const Simulation& sim) {
  std::vector<std::string> out;
  const bool has_mesh = !sim.components.empty() && sim.components.front().mesh.has_value();
  for (const auto& name : certificate_names()) {
    if (name == "avoidance" && sim.components.size() < 2) continue;
    if ((name == "volume-change" || name == "nontriviality") && !has_mesh) continue;
    out.push_back(name);
  }
  return out;
}

namespace {

Verdict failed(const std::string& name, const std::string& note) {
  Verdict v;
  v.name = name;
  v.anchor = "precondition";
  v.bound = std::numeric_limits<double>::quiet_NaN();
  v.measured = std::numeric_limits<double>::quiet_NaN();
  v.pass = false;
  v.note = note;
  return v;
}

double max_over(const std::vector<SeriesPoint>& s) {
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& p : s) {
    if (!p.empty) m = std::max(m, p.value);
  }
  return m;
}

Verdict mass_decay(const FlowTrace& tr) {
  Verdict v;
  v.name = "mass_decay";
  v.anchor = "per-step mass increase is at most the step length";
  v.bound = 0.0;
  v.measured = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < tr.snapshots.size(); ++i) {
    const auto& a = tr.snapshots[i];
    const auto& b = tr.snapshots[i + 1];
    v.measured = std::max(v.measured, b.mass - a.mass - (b.time - a.time));
  }
  if (tr.snapshots.size() < 2) v.measured = 0.0;
  v.pass = v.measured <= v.bound;
  v.details = {{"initial_mass", tr.snapshots.front().mass},
               {"final_mass", tr.snapshots.back().mass}};
  return v;
}

Verdict budget(const FlowTrace& tr) {
  Verdict v;
  v.name = "dissipation_budget";
  v.anchor = "time integral of the dissipation is at most 2M";
  v.measured = dissipation_budget(tr);
  v.bound = 2.0 * tr.config.mass_bound;
  const double drop = tr.snapshots.front().mass - tr.snapshots.back().mass;
  v.pass = v.measured <= v.bound;
  v.details = {{"mass_drop", drop}, {"end_time", tr.snapshots.back().time}};
  return v;
}

BarrierFunction external_barrier(const RunConfig& cfg, int d) {
  return BarrierFunction(cfg.barrier_center, cfg.barrier_radius, d);
}

}  // namespace

Verdict run_certificate(const Simulation& sim, const std::string& name) {
  if (sim.components.empty()) fail(ErrorCode::MissingFrames, "simulation has no components");
  const auto& cfg = sim.config;
  const auto& comp = sim.components.front();
  const auto& tr = comp.trace;
  const int n = tr.ambient_dim();
  const int d = tr.dim();
  const double eps = tr.config.eps;

  if (name == "mass-decay") {
    Verdict v = mass_decay(tr);
    for (std::size_t k = 1; k < sim.components.size(); ++k) {
      const Verdict w = mass_decay(sim.components[k].trace);
      if (w.measured > v.measured) v = w;
    }
    return v;
  }
  if (name == "dissipation-budget") {
    Verdict v = budget(tr);
    for (std::size_t k = 1; k < sim.components.size(); ++k) {
      const Verdict w = budget(sim.components[k].trace);
      if (!w.pass) v = w;
    }
    return v;
  }
  if (name == "technical-lemma") {
    Verdict v;
    v.name = "technical_lemma";
    v.anchor = "pointwise quadratic inequality behind the barrier computation";
    v.measured = -technical_lemma_sweep(cfg.lemma_samples, cfg.seed, n, d);
    v.bound = 1e-12;
    v.pass = v.measured <= v.bound;
    v.details = {{"samples", static_cast<double>(cfg.lemma_samples)}};
    v.note = "measured is minus the smallest gap";
    return v;
  }
  if (name == "barrier-defect") {
    const auto psi = external_barrier(cfg, d);
    const int per_axis = n == 2 ? 64 : 24;
    const int planes = n == 2 ? 50 : 10;
    const auto sweep = barrier_defect_sweep(psi, per_axis, planes, cfg.seed);
    Verdict v;
    v.name = "barrier_defect";
    v.anchor = "sphere barrier is a supersolution on its support";
    v.measured = sweep.max_defect;
    v.bound = 1e-10;
    v.pass = v.measured <= v.bound;
    v.details = {{"evaluations", static_cast<double>(sweep.evaluations)},
                 {"beta", psi.beta()},
                 {"axiom_violation", psi.axiom_violation()}};
    return v;
  }
  if (name == "eps-sphere-barrier") {
    try {
      return epsilon_barrier_certificate(tr, external_barrier(cfg, d), {cfg.c5, cfg.eps0}).verdict;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::PreconditionViolated) throw;
      return failed("epsilon_sphere_barrier", e.what());
    }
  }
  if (name == "external-sphere") {
    Verdict v;
    v.name = "external_sphere";
    v.anchor = "mass inside a shrinking sphere initially free of mass";
    const auto series = external_sphere_monitor(tr, cfg.barrier_center, cfg.barrier_radius);
    const auto psi = external_barrier(cfg, d);
    const double c = 2.0 * std::max({psi.c3_norm(), psi.gradient_l2_norm(), 1.0});
    const double c7 = c * (10.0 * tr.config.mass_bound + 9.0);
    v.bound = c7 * std::pow(eps, 1.0 / 6.0);
    v.measured = std::max(0.0, max_over(series));
    v.pass = v.measured <= v.bound;
    v.details = {{"initial_mass_in_ball", series.front().value}};
    if (series.front().value > 0.0) {
      v.pass = false;
      v.note = "initial varifold charges the ball";
    }
    return v;
  }
  if (name == "internal-sphere") {
    const Vector& a = cfg.ball_center;
    double radius = 0.0;
    for (const auto& atom : tr.snapshots.front().varifold.atoms()) {
      radius = std::max(radius, (atom.position - a).norm());
    }
    Verdict v;
    v.name = "internal_sphere";
    v.anchor = "support stays inside the shrinking enclosing sphere up to eps";
    v.measured = max_over(internal_sphere_monitor(tr, a, radius));
    v.bound = eps;
    v.pass = v.measured <= v.bound;
    v.details = {{"radius", radius}};
    return v;
  }
  if (name == "convex-hull") {
    Verdict v;
    v.name = "convex_hull";
    v.anchor = "support stays near the initial convex hull";
    v.measured = std::max(0.0, max_over(convex_hull_monitor(tr)));
    v.bound = 2.0 * eps;
    v.pass = v.measured <= v.bound;
    return v;
  }
  if (name == "lsc") {
    const auto psi = external_barrier(cfg, d);
    ScalarField field = psi.as_field();
    const auto frozen = field;
    field.time_derivative = nullptr;
    field.value = [frozen](const Vector& x, double) { return frozen.value(x, 0.0); };
    field.gradient = [frozen](const Vector& x, double) { return frozen.gradient(x, 0.0); };
    field.hessian = [frozen](const Vector& x, double) { return frozen.hessian(x, 0.0); };
    return lsc_monitor(tr, field, std::nullopt, cfg.lsc_tol).verdict;
  }
  if (name == "volume-change") {
    if (!comp.mesh) return failed("volume_change", "component has no mesh");
    VolumeChangeOptions opts;
    opts.samples = cfg.mc_samples;
    opts.seed = cfg.seed;
    opts.region = std::max(1, region_at(*comp.mesh, cfg.ball_center));
    return volume_change_certificate(tr, *comp.mesh, cfg.ball_center, cfg.ball_radius, opts).verdict;
  }
  if (name == "nontriviality") {
    if (!comp.mesh) return failed("nontriviality", "component has no mesh");
    try {
      return nontriviality_certificate(tr, *comp.mesh, cfg.ball_center, cfg.ball_radius,
                                       {cfg.isoperimetric})
          .verdict;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::BallNotInterior) throw;
      return failed("nontriviality", e.what());
    }
  }
  if (name == "avoidance") {
    if (sim.components.size() < 2) return failed("avoidance", "needs two components");
    const auto series = avoidance_distance(tr, sim.components[1].trace);
    double drop = 0.0, peak = -std::numeric_limits<double>::infinity();
    for (const auto& p : series) {
      if (p.empty) continue;
      peak = std::max(peak, p.value);
      drop = std::max(drop, peak - p.value);
    }
    Verdict v;
    v.name = "avoidance";
    v.anchor = "distance between components does not shrink by more than 2 eps";
    v.measured = drop;
    v.bound = 2.0 * eps;
    v.pass = v.measured <= v.bound;
    v.details = {{"initial_distance", series.front().value},
                 {"final_distance", series.back().value}};
    if (cfg.preset == "enlaced-circles") {
      v.note = "linked components may touch; reported for information";
      v.pass = true;
    }
    return v;
  }
  fail(ErrorCode::InvalidArgument, "unknown certificate '" + name + "'");
}

std::vector<Verdict> run_checks(const Simulation& sim, const std::vector<std::string>& names) {
  std::vector<Verdict> out;
  out.reserve(names.size());
  for (const auto& name : names) out.push_back(run_certificate(sim, name));
  return out;
}

std::string verdicts_json(const std::vector<Verdict>& verdicts) {
  json arr = json::array();
  bool pass = true;
  for (const auto& v : verdicts) {
    arr.push_back(verdict_to_json(v));
    pass = pass && v.pass;
  }
  return json{{"pass", pass}, {"certificates", arr}}.dump(2);
}

std::string distance_json(const BLResult& r) {
  json support = json::array();
  for (const auto& p : r.support) support.push_back(std::vector<double>(p.data(), p.data() + p.size()));
  return json{{"distance", r.distance},
              {"support", support},
              {"test_values", r.test_values},
              {"dual_gap", r.dual_gap},
              {"augmentations", r.augmentations},
              {"status", r.status}}
      .dump(2);
}

std::string volume_json(const SurfaceMesh& mesh, const VolumeQuery& q) {
  json j;
  j["closed"] = is_closed(mesh);
  j["regions"] = mesh.region_count();
  j["total_measure"] = mesh.total_measure();
  json vols = json::array();
  for (int r = 1; r < mesh.region_count(); ++r) {
    json e = {{"region", r}};
    if (is_closed(mesh, r)) {
      e["volume"] = region_volume(mesh, r);
    } else {
      e["volume"] = nullptr;
      e["note"] = "open boundary";
    }
    if (q.center) {
      VolumeChangeOptions opts;
      opts.samples = q.samples;
      opts.seed = q.seed;
      opts.region = r;
      const auto [v, se] = clipped_volume(mesh, *q.center, q.radius, opts);
      e["clipped_volume"] = v;
      e["standard_error"] = se;
    }
    vols.push_back(e);
  }
  j["volumes"] = vols;
  return j.dump(2);
}

}  // namespace varflow
