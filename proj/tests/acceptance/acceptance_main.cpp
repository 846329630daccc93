// Acceptance run: one PASS/FAIL line per criterion, exit status 1 when any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "varflow/barriers.hpp"
#include "varflow/error.hpp"
#include "varflow/flow.hpp"
#include "varflow/io.hpp"
#include "varflow/metrics.hpp"
#include "varflow/parallel.hpp"
#include "varflow/presets.hpp"
#include "varflow/random.hpp"
#include "varflow/runner.hpp"

namespace {

using namespace varflow;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("varflow_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// Simulations shared between criteria, keyed by preset and eps.
struct Cached {
  Simulation sim;
  double seconds = 0.0;
};
std::map<std::string, Cached> g_runs;

const Cached& cached_run(const std::string& preset, std::optional<double> eps = std::nullopt) {
  const std::string key = preset + (eps ? "@" + fmt(*eps) : "");
  auto it = g_runs.find(key);
  if (it != g_runs.end()) return it->second;
  auto cfg = preset_config(preset);
  if (eps) cfg.flow.eps = *eps;
  const auto t0 = Clock::now();
  Cached c{simulate(cfg), 0.0};
  c.seconds = seconds_since(t0);
  return g_runs.emplace(key, std::move(c)).first->second;
}

double mean_radius(const DiscreteVarifold& v) {
  double s = 0.0;
  for (const auto& a : v.atoms()) s += a.position.norm();
  return v.size() ? s / static_cast<double>(v.size()) : 0.0;
}

Outcome shrinking_circle() {
  const double target = std::sqrt(1.0 - 2.0 * 0.3);
  std::vector<double> errors;
  std::ostringstream d;
  bool ok = true;
  for (double eps : {0.2, 0.1, 0.05}) {
    const auto& run = cached_run("circle", eps);
    const auto& tr = run.sim.components.front().trace;
    ok = ok && tr.config.gate_holds() && std::abs(tr.snapshots.back().time - 0.3) < 1e-9 &&
         run.seconds <= 120.0;
    const double err = std::abs(mean_radius(tr.snapshots.back().varifold) - target) / target;
    errors.push_back(err);
    d << "eps=" << eps << " rel.err=" << fmt(err) << " (" << fmt(run.seconds) << " s) ";
  }
  ok = ok && errors[0] > errors[1] && errors[1] > errors[2] && errors[2] <= 0.08;
  return {ok, d.str()};
}

Outcome dissipation_identity() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CounterRng rng(seed, 77);
    const int count = 5 + static_cast<int>(rng.uniform() * 46.0);
    DiscreteVarifold v(2, 1);
    for (int i = 0; i < count; ++i) {
      v.add(0.4 * gaussian_vector(rng, 2), random_plane(rng, 2, 1), 0.05 + rng.uniform());
    }
    const FlowConfig cfg;
    const KernelField field(v, cfg.kernel(2));
    const auto lattice = field.lattice(field.domain_grid(cfg.refinement));
    double first_variation = 0.0;
    for (const auto& a : v.atoms()) {
      first_variation += a.mass * tangential_divergence(a.plane, field.curvature(a.position, lattice).grad);
    }
    worst = std::max(worst, std::abs(first_variation + lattice.dissipation) /
                                (1e-3 * std::max(1.0, lattice.dissipation)));
  }
  return {worst <= 1.0, "worst |dV(h)+D| / (1e-3 max(1,D)) = " + fmt(worst)};
}

Outcome technical_lemma() {
  double gap = std::numeric_limits<double>::infinity();
  for (auto [n, d] : {std::pair{2, 1}, {3, 1}, {3, 2}}) {
    gap = std::min(gap, technical_lemma_sweep(100000, 11, n, d));
  }
  return {gap >= -1e-12, "min gap " + fmt(gap) + " over 3 x 1e5 samples"};
}

Outcome defect_sweep() {
  const BarrierFunction good(Vector::Zero(2), 0.3, 1, 4.0);
  const BarrierFunction bad(Vector::Zero(2), 0.3, 1, 1.0);
  const auto ok = barrier_defect_sweep(good, 64, 50, 5);
  const auto neg = barrier_defect_sweep(bad, 64, 50, 5);
  return {ok.max_defect <= 1e-10 && neg.max_defect > 0.0,
          "beta=4 max " + fmt(ok.max_defect) + " over " + std::to_string(ok.evaluations) +
              " evaluations; beta=1 max " + fmt(neg.max_defect)};
}

Outcome epsilon_barrier() {
  const auto& run = cached_run("circle", 0.05);
  const auto v = run_certificate(run.sim, "eps-sphere-barrier");
  // Negative control: a heavy atom written on disk into the barrier ball at
  // t = 0.01, while the shrinking ball still has positive radius.
  const auto dir = scratch("barrier");
  const auto manifest = write_simulation(run.sim, dir);
  const auto& tr = run.sim.components.front().trace;
  std::size_t edit = 0;
  while (edit + 1 < tr.snapshots.size() && tr.snapshots[edit].time < 0.01) ++edit;
  char frame[32];
  std::snprintf(frame, sizeof frame, "frame_%05zu.csv", edit);
  const auto path = dir / run.sim.components.front().name / frame;
  auto edited = read_varifold_csv(path);
  edited.add(run.sim.config.barrier_center, GrassmannElement::coordinate(2, 1), 5e7);
  write_varifold_csv(path, edited);
  const auto neg = run_certificate(load_simulation(manifest), "eps-sphere-barrier");
  fs::remove_all(dir);
  return {v.pass && !neg.pass, "increase " + fmt(v.measured) + " <= c7 eps^(1/6) = " + fmt(v.bound) +
                                   "; edited trace " + fmt(neg.measured) + (neg.pass ? " passed" : " rejected")};
}

Outcome mass_bound() {
  std::ostringstream d;
  bool ok = true;
  for (const auto& name : preset_names()) {
    const auto& run = cached_run(name);
    const auto v = run_certificate(run.sim, "mass-decay");
    ok = ok && v.pass;
    d << name << "=" << fmt(v.measured) << " ";
  }
  return {ok, "max(m_{i+1} - m_i - dt): " + d.str()};
}

Outcome volume_change() {
  const auto& run = cached_run("circle");
  const auto t0 = Clock::now();
  const auto v = run_certificate(run.sim, "volume-change");
  const double secs = seconds_since(t0);
  return {v.pass && run.sim.config.mc_samples >= 100000 && secs <= 180.0,
          "worst step " + fmt(v.measured) + " vs c8 delta + 3 SE = " + fmt(v.bound) + " (" + fmt(secs) + " s)"};
}

Outcome nontriviality() {
  const auto& run = cached_run("circle", 0.05);
  const auto v = run_certificate(run.sim, "nontriviality");
  double t0 = 0.0;
  for (const auto& [k, x] : v.details) {
    if (k == "t0") t0 = x;
  }
  return {v.pass && std::abs(t0 - 0.08) < 1e-12,
          "min mass " + fmt(v.measured) + " >= " + fmt(v.bound) + " on [0, " + fmt(t0) + "]"};
}

Outcome avoidance() {
  const auto& concentric = cached_run("two-concentric-circles");
  const auto v = run_certificate(concentric.sim, "avoidance");
  const auto& enlaced = cached_run("enlaced-circles");
  const auto series =
      avoidance_distance(enlaced.sim.components[0].trace, enlaced.sim.components[1].trace);
  double closest = std::numeric_limits<double>::infinity();
  for (const auto& p : series) {
    if (!p.empty) closest = std::min(closest, p.value);
  }
  return {v.pass && series.size() > 1 && concentric.seconds + enlaced.seconds <= 180.0,
          "concentric drop " + fmt(v.measured) + " <= 2 eps = " + fmt(v.bound) + "; enlaced " +
              std::to_string(series.size()) + " frames, closest gap " + fmt(closest)};
}

Outcome bounded_lipschitz_exact() {
  bool ok = true;
  std::ostringstream d;
  for (auto [dist, expect] : {std::pair{0.5, 0.5}, {1.0, 1.0}, {5.0, 2.0}}) {
    DiscreteMeasure mu, nu;
    mu.add(Vector::Zero(2), 1.0);
    Vector q = Vector::Zero(2);
    q[0] = dist;
    nu.add(q, 1.0);
    const double got = bounded_lipschitz(mu, nu).distance;
    ok = ok && std::abs(got - expect) <= 1e-9;
    d << dist << "->" << fmt(got) << " ";
  }
  double worst = -std::numeric_limits<double>::infinity();
  for (std::uint64_t s = 0; s < 100; ++s) {
    std::vector<DiscreteMeasure> m(3);
    for (std::size_t k = 0; k < 3; ++k) {
      CounterRng rng(s, k);
      const int count = 1 + static_cast<int>(rng.uniform() * 8.0);
      for (int i = 0; i < count; ++i) m[k].add(gaussian_vector(rng, 2), 0.1 + rng.uniform());
    }
    const double ab = bounded_lipschitz(m[0], m[1]).distance;
    const double bc = bounded_lipschitz(m[1], m[2]).distance;
    const double ac = bounded_lipschitz(m[0], m[2]).distance;
    worst = std::max(worst, ac - ab - bc);
  }
  ok = ok && worst <= 1e-8;
  return {ok, d.str() + "; worst triangle excess " + fmt(worst)};
}

FlowConfig order_config(double dt) {
  FlowConfig cfg;
  cfg.eps = 0.2;
  cfg.mass_bound = 7.0;
  cfg.gate_constant = 1e-9;
  cfg.subdivision = Subdivision::uniform(0.04, dt);
  return cfg;
}

Outcome convergence_orders() {
  const auto circle = circle_varifold(48, 1.0, Vector::Zero(2));
  // A round circle has a vanishing constant-phi residual, so the residual uses an ellipse.
  Matrix a(2, 2);
  a << 1.3, 0.0, 0.0, 0.8;
  VectorField stretch;
  stretch.value = [a](const Vector& x) { return Vector(a * x); };
  stretch.jacobian = [a](const Vector&) { return a; };
  const auto ellipse = pushforward(circle, stretch);

  std::map<double, FlowTrace> circle_runs, ellipse_runs;
  for (double dt : {4e-3, 2e-3, 1e-3}) {
    circle_runs.emplace(dt, run(circle, order_config(dt)));
    ellipse_runs.emplace(dt, run(ellipse, order_config(dt)));
  }
  auto gap = [&](double dt) {
    const auto& tr = circle_runs.at(dt);
    double worst = 0.0;
    for (std::size_t i = 0; i + 1 < tr.snapshots.size(); ++i) {
      const double t = 0.5 * (tr.snapshots[i].time + tr.snapshots[i + 1].time);
      worst = std::max(worst, bounded_lipschitz(mass_measure(sample(tr, t, FlowMode::Piecewise)),
                                                mass_measure(sample(tr, t, FlowMode::Interpolated)))
                                  .distance);
    }
    return worst;
  };
  const auto one = ScalarField::constant(2, 1.0);
  auto residual = [&](double dt) { return brakke_residual(ellipse_runs.at(dt), one, 0.0, 0.04); };
  auto terminal = [&](double dt) {
    return stability_certificate(circle_runs.at(dt), circle_runs.at(dt / 2.0), 0.04).measured;
  };
  const double r1 = gap(4e-3) / gap(2e-3);
  const double r2 = residual(4e-3) / residual(2e-3);
  const double r3 = terminal(4e-3) / terminal(2e-3);
  auto in_band = [](double r) { return r >= 1.5 && r <= 3.0; };
  return {in_band(r1) && in_band(r2) && in_band(r3),
          "ratios: interpolation gap " + fmt(r1) + ", Brakke residual " + fmt(r2) + ", two-run distance " +
              fmt(r3)};
}

std::vector<std::string> frame_bytes(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().filename() != "trace.json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<std::string> out;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    out.push_back(f.lexically_relative(dir).string() + "\n" +
                  std::string(std::istreambuf_iterator<char>(in), {}));
  }
  return out;
}

Outcome determinism() {
  const unsigned saved = thread_count();
  const unsigned max_threads = std::max(1u, std::thread::hardware_concurrency());
  std::vector<std::vector<std::string>> outputs;
  std::size_t files = 0;
  for (unsigned threads : {1u, 2u, max_threads}) {
    set_thread_count(threads);
    std::vector<std::string> all;
    for (const std::string preset : {"circle", "two-region-partition"}) {
      auto cfg = preset_config(preset);
      cfg.seed = 7;
      cfg.end_time = 0.02;
      cfg.sync_subdivision();
      const auto dir = scratch("det_" + preset + "_" + std::to_string(threads));
      write_simulation(simulate(cfg), dir);
      for (auto& s : frame_bytes(dir)) all.push_back(std::move(s));
      fs::remove_all(dir);
    }
    files = all.size();
    outputs.push_back(std::move(all));
  }
  set_thread_count(saved);
  const bool same = outputs[0] == outputs[1] && outputs[0] == outputs[2];
  return {same && files > 0, std::to_string(files) + " files compared at 1, 2 and " +
                                 std::to_string(max_threads) + " threads" + (same ? "" : ": outputs differ")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"shrinking-circle law", shrinking_circle},
      {"dissipation identity", dissipation_identity},
      {"technical lemma", technical_lemma},
      {"barrier defect", defect_sweep},
      {"eps-sphere barrier certificate", epsilon_barrier},
      {"per-step mass bound", mass_bound},
      {"volume-change certificate", volume_change},
      {"nontriviality", nontriviality},
      {"avoidance trend", avoidance},
      {"bounded-Lipschitz exactness", bounded_lipschitz_exact},
      {"convergence orders", convergence_orders},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s %2zu %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
