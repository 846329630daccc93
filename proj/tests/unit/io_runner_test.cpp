#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "test_support.hpp"
#include "varflow/config.hpp"
#include "varflow/io.hpp"
#include "varflow/presets.hpp"
#include "varflow/runner.hpp"

namespace {

using namespace varflow;
using testing_support::error_code;
using testing_support::vec;
namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = fs::temp_directory_path() / (std::string("varflow_") + info->test_suite_name() + "_" + info->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

TEST(Io, FormatDoubleRoundTrips) {
  for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23}) {
    EXPECT_EQ(std::stod(format_double(x)), x);
  }
}

TEST(Io, VarifoldCsvRoundTripIsExact) {
  TempDir dir;
  const auto v = testing_support::random_varifold(5, 40, 3, 2, 1.0);
  write_varifold_csv(dir.path() / "f.csv", v);
  EXPECT_TRUE(fs::exists(dir.path() / "f.csv.json"));
  const auto w = read_varifold_csv(dir.path() / "f.csv");
  ASSERT_EQ(w.size(), v.size());
  EXPECT_EQ(w.ambient_dim(), 3);
  EXPECT_EQ(w.dim(), 2);
  for (std::size_t i = 0; i < v.size(); ++i) {
    EXPECT_EQ(w.atoms()[i].position, v.atoms()[i].position);
    EXPECT_EQ(w.atoms()[i].mass, v.atoms()[i].mass);
    EXPECT_EQ(w.atoms()[i].plane.projection(), v.atoms()[i].plane.projection());
  }
  // Without the sidecar the plane dimension comes from the trace.
  fs::remove(dir.path() / "f.csv.json");
  EXPECT_EQ(read_varifold_csv(dir.path() / "f.csv").dim(), 2);
  EXPECT_EQ(error_code([&] { read_varifold_csv(dir.path() / "missing.csv"); }), ErrorCode::IoError);
}

TEST(Io, MeasureAndPoints) {
  TempDir dir;
  DiscreteMeasure m;
  m.add(vec({0.1, 0.2}), 0.3);
  m.add(vec({-1.0, 4.0}), 2.0);
  write_measure_csv(dir.path() / "m.csv", m);
  const auto r = read_measure_csv(dir.path() / "m.csv");
  ASSERT_EQ(r.points.size(), 2u);
  EXPECT_EQ(r.points[1], vec({-1.0, 4.0}));
  EXPECT_EQ(r.weights[0], 0.3);
  const std::vector<Vector> pts = {vec({1, 2, 3}), vec({0.5, -0.25, 1e-9})};
  write_points_csv(dir.path() / "p.csv", pts);
  EXPECT_EQ(read_points_csv(dir.path() / "p.csv"), pts);
}

TEST(Io, MeshReaders) {
  std::istringstream off("OFF\n4 4 0\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n3 0 2 1\n3 0 1 3\n3 0 3 2\n3 1 2 3\n");
  const auto tet = read_off(off);
  std::istringstream inline_counts("OFF 4 4 0\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n3 0 2 1\n3 0 1 3\n3 0 3 2\n3 1 2 3\n");
  EXPECT_EQ(read_off(inline_counts).simplex_count(), 4u);
  EXPECT_EQ(tet.n, 3);
  EXPECT_TRUE(is_closed(tet));
  EXPECT_NEAR(std::abs(enclosed_volume(tet)), 1.0 / 6.0, 1e-14);
  std::istringstream obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nf 1 3 2\nf 1 2 4\nf 1 4 3\nf 2 3 4\n");
  EXPECT_NEAR(enclosed_volume(read_obj(obj)), enclosed_volume(tet), 1e-14);
  std::istringstream loop("x,y\n0,0\n1,0\n1,1\n0,1\n");
  const auto sq = read_segment_csv(loop);
  EXPECT_EQ(sq.simplex_count(), 4u);
  EXPECT_NEAR(std::abs(enclosed_volume(sq)), 1.0, 1e-14);
}

TEST(Io, MeshTopologyRoundTrip) {
  TempDir dir;
  const auto m = split_square(2.0, vec({0.0, 0.0}), 4);
  write_mesh_topology(dir.path() / "mesh.json", m);
  const auto t = read_mesh_topology(dir.path() / "mesh.json");
  EXPECT_EQ(t.n, m.n);
  EXPECT_EQ(t.simplices, m.simplices);
  EXPECT_EQ(t.regions, m.regions);
}

TEST(Config, DefaultsAndOverrides) {
  const auto c = parse_config("[run]\npreset = circle\nseed = 9\n[flow]\neps = 0.2\ndt = 0.01\n");
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.flow.eps, 0.2);
  EXPECT_EQ(c.dt, 0.01);
  EXPECT_EQ(c.preset, "circle");
}

TEST(Config, ErrorsNameLineAndKey) {
  try {
    parse_config("[run]\npreset = circle\n[flow]\nepsilon = 0.1\n", "cfg.ini");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigError);
    const std::string msg = e.what();
    EXPECT_NE(msg.find("cfg.ini:4"), std::string::npos) << msg;
    EXPECT_NE(msg.find("epsilon"), std::string::npos) << msg;
  }
  EXPECT_EQ(error_code([] { parse_config("[flow]\neps = abc\n"); }), ErrorCode::ConfigError);
  EXPECT_EQ(error_code([] { parse_config("[run]\npreset = nope\n"); }), ErrorCode::ConfigError);
  EXPECT_EQ(error_code([] { load_config("/nonexistent/varflow.ini"); }), ErrorCode::ConfigError);
}

TEST(Config, IniRoundTrip) {
  for (const auto& name : preset_names()) {
    auto c = preset_config(name);
    c.seed = 42;
    c.flow.eps = 0.1234567890123;
    c.c6 = 2.5;
    const auto back = parse_config(to_ini(c));
    EXPECT_EQ(to_ini(back), to_ini(c)) << name;
    EXPECT_EQ(back.flow.eps, c.flow.eps);
    EXPECT_EQ(back.ball_center, c.ball_center);
  }
}

TEST(Config, ModeNames) {
  for (auto m : {FlowMode::Interpolated, FlowMode::Piecewise}) {
    EXPECT_EQ(parse_mode(to_string(m)), m);
  }
  EXPECT_THROW(parse_mode("sideways"), std::invalid_argument);
  EXPECT_EQ(error_code([] { parse_config("[flow]\nmode = sideways\n"); }), ErrorCode::ConfigError);
}

RunConfig tiny_circle(double end_time) {
  auto c = preset_config("circle");
  c.atoms = 48;
  c.flow.eps = 0.2;
  c.dt = 5e-3;
  c.end_time = end_time;
  c.mc_samples = 2000;
  c.lemma_samples = 2000;
  return c;
}

TEST(Runner, ZeroStepsGiveOneSnapshot) {
  const auto sim = simulate(tiny_circle(0.0));
  ASSERT_EQ(sim.components.size(), 1u);
  EXPECT_EQ(sim.components[0].trace.snapshots.size(), 1u);
  EXPECT_TRUE(sim.components[0].trace.steps.empty());
}

TEST(Runner, WriteLoadAndCheck) {
  TempDir dir;
  const auto sim = simulate(tiny_circle(0.02));
  const auto manifest = write_simulation(sim, dir.path());
  EXPECT_EQ(manifest, dir.path() / "trace.json");
  const auto loaded = load_simulation(manifest);
  ASSERT_EQ(loaded.components.size(), 1u);
  const auto& a = sim.components[0].trace;
  const auto& b = loaded.components[0].trace;
  ASSERT_EQ(a.snapshots.size(), b.snapshots.size());
  for (std::size_t i = 0; i < a.snapshots.size(); ++i) {
    EXPECT_EQ(a.snapshots[i].time, b.snapshots[i].time);
    EXPECT_EQ(a.snapshots[i].varifold.atoms()[3].position, b.snapshots[i].varifold.atoms()[3].position);
  }
  const auto v = run_certificate(loaded, "mass-decay");
  EXPECT_TRUE(v.pass);
  EXPECT_EQ(v.name, "mass_decay");
  EXPECT_EQ(error_code([&] { run_certificate(loaded, "no-such-check"); }), ErrorCode::InvalidArgument);

  const auto json = nlohmann::json::parse(verdicts_json({v}));
  EXPECT_EQ(json["pass"], true);
  ASSERT_EQ(json["certificates"].size(), 1u);
  EXPECT_EQ(json["certificates"][0]["name"], "mass_decay");
}

TEST(Runner, MissingFrameIsReported) {
  TempDir dir;
  const auto sim = simulate(tiny_circle(0.01));
  const auto manifest = write_simulation(sim, dir.path());
  fs::remove(dir.path() / "circle" / "frame_00001.csv");
  EXPECT_EQ(error_code([&] { load_simulation(manifest); }), ErrorCode::MissingFrames);
}

TEST(Runner, EditedTraceFailsBarrierCheck) {
  TempDir dir;
  auto cfg = tiny_circle(0.01);
  cfg.dt = 1e-6;
  cfg.end_time = 2e-6;
  cfg.flow.gate_constant = 1e-9;
  cfg.eps0 = 1.0;
  const auto sim = simulate(cfg);
  const auto manifest = write_simulation(sim, dir.path());
  EXPECT_TRUE(run_certificate(load_simulation(manifest), "eps-sphere-barrier").pass);
  // Teleport a heavy atom into the barrier ball in the last frame.
  const auto frame = dir.path() / "circle" / "frame_00002.csv";
  auto v = read_varifold_csv(frame);
  v.add(cfg.barrier_center, GrassmannElement::coordinate(2, 1), 5e6);
  write_varifold_csv(frame, v);
  const auto bad = run_certificate(load_simulation(manifest), "eps-sphere-barrier");
  EXPECT_FALSE(bad.pass);
  EXPECT_GT(bad.measured, bad.bound);
}

TEST(Runner, DistanceJson) {
  DiscreteMeasure mu, nu;
  mu.add(vec({0.0}), 1.0);
  nu.add(vec({0.5}), 1.0);
  const auto r = bounded_lipschitz(mu, nu);
  const auto j = nlohmann::json::parse(distance_json(r));
  EXPECT_NEAR(j["distance"].get<double>(), 0.5, 1e-9);
  EXPECT_EQ(j["status"], "optimal");
  EXPECT_EQ(j["support"].size(), 2u);
}

TEST(Runner, VolumeJson) {
  const auto j = nlohmann::json::parse(volume_json(axis_square(1.0, vec({0.0, 0.0})), {}));
  EXPECT_EQ(j["closed"], true);
  EXPECT_EQ(j["regions"], 2);
}

TEST(Runner, CertificateSelection) {
  const auto names = certificate_names();
  EXPECT_EQ(names.size(), 12u);
  const auto sim = simulate(tiny_circle(0.0));
  const auto defaults = default_certificates(sim);
  EXPECT_EQ(std::count(defaults.begin(), defaults.end(), "avoidance"), 0);
  EXPECT_EQ(std::count(defaults.begin(), defaults.end(), "volume-change"), 1);
}

}  // namespace
