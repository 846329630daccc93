// varflow: run eps-regularised Brakke flows of discrete varifolds and check
// certificates on the exported traces.
//
// Exit codes: 0 all certificates pass, 1 some certificate fails, 2 usage,
// configuration or input error. VARFLOW_THREADS sets the worker count.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "varflow/config.hpp"
#include "varflow/error.hpp"
#include "varflow/io.hpp"
#include "varflow/metrics.hpp"
#include "varflow/presets.hpp"
#include "varflow/runner.hpp"

namespace {

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kUsage = 2;

bool all_pass(const std::vector<varflow::Verdict>& verdicts) {
  for (const auto& v : verdicts) {
    if (!v.pass) return false;
  }
  return true;
}

std::vector<double> parse_point(const std::string& text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = text.find(',', pos);
    const auto piece = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    std::size_t used = 0;
    out.push_back(std::stod(piece, &used));
    if (used != piece.size()) throw std::invalid_argument("bad coordinate '" + piece + "'");
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete eps-regularised Brakke flows and their certificates"};
  app.set_version_flag("--version", varflow::version());
  app.require_subcommand(1);

  std::string config_path, preset, output;
  std::vector<std::string> certs;
  bool with_checks = false;
  auto* sim_cmd = app.add_subcommand("simulate", "Run a configured scenario and export frames");
  auto* cfg_opt = sim_cmd->add_option("config", config_path, "INI configuration file");
  sim_cmd->add_option("--preset", preset, "Preset name when no configuration file is given")
      ->excludes(cfg_opt);
  sim_cmd->add_option("-o,--output", output, "Output directory (overrides [run] output)");
  sim_cmd->add_flag("--check", with_checks, "Evaluate the default certificates after the run");

  std::string manifest;
  auto* check_cmd = app.add_subcommand("check", "Evaluate certificates on an exported trace");
  check_cmd->add_option("manifest", manifest, "trace.json or the directory holding it")->required();
  check_cmd->add_option("-c,--cert", certs, "Certificate name (repeatable; default: all applicable)");
  bool list = false;
  check_cmd->add_flag("--list", list, "Print the certificate names and exit");

  std::string measure_a, measure_b;
  bool frames = false;
  auto* dist_cmd = app.add_subcommand("distance", "Bounded-Lipschitz distance of two measures");
  dist_cmd->add_option("a", measure_a, "Measure CSV (x1..xn,w)")->required();
  dist_cmd->add_option("b", measure_b, "Measure CSV (x1..xn,w)")->required();
  dist_cmd->add_flag("--frames", frames, "Inputs are varifold frames; compare their mass measures");

  std::string mesh_path, center_text;
  varflow::VolumeQuery query;
  auto* vol_cmd = app.add_subcommand("volume", "Enclosed and clipped volumes of a mesh");
  vol_cmd->add_option("mesh", mesh_path, "OFF, OBJ or segment CSV")->required();
  vol_cmd->add_option("--center", center_text, "Ball centre x1,...,xn for clipped volumes");
  vol_cmd->add_option("--radius", query.radius, "Ball radius")->check(CLI::PositiveNumber);
  vol_cmd->add_option("--samples", query.samples, "Monte Carlo samples");
  vol_cmd->add_option("--seed", query.seed, "Monte Carlo seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kUsage;
  }

  try {
    if (*sim_cmd) {
      varflow::RunConfig cfg;
      if (!config_path.empty()) {
        cfg = varflow::load_config(config_path);
      } else {
        cfg = varflow::preset_config(preset.empty() ? "circle" : preset);
      }
      if (!output.empty()) cfg.output = output;
      const auto sim = varflow::simulate(cfg);
      std::vector<varflow::Verdict> verdicts;
      if (with_checks) verdicts = varflow::run_checks(sim, varflow::default_certificates(sim));
      const auto path = varflow::write_simulation(sim, cfg.output, verdicts);
      std::cerr << "wrote " << path.string() << " (" << sim.wall_seconds << " s)\n";
      if (with_checks) std::cout << varflow::verdicts_json(verdicts) << "\n";
      return all_pass(verdicts) ? kPass : kFail;
    }
    if (*check_cmd) {
      if (list) {
        for (const auto& n : varflow::certificate_names()) std::cout << n << "\n";
        return kPass;
      }
      std::filesystem::path p(manifest);
      if (std::filesystem::is_directory(p)) p /= "trace.json";
      const auto sim = varflow::load_simulation(p);
      if (certs.empty()) certs = varflow::default_certificates(sim);
      const auto verdicts = varflow::run_checks(sim, certs);
      std::cout << varflow::verdicts_json(verdicts) << "\n";
      return all_pass(verdicts) ? kPass : kFail;
    }
    if (*dist_cmd) {
      varflow::DiscreteMeasure a, b;
      if (frames) {
        a = varflow::mass_measure(varflow::read_varifold_csv(measure_a));
        b = varflow::mass_measure(varflow::read_varifold_csv(measure_b));
      } else {
        a = varflow::read_measure_csv(measure_a);
        b = varflow::read_measure_csv(measure_b);
      }
      std::cout << varflow::distance_json(varflow::bounded_lipschitz(a, b)) << "\n";
      return kPass;
    }
    if (*vol_cmd) {
      const auto mesh = varflow::read_mesh(mesh_path);
      if (!center_text.empty()) {
        const auto c = parse_point(center_text);
        if (static_cast<int>(c.size()) != mesh.n) {
          std::cerr << "error: --center has " << c.size() << " coordinates, mesh lives in R^"
                    << mesh.n << "\n";
          return kUsage;
        }
        query.center = Eigen::Map<const varflow::Vector>(c.data(), mesh.n);
      }
      std::cout << varflow::volume_json(mesh, query) << "\n";
      return kPass;
    }
  } catch (const varflow::Error& e) {
    std::cerr << "error [" << varflow::to_string(e.code()) << "]: " << e.what() << "\n";
    switch (e.code()) {
      case varflow::ErrorCode::ConfigError:
      case varflow::ErrorCode::InvalidArgument:
      case varflow::ErrorCode::IoError:
      case varflow::ErrorCode::MissingFrames:
      case varflow::ErrorCode::OpenMesh:
      case varflow::ErrorCode::DegenerateSimplex:
        return kUsage;
      default:
        return kFail;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
