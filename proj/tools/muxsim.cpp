// muxsim command-line front end.
//
//   muxsim model|simulate|fit|car|spectra --scenario <file> --out <dir> [--seed N] [--cycles N]
//
// On failure a single JSON line {"error": kind, "message": ..., ["line": n]} goes to stderr.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "muxsim/commands.hpp"

namespace {

int report_error(const char* kind, const std::string& message, std::optional<std::size_t> line = std::nullopt) {
  nlohmann::json j{{"error", kind}, {"message", message}};
  if (line) j["line"] = *line;
  std::cerr << j.dump() << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporally multiplexed heralded single-photon source models and simulation"};
  app.require_subcommand(1, 1);

  std::string scenario_path, out_dir, observations, model = "pass1", spectra_dir;
  std::optional<std::uint64_t> seed, cycles;
  std::optional<double> fixed_f;
  bool trace = false;

  auto common = [&](CLI::App* c, bool with_sim) {
    c->add_option("--scenario", scenario_path, "scenario JSON (default: built-in reference apparatus)")
        ->check(CLI::ExistingFile);
    c->add_option("--out", out_dir, "output directory (default: scenario output_dir)");
    if (with_sim) {
      c->add_option("--seed", seed, "random seed override");
      c->add_option("--cycles", cycles, "clock cycles override");
    }
  };
  auto* cmd_model = app.add_subcommand("model", "rates vs pump power, emission tradeoff, trigger enhancement");
  common(cmd_model, false);
  auto* cmd_sim = app.add_subcommand("simulate", "pulse-train simulation compared with the analytic model");
  common(cmd_sim, true);
  cmd_sim->add_flag("--trace", trace, "write the per-cycle trace");
  auto* cmd_fit = app.add_subcommand("fit", "fit source parameters to observed rates");
  common(cmd_fit, false);
  cmd_fit->add_option("--seed", seed, "seed of the multi-start design");
  cmd_fit->add_option("--observations", observations, "CSV: [source,]power_mw,r_trig,r_c,r_a")->required();
  cmd_fit->add_option("--model", model, "pass1 or pass2")->check(CLI::IsMember({"pass1", "pass2"}));
  cmd_fit->add_option("--back-reflection", fixed_f, "hold f fixed (pass2 only)");
  auto* cmd_car = app.add_subcommand("car", "coincidence rate vs CAR and matched-CAR enhancement");
  common(cmd_car, false);
  auto* cmd_spec = app.add_subcommand("spectra", "Gaussian fits and pairwise overlap of spectra");
  common(cmd_spec, false);
  cmd_spec->add_option("--spectra", spectra_dir, "directory of wavelength_nm,counts CSV files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return report_error("usage", e.what()) + 1;
  }

  using namespace muxsim;
  try {
    const Scenario sc = scenario_path.empty() ? default_scenario() : load_scenario(scenario_path);
    validate(sc);
    if (out_dir.empty()) {
      if (!sc.output_dir) throw config_error("no output directory: pass --out or set output_dir in the scenario");
      out_dir = *sc.output_dir;
    }

    Files files;
    if (cmd_model->parsed()) {
      files = muxsim::cmd_model(sc, out_dir);
    } else if (cmd_sim->parsed()) {
      SimulateOptions o;
      o.seed = seed;
      o.cycles = cycles;
      if (trace) o.write_trace = true;
      files = muxsim::cmd_simulate(sc, out_dir, o, nullptr, &std::cout);
    } else if (cmd_fit->parsed()) {
      FitCommandOptions o;
      o.kind = model == "pass2" ? ModelKind::pass2 : ModelKind::pass1;
      o.fixed_back_reflection = fixed_f;
      o.seed = seed;
      files = muxsim::cmd_fit(observations, sc, out_dir, o);
    } else if (cmd_car->parsed()) {
      files = muxsim::cmd_car(sc, out_dir);
    } else if (cmd_spec->parsed()) {
      files = muxsim::cmd_spectra(spectra_dir, out_dir);
    }
    for (const auto& f : files) std::cout << "wrote " << f.string() << "\n";
    return 0;
  } catch (const parse_error& e) {
    return report_error("parse_error", e.what(), e.line());
  } catch (const config_error& e) {
    return report_error("config_error", e.what());
  } catch (const domain_error& e) {
    return report_error("domain_error", e.what());
  } catch (const saturation_error& e) {
    return report_error("saturation_error", e.what());
  } catch (const fit_error& e) {
    return report_error("fit_error", e.what());
  } catch (const std::exception& e) {
    return report_error("io_error", e.what());
  }
}
