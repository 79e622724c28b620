// Command-line frontend for the ionprobe library: simulation, fitting, and
// detectability reports for laser-induced surface-charging experiments in a
// surface ion trap.

#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ionprobe/ionprobe.hpp"

namespace {

constexpr int kExitSuccess = 0;
constexpr int kExitInputError = 2;
constexpr int kExitIoError = 3;
constexpr int kExitNoConvergence = 4;

int classify(const std::exception& e) {
  if (dynamic_cast<const ionprobe::io_error*>(&e)) return kExitIoError;
  if (dynamic_cast<const ionprobe::convergence_error*>(&e)) return kExitNoConvergence;
  if (dynamic_cast<const ionprobe::conditioning_error*>(&e)) return kExitNoConvergence;
  return kExitInputError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"surface-charging probe toolkit: simulate ion-string displacement traces,\n"
               "fit charging kinetics, and report field/force detectability"};
  app.require_subcommand(1);

  std::string config_path, data_path, out_path, model;

  CLI::App* simulate = app.add_subcommand(
      "simulate", "synthesize a displacement time series from a config");
  simulate->add_option("-c,--config", config_path, "experiment config file")->required();
  simulate->add_option("-o,--out", out_path, "output CSV path")->required();

  CLI::App* fit_ts = app.add_subcommand(
      "fit-timeseries", "fit charging kinetics to a displacement time series");
  fit_ts->add_option("-c,--config", config_path, "experiment config file")->required();
  fit_ts->add_option("-d,--data", data_path, "input time-series CSV")->required();
  fit_ts->add_option("-m,--model", model,
                     "glass | single | two-process | both (default: by setup.source)");
  fit_ts->add_option("-o,--out", out_path, "result doc path (also printed)");

  CLI::App* fit_map = app.add_subcommand(
      "fit-velocity-map", "fit a charging-rate kernel to an initial-velocity map");
  fit_map->add_option("-c,--config", config_path, "experiment config file")->required();
  fit_map->add_option("-d,--data", data_path, "input velocity-map CSV")->required();
  fit_map->add_option("-m,--model", model, "dipole | monopole (default: by setup.source)");
  fit_map->add_option("-o,--out", out_path, "result doc path (also printed)");

  CLI::App* field_map = app.add_subcommand(
      "field-map", "tabulate the axial field of the configured source vs beam offset");
  field_map->add_option("-c,--config", config_path, "experiment config file")->required();
  field_map->add_option("-o,--out", out_path, "output CSV path")->required();

  CLI::App* sens = app.add_subcommand(
      "sensitivity", "report field/force sensitivity and the minimum detectable charge");
  sens->add_option("-c,--config", config_path, "experiment config file")->required();
  sens->add_option("-o,--out", out_path, "also write the report to this path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitSuccess : kExitInputError;
  }

  try {
    const ionprobe::RunConfig config = ionprobe::load_run_config(config_path);
    if (simulate->parsed()) {
      ionprobe::cli::run_simulate(config, out_path);
    } else if (fit_ts->parsed()) {
      const ionprobe::cli::FitCommandOutput output =
          ionprobe::cli::run_fit_timeseries(config, data_path, model, out_path);
      std::cout << output.doc;
      if (!output.result.converged) {
        std::cerr << "fit did not converge within the iteration limit\n";
        return kExitNoConvergence;
      }
    } else if (fit_map->parsed()) {
      const ionprobe::cli::FitCommandOutput output =
          ionprobe::cli::run_fit_velocity_map(config, data_path, model, out_path);
      std::cout << output.doc;
      if (!output.result.converged) {
        std::cerr << "fit did not converge within the iteration limit\n";
        return kExitNoConvergence;
      }
    } else if (field_map->parsed()) {
      ionprobe::cli::run_field_map(config, out_path);
    } else if (sens->parsed()) {
      const std::string report = ionprobe::cli::sensitivity_report_text(config);
      std::cout << report;
      if (!out_path.empty()) ionprobe::cli::write_text_file(out_path, report);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return classify(e);
  }
  return kExitSuccess;
}
