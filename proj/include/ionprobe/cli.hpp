#pragma once

#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ionprobe/config.hpp"
#include "ionprobe/csv.hpp"
#include "ionprobe/electrostatics.hpp"
#include "ionprobe/errors.hpp"
#include "ionprobe/estimation.hpp"
#include "ionprobe/forward.hpp"

namespace ionprobe::cli {

/// Parameter names map to result-doc keys with an explicit unit suffix:
/// amplitudes are reported in micrometers, rates in 1/s.
inline std::pair<std::string, double> doc_entry(const std::string& name, double value) {
  if (name.find("amplitude") != std::string::npos) return {name + "_um", value * 1e6};
  if (name.find("gamma") != std::string::npos) return {name + "_per_s", value};
  return {name, value};
}

inline std::string fit_result_doc(const FitResult& result, const std::string& model_name) {
  const bool is_map =
      result.kind == FitKind::velocity_map_dipole || result.kind == FitKind::velocity_map_monopole;
  std::ostringstream out;
  out << "model = " << model_name << '\n';
  out << "converged = " << (result.converged ? "true" : "false") << '\n';
  out << "iterations = " << result.iterations << '\n';
  if (model_name == "two-process")
    out << "degenerate_rates = " << (result.degenerate_rates ? "true" : "false") << '\n';
  if (is_map)
    out << "residual_rms_um_per_s = " << detail::format_g(result.residual_rms * 1e6) << '\n';
  else
    out << "residual_rms_um = " << detail::format_g(result.residual_rms * 1e6) << '\n';
  for (std::size_t j = 0; j < result.parameters.size(); ++j) {
    const auto [key, value] = doc_entry(result.parameters[j].first, result.parameters[j].second);
    out << "param." << key << " = " << detail::format_g(value) << '\n';
    const auto [ekey, evalue] =
        doc_entry(result.standard_error_proxy[j].first, result.standard_error_proxy[j].second);
    out << "stderr." << ekey << " = " << detail::format_g(evalue) << '\n';
  }
  for (const auto& [name, value] : result.fixed) {
    const auto [key, scaled] = doc_entry(name, value);
    out << "fixed." << key << " = " << detail::format_g(scaled) << '\n';
  }
  for (const auto& [key, value] : result.derived)
    out << "derived." << key << " = " << detail::format_g(value) << '\n';
  return out.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open for writing: " + path);
  out << text;
  if (!out) throw io_error("write failed: " + path);
}

inline TimeSeries simulate_timeseries(const RunConfig& config,
                                      const PhysicalConstants& pc = codata2018) {
  if (config.schedule.segments.empty())
    throw config_error("simulate: the config defines no schedule segments");
  if (!config.seed) throw config_error("simulate: missing required key 'seed'");
  const bool use_electrode = config.setup.source_kind != SourceKind::glass;
  const bool use_glass = config.setup.source_kind != SourceKind::electrode;
  MultiProcessParams electrode;
  if (use_electrode) {
    if (!config.electrode1)
      throw config_error("simulate: electrode source requires kinetics.electrode1.*");
    std::vector<ChargingParams> processes = {*config.electrode1};
    if (config.electrode2) processes.push_back(*config.electrode2);
    electrode = MultiProcessParams::make(processes);
  }
  if (use_glass && !config.glass_kinetics)
    throw config_error("simulate: glass source requires kinetics.glass.*");
  const double sigma = default_noise_sigma(config.noise_reference_sigma, config.cadence,
                                           config.setup.trap.ion_count);
  return synthesize_timeseries(config.setup, electrode, config.glass_kinetics, config.schedule,
                               config.cadence, sigma, *config.seed, pc);
}

inline void run_simulate(const RunConfig& config, const std::string& out_path) {
  write_timeseries_csv(out_path, simulate_timeseries(config));
}

struct FitCommandOutput {
  FitResult result;
  std::string model;
  std::string doc;
};

/// model: glass | single | two-process | both, or empty to pick by source.
inline FitCommandOutput run_fit_timeseries(const RunConfig& config, const std::string& data_path,
                                           std::string model, const std::string& out_path,
                                           const PhysicalConstants& pc = codata2018) {
  if (config.schedule.segments.empty())
    throw config_error("fit-timeseries: the config defines no schedule segments");
  if (model.empty()) {
    switch (config.setup.source_kind) {
      case SourceKind::electrode: model = "single"; break;
      case SourceKind::glass: model = "glass"; break;
      case SourceKind::both: model = "both"; break;
    }
  }
  const TimeSeries series = read_timeseries_csv(data_path);

  FitResult result;
  if (model == "glass") {
    result = fit(make_timeseries_fit_problem(FitKind::timeseries_glass, series, config.setup,
                                             config.schedule),
                 pc);
  } else if (model == "single") {
    result = fit(make_timeseries_fit_problem(FitKind::timeseries_electrode, series, config.setup,
                                             config.schedule),
                 pc);
  } else if (model == "two-process") {
    result = fit_two_process(
        make_two_process_fit_problem(series, config.setup, config.schedule, pc), pc);
  } else if (model == "both") {
    result = fit(make_timeseries_fit_problem(FitKind::timeseries_both, series, config.setup,
                                             config.schedule),
                 pc);
  } else {
    throw config_error("fit-timeseries: unknown model '" + model +
                       "' (expected glass, single, two-process, or both)");
  }
  FitCommandOutput output{std::move(result), model, {}};
  output.doc = fit_result_doc(output.result, output.model);
  if (!out_path.empty()) write_text_file(out_path, output.doc);
  return output;
}

/// model: dipole | monopole, or empty to pick by source.
inline FitCommandOutput run_fit_velocity_map(const RunConfig& config, const std::string& data_path,
                                             std::string model, const std::string& out_path,
                                             const PhysicalConstants& pc = codata2018) {
  if (model.empty()) {
    switch (config.setup.source_kind) {
      case SourceKind::electrode: model = "dipole"; break;
      case SourceKind::glass: model = "monopole"; break;
      case SourceKind::both:
        throw config_error("fit-velocity-map: pick --model dipole or monopole for source=both");
    }
  }
  const VelocityMap map = read_velocity_map_csv(data_path);

  FitResult result;
  if (model == "dipole") {
    result = fit(make_velocity_map_fit_problem(FitKind::velocity_map_dipole, map, config.setup),
                 pc);
  } else if (model == "monopole") {
    result =
        fit(make_velocity_map_fit_problem(FitKind::velocity_map_monopole, map, config.setup), pc);
  } else {
    throw config_error("fit-velocity-map: unknown model '" + model +
                       "' (expected dipole or monopole)");
  }
  FitCommandOutput output{std::move(result), model, {}};
  output.doc = fit_result_doc(output.result, output.model);
  if (!out_path.empty()) write_text_file(out_path, output.doc);
  return output;
}

inline std::vector<FieldMapPoint> field_map_points(const RunConfig& config,
                                                   const PhysicalConstants& pc = codata2018) {
  const FieldMapRange& range = config.fieldmap;
  std::vector<FieldMapPoint> points;
  points.reserve(range.points);
  const double step = (range.dx_max - range.dx_min) / (range.points - 1);
  for (int i = 0; i < range.points; ++i) {
    const double dx = range.dx_min + step * i;
    FieldMapPoint pt;
    pt.beam_offset_x = dx;
    if (config.setup.source_kind == SourceKind::electrode) {
      ElectrodeDipoleSource src;
      src.surface_offset_x = dx;
      src.trap_height = config.setup.trap.trap_height;
      src.dipole_length = config.setup.dipole_length;
      src.charge_count = range.charge_count;
      pt.field = axial_field_electrode(src, pc);
    } else if (config.setup.source_kind == SourceKind::glass) {
      GlassMonopoleSource src;
      src.surface_offset_x = dx;
      src.glass_height = *config.setup.glass_height;
      src.trap_height = config.setup.trap.trap_height;
      src.charge_count = range.charge_count;
      src.include_image = config.setup.include_image;
      pt.field = axial_field_glass(src, pc);
    } else {
      throw config_error("field-map: setup.source must be electrode or glass");
    }
    points.push_back(pt);
  }
  return points;
}

inline void run_field_map(const RunConfig& config, const std::string& out_path,
                          const PhysicalConstants& pc = codata2018) {
  write_field_map_csv(out_path, field_map_points(config, pc));
}

inline std::string sensitivity_report_text(const RunConfig& config,
                                           const PhysicalConstants& pc = codata2018) {
  if (!config.setup.glass_height)
    throw config_error("sensitivity: missing required key 'setup.glass_height_um'");
  GlassMonopoleSource geometry;
  geometry.glass_height = *config.setup.glass_height;
  geometry.trap_height = config.setup.trap.trap_height;
  geometry.charge_count = 1.0;

  auto report_with_image = [&](bool image) {
    geometry.include_image = image;
    return sensitivity(config.setup.trap, config.sensitivity_position_noise,
                       config.setup.trap.ion_count, config.sensitivity_integration_time,
                       geometry, pc);
  };
  const SensitivityReport on = report_with_image(true);
  const SensitivityReport off = report_with_image(false);
  const SensitivityReport& chosen = config.setup.include_image ? on : off;

  std::ostringstream out;
  out << "position_um_per_sqrthz = " << detail::format_g(chosen.position_sensitivity * 1e6)
      << '\n';
  out << "field_mv_per_m_sqrthz = " << detail::format_g(chosen.field_sensitivity * 1e3) << '\n';
  out << "force_zn_per_sqrthz = " << detail::format_g(chosen.force_sensitivity * 1e21) << '\n';
  out << "threshold_displacement_um = " << detail::format_g(chosen.threshold_displacement * 1e6)
      << '\n';
  out << "threshold_field_mv_per_m = " << detail::format_g(chosen.threshold_field * 1e3) << '\n';
  out << "min_charges = " << chosen.min_detectable_charges << '\n';
  out << "min_charges_exact = " << detail::format_g(chosen.min_detectable_charges_exact) << '\n';
  out << "min_charges_image_on = " << on.min_detectable_charges << '\n';
  out << "min_charges_image_on_exact = " << detail::format_g(on.min_detectable_charges_exact)
      << '\n';
  out << "min_charges_image_off = " << off.min_detectable_charges << '\n';
  out << "min_charges_image_off_exact = " << detail::format_g(off.min_detectable_charges_exact)
      << '\n';
  out << "ion_count = " << config.setup.trap.ion_count << '\n';
  out << "integration_time_s = " << detail::format_g(config.sensitivity_integration_time) << '\n';
  out << "glass_height_um = " << detail::format_g(*config.setup.glass_height * 1e6) << '\n';
  return out.str();
}

}  // namespace ionprobe::cli
