#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ionprobe/charging.hpp"
#include "ionprobe/crystal.hpp"
#include "ionprobe/electrostatics.hpp"
#include "ionprobe/errors.hpp"
#include "ionprobe/forward.hpp"
#include "ionprobe/least_squares.hpp"

namespace ionprobe {

enum class FitKind {
  timeseries_electrode,
  timeseries_glass,
  timeseries_both,
  velocity_map_dipole,
  velocity_map_monopole,
};

struct FitParameter {
  std::string name;
  double initial_guess = 0.0;
  double lower_bound = 0.0;
  double upper_bound = 0.0;
};

/// A self-contained fitting task. Time-series kinds consume `series` together
/// with the illumination `schedule`; velocity-map kinds consume `map`.
/// Every model parameter must appear exactly once across the free and fixed
/// lists. Charge kinetics enter time-series models through the identifiable
/// reparameterization (amplitude, gamma_on, gamma_off); P0 and delta are not
/// separately observable from a displacement trace.
struct FitProblem {
  FitKind kind = FitKind::timeseries_glass;
  TimeSeries series;
  VelocityMap map;
  ExperimentSetup setup;
  IlluminationSchedule schedule;
  std::vector<FitParameter> free_parameters;
  std::vector<std::pair<std::string, double>> fixed_parameters;
};

struct FitResult {
  FitKind kind = FitKind::timeseries_glass;
  std::vector<std::pair<std::string, double>> parameters;
  std::vector<std::pair<std::string, double>> standard_error_proxy;
  std::vector<std::pair<std::string, double>> fixed;
  std::vector<std::pair<std::string, double>> derived;
  double residual_rms = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Two-process fits only: settling rates within a factor 1.2 of each other,
  /// so the amplitude split is poorly identifiable.
  bool degenerate_rates = false;
  std::vector<double> accepted_costs;
};

inline double value_of(const std::vector<std::pair<std::string, double>>& kv,
                       const std::string& name) {
  for (const auto& [k, v] : kv)
    if (k == name) return v;
  throw std::invalid_argument("no such entry: " + name);
}

inline bool contains(const std::vector<std::pair<std::string, double>>& kv,
                     const std::string& name) {
  for (const auto& [k, v] : kv)
    if (k == name) return true;
  return false;
}

namespace detail {

/// Charge response normalized to the illuminated steady state: on-phase
/// segments settle toward 1 at rate gamma_on, off-phase segments decay at
/// gamma_off, continuous across boundaries, starting from 0.
/// Times must lie within the schedule (checked by the caller).
inline std::vector<double> normalized_charge_profile(double gamma_on, double gamma_off,
                                                     const IlluminationSchedule& schedule,
                                                     const std::vector<double>& times) {
  const std::size_t n_seg = schedule.segments.size();
  std::vector<double> seg_value(n_seg + 1, 0.0);
  std::vector<double> seg_begin(n_seg + 1, 0.0);
  for (std::size_t k = 0; k < n_seg; ++k) {
    const ScheduleSegment& seg = schedule.segments[k];
    seg_begin[k + 1] = seg_begin[k] + seg.duration;
    if (seg.laser_on)
      seg_value[k + 1] = 1.0 + (seg_value[k] - 1.0) * std::exp(-gamma_on * seg.duration);
    else
      seg_value[k + 1] = seg_value[k] * std::exp(-gamma_off * seg.duration);
  }
  std::vector<double> out(times.size(), 0.0);
  std::size_t k = 0;
  const double total = seg_begin[n_seg];
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double t = std::min(times[i], total);
    while (k + 1 < n_seg && t > seg_begin[k + 1]) ++k;
    const double tau = t - seg_begin[k];
    if (schedule.segments[k].laser_on)
      out[i] = 1.0 + (seg_value[k] - 1.0) * std::exp(-gamma_on * tau);
    else
      out[i] = seg_value[k] * std::exp(-gamma_off * tau);
  }
  return out;
}

inline const std::vector<std::string>& parameter_universe(FitKind kind, bool two_process) {
  static const std::vector<std::string> glass = {"amplitude", "gamma_on", "gamma_off"};
  static const std::vector<std::string> electrode = {"amplitude", "gamma_on", "gamma_off"};
  static const std::vector<std::string> electrode2 = {"amplitude1", "gamma_on1", "gamma_off1",
                                                      "amplitude2", "rate_fraction",
                                                      "gamma_off2"};
  static const std::vector<std::string> both = {"electrode_amplitude", "electrode_gamma_on",
                                                "electrode_gamma_off", "glass_amplitude",
                                                "glass_gamma_on", "glass_gamma_off"};
  static const std::vector<std::string> map1 = {"dipole_coefficient"};
  static const std::vector<std::string> map2 = {"monopole_coefficient"};
  switch (kind) {
    case FitKind::timeseries_glass: return glass;
    case FitKind::timeseries_electrode: return two_process ? electrode2 : electrode;
    case FitKind::timeseries_both: return both;
    case FitKind::velocity_map_dipole: return map1;
    case FitKind::velocity_map_monopole: return map2;
  }
  throw std::invalid_argument("unknown fit kind");
}

inline void check_parameter_lists(const FitProblem& problem, bool two_process) {
  const auto& universe = parameter_universe(problem.kind, two_process);
  std::vector<std::string> seen;
  for (const auto& fp : problem.free_parameters) seen.push_back(fp.name);
  for (const auto& [k, v] : problem.fixed_parameters) seen.push_back(k);
  auto sorted_seen = seen;
  std::sort(sorted_seen.begin(), sorted_seen.end());
  if (std::adjacent_find(sorted_seen.begin(), sorted_seen.end()) != sorted_seen.end())
    throw std::invalid_argument("fit: a parameter appears more than once");
  if (seen.size() != universe.size())
    throw std::invalid_argument("fit: free+fixed parameters must cover the model exactly");
  for (const auto& name : universe)
    if (std::find(seen.begin(), seen.end(), name) == seen.end())
      throw std::invalid_argument("fit: missing model parameter: " + name);
  if (problem.free_parameters.empty())
    throw std::invalid_argument("fit: at least one free parameter required");
}

inline void check_single_power_schedule(const IlluminationSchedule& schedule) {
  std::optional<double> on_power;
  for (const auto& seg : schedule.segments) {
    if (!seg.laser_on) continue;
    if (!on_power) on_power = seg.power;
    else if (*on_power != seg.power)
      throw config_error(
          "fit: the (amplitude, gamma_on, gamma_off) model requires all 'on' segments "
          "to share one power");
  }
}

inline std::optional<double> single_on_power(const IlluminationSchedule& schedule) {
  for (const auto& seg : schedule.segments)
    if (seg.laser_on) return seg.power;
  return std::nullopt;
}

inline void check_kind_matches_setup(FitKind kind, const ExperimentSetup& setup) {
  SourceKind expected;
  switch (kind) {
    case FitKind::timeseries_electrode:
    case FitKind::velocity_map_dipole:
      expected = SourceKind::electrode;
      break;
    case FitKind::timeseries_glass:
    case FitKind::velocity_map_monopole:
      expected = SourceKind::glass;
      break;
    case FitKind::timeseries_both:
      expected = SourceKind::both;
      break;
    default:
      throw std::invalid_argument("unknown fit kind");
  }
  if (setup.source_kind != expected)
    throw config_error("fit: the chosen model does not match the setup's source kind");
}

inline double median_spacing(const std::vector<TimeSample>& samples) {
  if (samples.size() < 2) return 1.0;
  std::vector<double> gaps;
  gaps.reserve(samples.size() - 1);
  for (std::size_t i = 1; i < samples.size(); ++i) gaps.push_back(samples[i].t - samples[i - 1].t);
  std::nth_element(gaps.begin(), gaps.begin() + gaps.size() / 2, gaps.end());
  return std::max(gaps[gaps.size() / 2], 1e-12);
}

/// Mean trace value in a small window around t.
inline double smoothed_value_at(const TimeSeries& series, double t, double half_window) {
  double sum = 0.0;
  int count = 0;
  for (const auto& s : series.samples) {
    if (std::abs(s.t - t) <= half_window) {
      sum += s.com_position;
      ++count;
    }
  }
  if (count == 0) {
    // fall back to the nearest sample
    double best = series.samples.front().com_position;
    double dist = std::abs(series.samples.front().t - t);
    for (const auto& s : series.samples)
      if (std::abs(s.t - t) < dist) {
        dist = std::abs(s.t - t);
        best = s.com_position;
      }
    return best;
  }
  return sum / count;
}

struct OnRun {
  double start = 0.0;
  double end = 0.0;
  bool found = false;
  double duration() const { return end - start; }
};

inline OnRun first_on_run(const IlluminationSchedule& schedule) {
  OnRun run;
  double t = 0.0;
  for (const auto& seg : schedule.segments) {
    if (seg.laser_on && !run.found) {
      run.found = true;
      run.start = t;
      run.end = t + seg.duration;
    } else if (seg.laser_on && run.found && run.end == t) {
      run.end = t + seg.duration;
    } else if (!seg.laser_on && run.found) {
      break;
    }
    t += seg.duration;
  }
  return run;
}

inline FitParameter amplitude_parameter(const std::string& name, double guess, double span) {
  const double bound = std::max({10.0 * std::abs(guess), 10.0 * span, 1e-9});
  return {name, guess, -bound, bound};
}

inline FitParameter rate_parameter(const std::string& name, double guess) {
  return {name, guess, guess / 300.0, guess * 300.0};
}

}  // namespace detail

/// Builds a time-series fit problem with data-driven initial guesses and wide
/// bounds. Glass fits treat the relaxation rate as fixed at zero (irreversible
/// charging); free it manually to test that assumption.
inline FitProblem make_timeseries_fit_problem(FitKind kind, TimeSeries series,
                                              ExperimentSetup setup,
                                              IlluminationSchedule schedule) {
  if (kind != FitKind::timeseries_electrode && kind != FitKind::timeseries_glass &&
      kind != FitKind::timeseries_both)
    throw std::invalid_argument("make_timeseries_fit_problem: not a time-series kind");
  if (series.samples.empty()) throw std::invalid_argument("fit: empty time series");
  setup.validate();
  detail::check_kind_matches_setup(kind, setup);
  schedule.validate();

  FitProblem problem;
  problem.kind = kind;
  problem.setup = std::move(setup);
  problem.schedule = std::move(schedule);

  const detail::OnRun on = detail::first_on_run(problem.schedule);
  const double total = problem.schedule.total_duration();
  const double dt = detail::median_spacing(series.samples);
  const double window = 5.0 * dt;
  const double t_on_end = on.found ? on.end : total;
  const double on_duration = on.found ? on.duration() : total;
  const double off_duration = std::max(total - t_on_end, 5.0 * dt);

  double span = 0.0;
  for (const auto& s : series.samples) span = std::max(span, std::abs(s.com_position));

  const double x_on_end = detail::smoothed_value_at(series, t_on_end, window);
  const double x_last = detail::smoothed_value_at(series, total, window);

  auto nonzero = [&](double v) { return std::abs(v) > 0.0 ? v : (span > 0.0 ? span : 1e-9); };

  switch (kind) {
    case FitKind::timeseries_glass:
      problem.free_parameters = {
          detail::amplitude_parameter("amplitude", nonzero(x_on_end), span),
          detail::rate_parameter("gamma_on", 2.0 / on_duration),
      };
      problem.fixed_parameters = {{"gamma_off", 0.0}};
      break;
    case FitKind::timeseries_electrode:
      problem.free_parameters = {
          detail::amplitude_parameter("amplitude", nonzero(x_on_end), span),
          detail::rate_parameter("gamma_on", 3.0 / on_duration),
          detail::rate_parameter("gamma_off", 2.0 / off_duration),
      };
      break;
    case FitKind::timeseries_both: {
      const double a_glass = nonzero(x_last);
      const double a_electrode = nonzero(x_on_end - x_last);
      problem.free_parameters = {
          detail::amplitude_parameter("electrode_amplitude", a_electrode, span),
          detail::rate_parameter("electrode_gamma_on", 3.0 / on_duration),
          detail::rate_parameter("electrode_gamma_off", 2.0 / off_duration),
          detail::amplitude_parameter("glass_amplitude", a_glass, span),
          detail::rate_parameter("glass_gamma_on", 1.5 / on_duration),
      };
      problem.fixed_parameters = {{"glass_gamma_off", 0.0}};
      break;
    }
    default:
      break;
  }
  problem.series = std::move(series);
  return problem;
}

/// Builds a velocity-map fit problem; the single coefficient is seeded by a
/// linear least-squares projection onto the kernel shape.
inline FitProblem make_velocity_map_fit_problem(FitKind kind, VelocityMap map,
                                                ExperimentSetup setup) {
  if (kind != FitKind::velocity_map_dipole && kind != FitKind::velocity_map_monopole)
    throw std::invalid_argument("make_velocity_map_fit_problem: not a velocity-map kind");
  if (map.points.empty()) throw std::invalid_argument("fit: empty velocity map");
  setup.validate();
  detail::check_kind_matches_setup(kind, setup);

  FitProblem problem;
  problem.kind = kind;
  problem.setup = std::move(setup);

  double num = 0.0, den = 0.0;
  for (const auto& pt : map.points) {
    double kernel;
    if (kind == FitKind::velocity_map_dipole) {
      kernel = dipole_axial_kernel(pt.beam_offset_x, problem.setup.trap.trap_height);
    } else {
      const double h = *problem.setup.glass_height;
      kernel = monopole_axial_kernel(pt.beam_offset_x, h);
      if (problem.setup.include_image)
        kernel -= monopole_axial_kernel(pt.beam_offset_x,
                                        h + 2.0 * problem.setup.trap.trap_height);
    }
    const double basis = kernel * pt.power / problem.setup.calibration_power;
    num += pt.initial_velocity * basis;
    den += basis * basis;
  }
  const double guess = den > 0.0 ? num / den : 1.0;
  const std::string name =
      kind == FitKind::velocity_map_dipole ? "dipole_coefficient" : "monopole_coefficient";
  const double bound = std::max(10.0 * std::abs(guess), 1e-30);
  problem.free_parameters = {{name, guess == 0.0 ? bound * 1e-3 : guess, -bound, bound}};
  problem.map = std::move(map);
  return problem;
}

namespace detail {

struct AssembledModel {
  VectorFunction predict;            // theta_free -> predictions at the data points
  std::vector<double> observed;
  std::vector<double> initial, lower, upper;
};

/// Full named parameter set from fixed values plus the current free vector.
inline std::vector<std::pair<std::string, double>> full_values(
    const FitProblem& problem, const std::vector<double>& theta) {
  std::vector<std::pair<std::string, double>> values = problem.fixed_parameters;
  for (std::size_t j = 0; j < problem.free_parameters.size(); ++j)
    values.emplace_back(problem.free_parameters[j].name, theta[j]);
  return values;
}

inline AssembledModel assemble_model(const FitProblem& problem, bool two_process) {
  check_parameter_lists(problem, two_process);
  AssembledModel m;
  for (const auto& fp : problem.free_parameters) {
    m.initial.push_back(fp.initial_guess);
    m.lower.push_back(fp.lower_bound);
    m.upper.push_back(fp.upper_bound);
  }

  const bool is_map = problem.kind == FitKind::velocity_map_dipole ||
                      problem.kind == FitKind::velocity_map_monopole;
  if (is_map) {
    std::vector<double> basis;
    for (const auto& pt : problem.map.points) {
      double kernel;
      if (problem.kind == FitKind::velocity_map_dipole) {
        kernel = dipole_axial_kernel(pt.beam_offset_x, problem.setup.trap.trap_height);
      } else {
        const double h = *problem.setup.glass_height;
        kernel = monopole_axial_kernel(pt.beam_offset_x, h);
        if (problem.setup.include_image)
          kernel -= monopole_axial_kernel(pt.beam_offset_x,
                                          h + 2.0 * problem.setup.trap.trap_height);
      }
      basis.push_back(kernel * pt.power / problem.setup.calibration_power);
      m.observed.push_back(pt.initial_velocity);
    }
    m.predict = [basis](const std::vector<double>& theta) {
      std::vector<double> out(basis.size());
      for (std::size_t i = 0; i < basis.size(); ++i) out[i] = theta[0] * basis[i];
      return out;
    };
    return m;
  }

  check_single_power_schedule(problem.schedule);
  std::vector<double> times;
  const double total = problem.schedule.total_duration();
  for (const auto& s : problem.series.samples) {
    if (!std::isfinite(s.t) || s.t < 0.0 || s.t > total * (1.0 + 1e-12))
      throw config_error("fit: sample time outside the illumination schedule");
    times.push_back(s.t);
    m.observed.push_back(s.com_position);
  }

  const FitProblem* prob = &problem;
  if (two_process) {
    m.predict = [prob, times](const std::vector<double>& theta) {
      const auto values = full_values(*prob, theta);
      const double a1 = value_of(values, "amplitude1");
      const double g_on1 = value_of(values, "gamma_on1");
      const double g_off1 = value_of(values, "gamma_off1");
      const double a2 = value_of(values, "amplitude2");
      const double fraction = value_of(values, "rate_fraction");
      const double g_off2 = value_of(values, "gamma_off2");
      const auto p1 = normalized_charge_profile(g_on1, g_off1, prob->schedule, times);
      const auto p2 = normalized_charge_profile(fraction * g_on1, g_off2, prob->schedule, times);
      std::vector<double> out(times.size());
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = a1 * p1[i] + a2 * p2[i];
      return out;
    };
    return m;
  }

  if (problem.kind == FitKind::timeseries_both) {
    m.predict = [prob, times](const std::vector<double>& theta) {
      const auto values = full_values(*prob, theta);
      const auto pe = normalized_charge_profile(value_of(values, "electrode_gamma_on"),
                                                value_of(values, "electrode_gamma_off"),
                                                prob->schedule, times);
      const auto pg = normalized_charge_profile(value_of(values, "glass_gamma_on"),
                                                value_of(values, "glass_gamma_off"),
                                                prob->schedule, times);
      const double ae = value_of(values, "electrode_amplitude");
      const double ag = value_of(values, "glass_amplitude");
      std::vector<double> out(times.size());
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = ae * pe[i] + ag * pg[i];
      return out;
    };
    return m;
  }

  m.predict = [prob, times](const std::vector<double>& theta) {
    const auto values = full_values(*prob, theta);
    const auto p = normalized_charge_profile(value_of(values, "gamma_on"),
                                             value_of(values, "gamma_off"), prob->schedule,
                                             times);
    const double a = value_of(values, "amplitude");
    std::vector<double> out(times.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * p[i];
    return out;
  };
  return m;
}

inline void append_derived_timeseries(FitResult& result, const FitProblem& problem,
                                      const std::vector<std::pair<std::string, double>>& values,
                                      bool two_process, const PhysicalConstants& pc) {
  const auto positions = equilibrium_positions(problem.setup.trap, pc).positions;
  // The fitted rate is the production rate at the on-segment power, so the
  // efficiency must divide by the photon flux at that same power.
  const std::optional<double> on_power = single_on_power(problem.schedule);
  const bool has_beam =
      on_power.has_value() && *on_power > 0.0 && problem.setup.wavelength > 0.0;
  const double flux = has_beam ? photon_rate(*on_power, problem.setup.wavelength, pc) : 0.0;

  auto push = [&](const std::string& k, double v) { result.derived.emplace_back(k, v); };

  if (two_process) {
    const double c = electrode_displacement_per_charge(problem.setup, positions, pc);
    const double g_on1 = value_of(values, "gamma_on1");
    const double g_on2 = value_of(values, "rate_fraction") * g_on1;
    const double g_off1 = value_of(values, "gamma_off1");
    const double g_off2 = value_of(values, "gamma_off2");
    const double neq1 = value_of(values, "amplitude1") / c;
    const double neq2 = value_of(values, "amplitude2") / c;
    push("gamma_on2_per_s", g_on2);
    push("tau_on1_s", 1.0 / g_on1);
    push("tau_on2_s", 1.0 / g_on2);
    push("tau_off1_s", 1.0 / g_off1);
    push("tau_off2_s", 1.0 / g_off2);
    push("n_eq1", neq1);
    push("n_eq2", neq2);
    const double rate = neq1 * g_on1 + neq2 * g_on2;
    push("initial_rate_per_s", rate);
    if (has_beam)
      push("eta_dipole_normalized", (rate / flux) * (problem.setup.dipole_length / 1e-6));
    return;
  }

  switch (problem.kind) {
    case FitKind::timeseries_glass: {
      const double c = glass_displacement_per_charge(problem.setup, positions, pc);
      const double g_on = value_of(values, "gamma_on");
      const double neq = value_of(values, "amplitude") / c;
      push("tau_on_s", 1.0 / g_on);
      push("n_eq", neq);
      push("initial_rate_per_s", neq * g_on);
      if (has_beam) push("eta", neq * g_on / flux);
      break;
    }
    case FitKind::timeseries_electrode: {
      const double c = electrode_displacement_per_charge(problem.setup, positions, pc);
      const double g_on = value_of(values, "gamma_on");
      const double neq = value_of(values, "amplitude") / c;
      push("tau_on_s", 1.0 / g_on);
      push("tau_off_s", 1.0 / value_of(values, "gamma_off"));
      push("n_eq", neq);
      push("initial_rate_per_s", neq * g_on);
      if (has_beam)
        push("eta_dipole_normalized",
             (neq * g_on / flux) * (problem.setup.dipole_length / 1e-6));
      break;
    }
    case FitKind::timeseries_both: {
      const double ce = electrode_displacement_per_charge(problem.setup, positions, pc);
      const double cg = glass_displacement_per_charge(problem.setup, positions, pc);
      const double ge_on = value_of(values, "electrode_gamma_on");
      const double gg_on = value_of(values, "glass_gamma_on");
      const double neq_e = value_of(values, "electrode_amplitude") / ce;
      const double neq_g = value_of(values, "glass_amplitude") / cg;
      push("electrode_tau_on_s", 1.0 / ge_on);
      push("electrode_tau_off_s", 1.0 / value_of(values, "electrode_gamma_off"));
      push("glass_tau_on_s", 1.0 / gg_on);
      push("electrode_n_eq", neq_e);
      push("glass_n_eq", neq_g);
      push("electrode_initial_rate_per_s", neq_e * ge_on);
      push("glass_initial_rate_per_s", neq_g * gg_on);
      if (has_beam) {
        push("eta_dipole_normalized",
             (neq_e * ge_on / flux) * (problem.setup.dipole_length / 1e-6));
        push("eta", neq_g * gg_on / flux);
      }
      break;
    }
    default:
      break;
  }
}

inline void append_derived_map(FitResult& result, const FitProblem& problem,
                               const std::vector<std::pair<std::string, double>>& values,
                               const PhysicalConstants& pc) {
  const TrapConfig& trap = problem.setup.trap;
  const bool has_beam = problem.setup.calibration_power > 0.0 && problem.setup.wavelength > 0.0;
  auto push = [&](const std::string& k, double v) { result.derived.emplace_back(k, v); };

  if (problem.kind == FitKind::velocity_map_dipole) {
    const double coeff = value_of(values, "dipole_coefficient");
    const double rate = coeff * trap.stiffness() /
                        (3.0 * trap.ion.charge * pc.coulomb_constant() * pc.elementary_charge *
                         problem.setup.dipole_length);
    push("rate_per_s", rate);
    if (has_beam)
      push("eta_dipole_normalized",
           dipole_efficiency_from_rate(rate, problem.setup.calibration_power,
                                       problem.setup.wavelength, problem.setup.dipole_length,
                                       pc));
  } else {
    const double coeff = value_of(values, "monopole_coefficient");
    const double rate = coeff * trap.stiffness() /
                        (trap.ion.charge * pc.coulomb_constant() * pc.elementary_charge);
    push("rate_per_s", rate);
    if (has_beam)
      push("eta", efficiency_from_rate(rate, problem.setup.calibration_power,
                                       problem.setup.wavelength, pc));
  }
}

inline FitResult run_fit(const FitProblem& problem, bool two_process,
                         const PhysicalConstants& pc) {
  problem.setup.validate();
  check_kind_matches_setup(problem.kind, problem.setup);
  AssembledModel model = assemble_model(problem, two_process);
  if (model.observed.size() < 2 * model.initial.size())
    throw std::invalid_argument("fit: need at least twice as many data points as free parameters");

  const LeastSquaresSolution sol =
      solve_least_squares(model.predict, model.observed, model.initial, model.lower, model.upper);

  FitResult result;
  result.kind = problem.kind;
  for (std::size_t j = 0; j < problem.free_parameters.size(); ++j) {
    result.parameters.emplace_back(problem.free_parameters[j].name, sol.parameters[j]);
    result.standard_error_proxy.emplace_back(problem.free_parameters[j].name,
                                             sol.standard_error[j]);
  }
  result.fixed = problem.fixed_parameters;
  result.residual_rms = sol.residual_rms;
  result.iterations = sol.iterations;
  result.converged = sol.converged;
  result.accepted_costs = sol.accepted_costs;

  const auto values = full_values(problem, sol.parameters);
  if (two_process) {
    const double fraction = value_of(values, "rate_fraction");
    result.degenerate_rates = fraction > 1.0 / 1.2;
    append_derived_timeseries(result, problem, values, true, pc);
  } else if (problem.kind == FitKind::velocity_map_dipole ||
             problem.kind == FitKind::velocity_map_monopole) {
    append_derived_map(result, problem, values, pc);
  } else {
    append_derived_timeseries(result, problem, values, false, pc);
  }
  return result;
}

}  // namespace detail

/// Fits the problem's model to its data with damped Gauss-Newton iteration.
inline FitResult fit(const FitProblem& problem, const PhysicalConstants& pc = codata2018) {
  return detail::run_fit(problem, false, pc);
}

/// Builds a two-process electrode fit seeded by a single-process prefit: the
/// second settling rate is parameterized as a positive fraction of the first,
/// which keeps the processes ordered throughout the iteration.
inline FitProblem make_two_process_fit_problem(TimeSeries series, ExperimentSetup setup,
                                               IlluminationSchedule schedule,
                                               const PhysicalConstants& pc = codata2018) {
  FitProblem single =
      make_timeseries_fit_problem(FitKind::timeseries_electrode, series, setup, schedule);
  const FitResult prefit = fit(single, pc);
  const double a = value_of(prefit.parameters, "amplitude");
  const double g_on = value_of(prefit.parameters, "gamma_on");
  const double g_off = value_of(prefit.parameters, "gamma_off");

  double span = 0.0;
  for (const auto& s : series.samples) span = std::max(span, std::abs(s.com_position));

  FitProblem problem;
  problem.kind = FitKind::timeseries_electrode;
  problem.setup = std::move(setup);
  problem.schedule = std::move(schedule);
  problem.series = std::move(series);
  problem.free_parameters = {
      detail::amplitude_parameter("amplitude1", 0.35 * a, span),
      detail::rate_parameter("gamma_on1", 3.0 * g_on),
      detail::rate_parameter("gamma_off1", 3.0 * g_off),
      detail::amplitude_parameter("amplitude2", 0.65 * a, span),
      {"rate_fraction", 0.2, 1e-3, 0.999},
      detail::rate_parameter("gamma_off2", 0.4 * g_off),
  };
  return problem;
}

/// Fits the four-exponential two-process electrode model. The result's
/// process 1 always carries the larger settling rate; near-equal rates set
/// degenerate_rates.
inline FitResult fit_two_process(const FitProblem& problem,
                                 const PhysicalConstants& pc = codata2018) {
  if (problem.kind != FitKind::timeseries_electrode)
    throw std::invalid_argument("fit_two_process: requires a timeseries-electrode problem");
  return detail::run_fit(problem, true, pc);
}

/// Detectability figures of a string probe limited by camera readout noise.
struct SensitivityReport {
  double position_sensitivity = 0.0;   // m/sqrt(Hz), single ion
  double field_sensitivity = 0.0;      // (V/m)/sqrt(Hz)
  double force_sensitivity = 0.0;      // N/sqrt(Hz)
  double threshold_displacement = 0.0; // m at (ion_count, integration_time)
  double threshold_field = 0.0;        // V/m at (ion_count, integration_time)
  double min_detectable_charges_exact = 0.0;
  long min_detectable_charges = 0;
};

/// Propagates the position noise floor through the string's spring constant,
/// then divides the 1-sigma field threshold by the per-charge field of a plate
/// charge at the optimal beam offset dx* = h_glass/sqrt(2) (image screening
/// applied per the source's setting) to get the smallest detectable charge.
inline SensitivityReport sensitivity(const TrapConfig& trap, double position_noise_1s_3ion,
                                     int ion_count, double integration_time,
                                     const GlassMonopoleSource& geometry,
                                     const PhysicalConstants& pc = codata2018) {
  trap.validate();
  if (!(position_noise_1s_3ion > 0.0) || !std::isfinite(position_noise_1s_3ion))
    throw std::domain_error("sensitivity: position noise must be finite and > 0");
  if (ion_count < 1) throw std::domain_error("sensitivity: ion_count must be >= 1");
  if (!(integration_time > 0.0) || !std::isfinite(integration_time))
    throw std::domain_error("sensitivity: integration_time must be finite and > 0");
  if (!(geometry.glass_height > 0.0) || !std::isfinite(geometry.glass_height))
    throw std::domain_error("sensitivity: glass_height must be finite and > 0");
  if (!(geometry.trap_height > 0.0) || !std::isfinite(geometry.trap_height))
    throw std::domain_error("sensitivity: trap_height must be finite and > 0");

  SensitivityReport report;
  const double stiffness = trap.stiffness();
  report.position_sensitivity = position_noise_1s_3ion * std::sqrt(3.0);
  report.force_sensitivity = stiffness * report.position_sensitivity;
  report.field_sensitivity = report.force_sensitivity / trap.ion.charge;

  report.threshold_displacement = position_noise_1s_3ion *
                                  std::sqrt(3.0 / ion_count) *
                                  std::sqrt(1.0 / integration_time);
  report.threshold_field = stiffness * report.threshold_displacement / trap.ion.charge;

  const double h = geometry.glass_height;
  const double dx_opt = h / std::sqrt(2.0);
  double kernel = monopole_axial_kernel(dx_opt, h);
  if (geometry.include_image)
    kernel -= monopole_axial_kernel(dx_opt, h + 2.0 * geometry.trap_height);
  const double field_per_charge = pc.coulomb_constant() * pc.elementary_charge * kernel;

  report.min_detectable_charges_exact = report.threshold_field / field_per_charge;
  report.min_detectable_charges =
      static_cast<long>(std::ceil(report.min_detectable_charges_exact));
  return report;
}

}  // namespace ionprobe
