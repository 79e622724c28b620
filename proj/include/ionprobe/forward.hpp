#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "ionprobe/charging.hpp"
#include "ionprobe/crystal.hpp"
#include "ionprobe/electrostatics.hpp"
#include "ionprobe/errors.hpp"
#include "ionprobe/units.hpp"

namespace ionprobe {

enum class SourceKind { electrode, glass, both };

/// Geometry and beam parameters of one measurement run.
struct ExperimentSetup {
  TrapConfig trap;
  SourceKind source_kind = SourceKind::electrode;
  double beam_offset_x = 0.0;            // laser spot relative to the string center, m
  std::optional<double> glass_height;    // ion-plate distance, m; required for glass/both
  double dipole_length = 1e-6;           // electrode charge-image separation, m
  bool include_image = true;             // screen the plate charge by its image
  double calibration_power = 0.0;        // W; reference power for quoted P0 values
  double wavelength = 0.0;               // m

  void validate() const {
    trap.validate();
    if (!std::isfinite(beam_offset_x))
      throw config_error("setup: beam_offset_x must be finite");
    if (source_kind != SourceKind::glass) {
      if (!(dipole_length > 0.0) || !std::isfinite(dipole_length))
        throw config_error("setup: dipole_length must be finite and > 0");
    }
    if (source_kind != SourceKind::electrode) {
      if (!glass_height || !(*glass_height > 0.0) || !std::isfinite(*glass_height))
        throw config_error("setup: glass_height must be present, finite and > 0 for a glass source");
    }
    if (!(calibration_power > 0.0) || !std::isfinite(calibration_power))
      throw config_error("setup: calibration_power must be finite and > 0");
    if (!(wavelength > 0.0) || !std::isfinite(wavelength))
      throw config_error("setup: wavelength must be finite and > 0");
  }
};

struct TimeSample {
  double t = 0.0;             // s from the start of the schedule
  double com_position = 0.0;  // m
};

struct TimeSeries {
  std::vector<TimeSample> samples;
  double cadence = 0.0;      // s between samples
  double noise_sigma = 0.0;  // per-sample position noise actually applied, m
};

struct VelocityPoint {
  double beam_offset_x = 0.0;    // m
  double initial_velocity = 0.0; // m/s
  double power = 0.0;            // W
};

struct VelocityMap {
  std::vector<VelocityPoint> points;
};

/// Position noise per sample for a camera that resolves reference_sigma on a
/// three-ion string at 1 s exposure: scales as 1/sqrt(exposure) and
/// 1/sqrt(ion_count).
inline double default_noise_sigma(double reference_sigma_1s_3ion, double cadence, int ion_count) {
  if (!(reference_sigma_1s_3ion >= 0.0) || !std::isfinite(reference_sigma_1s_3ion))
    throw std::domain_error("default_noise_sigma: reference sigma must be finite and >= 0");
  if (!(cadence > 0.0) || !std::isfinite(cadence))
    throw std::domain_error("default_noise_sigma: cadence must be finite and > 0");
  if (ion_count < 1) throw std::domain_error("default_noise_sigma: ion_count must be >= 1");
  return reference_sigma_1s_3ion * std::sqrt(1.0 / cadence) * std::sqrt(3.0 / ion_count);
}

/// String-averaged displacement per accumulated electrode charge, m/charge.
/// Positive charge counts displace the string toward the beam (the film charge
/// is negative and attracts the ions), so the sign follows the beam offset.
inline double electrode_displacement_per_charge(const ExperimentSetup& setup,
                                                const std::vector<double>& positions,
                                                const PhysicalConstants& pc = codata2018) {
  double kernel_sum = 0.0;
  for (double x : positions)
    kernel_sum += dipole_axial_kernel(setup.beam_offset_x - x, setup.trap.trap_height);
  const double field_per_charge = 3.0 * pc.coulomb_constant() * pc.elementary_charge *
                                  setup.dipole_length * kernel_sum / positions.size();
  return setup.trap.ion.charge * field_per_charge / setup.trap.stiffness();
}

/// String-averaged displacement per accumulated plate charge, m/charge.
/// The plate charge is positive and repels the ions, so the sign opposes the
/// beam offset (image screening included per setup).
inline double glass_displacement_per_charge(const ExperimentSetup& setup,
                                            const std::vector<double>& positions,
                                            const PhysicalConstants& pc = codata2018) {
  const double h = *setup.glass_height;
  double kernel_sum = 0.0;
  for (double x : positions) {
    const double dx = setup.beam_offset_x - x;
    double k = monopole_axial_kernel(dx, h);
    if (setup.include_image)
      k -= monopole_axial_kernel(dx, h + 2.0 * setup.trap.trap_height);
    kernel_sum += k;
  }
  const double field_per_charge =
      pc.coulomb_constant() * pc.elementary_charge * kernel_sum / positions.size();
  return -setup.trap.ion.charge * field_per_charge / setup.trap.stiffness();
}

/// Simulates the measured center-of-mass trace: charge kinetics propagated
/// through the schedule, converted to displacement through the linearized
/// string response, plus i.i.d. Gaussian readout noise. Identical inputs and
/// seed give bit-identical output.
inline TimeSeries synthesize_timeseries(const ExperimentSetup& setup,
                                        const MultiProcessParams& electrode_params,
                                        const std::optional<ChargingParams>& glass_params,
                                        const IlluminationSchedule& schedule, double cadence,
                                        double noise_sigma, std::uint64_t rng_seed,
                                        const PhysicalConstants& pc = codata2018) {
  setup.validate();
  schedule.validate();
  if (!(cadence > 0.0) || !std::isfinite(cadence))
    throw config_error("synthesize_timeseries: cadence must be finite and > 0");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma))
    throw config_error("synthesize_timeseries: noise_sigma must be finite and >= 0");
  const bool use_electrode = setup.source_kind != SourceKind::glass;
  const bool use_glass = setup.source_kind != SourceKind::electrode;
  if (use_glass && !glass_params)
    throw config_error("synthesize_timeseries: glass source requires glass kinetics");

  const double total = schedule.total_duration();
  std::vector<double> times;
  for (std::size_t k = 0;; ++k) {
    const double t = cadence * static_cast<double>(k);
    if (t > total * (1.0 + 1e-12)) break;
    times.push_back(std::min(t, total));
  }

  const auto positions = equilibrium_positions(setup.trap, pc).positions;
  const double c_el =
      use_electrode ? electrode_displacement_per_charge(setup, positions, pc) : 0.0;
  const double c_gl = use_glass ? glass_displacement_per_charge(setup, positions, pc) : 0.0;

  std::vector<double> n_el, n_gl;
  if (use_electrode) n_el = charge_trajectory(electrode_params, schedule, times);
  if (use_glass)
    n_gl = charge_trajectory(MultiProcessParams::make({*glass_params}), schedule, times);

  std::mt19937_64 rng(rng_seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  TimeSeries series;
  series.cadence = cadence;
  series.noise_sigma = noise_sigma;
  series.samples.resize(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    double x = (use_electrode ? c_el * n_el[i] : 0.0) + (use_glass ? c_gl * n_gl[i] : 0.0);
    if (noise_sigma > 0.0) x += noise_sigma * gauss(rng);
    series.samples[i] = {times[i], x};
  }
  return series;
}

/// Initial string drift speed for a fresh electrode surface charging at
/// `rate` charges/s, evaluated at the beam offset:
///   v = [3 q / (4 pi eps0 m w^2)] * rate * e * r_dip * K_dip(dx, h_trap).
/// Reported with the kernel's sign (positive peak at positive offset), the
/// convention velocity maps are plotted and fitted in.
inline double initial_velocity_electrode(const ExperimentSetup& setup, double rate,
                                         const PhysicalConstants& pc = codata2018) {
  setup.validate();
  if (!std::isfinite(rate)) throw std::domain_error("initial_velocity_electrode: rate must be finite");
  const double coeff = 3.0 * setup.trap.ion.charge * pc.coulomb_constant() /
                       setup.trap.stiffness() * rate * pc.elementary_charge *
                       setup.dipole_length;
  return coeff * dipole_axial_kernel(setup.beam_offset_x, setup.trap.trap_height);
}

/// Initial string drift speed for a fresh plate charging at `rate` charges/s,
/// same sign convention as initial_velocity_electrode (image screening per setup).
inline double initial_velocity_glass(const ExperimentSetup& setup, double rate,
                                     const PhysicalConstants& pc = codata2018) {
  setup.validate();
  if (setup.source_kind == SourceKind::electrode)
    throw config_error("initial_velocity_glass: setup has no glass plate");
  if (!std::isfinite(rate)) throw std::domain_error("initial_velocity_glass: rate must be finite");
  const double h = *setup.glass_height;
  double kernel = monopole_axial_kernel(setup.beam_offset_x, h);
  if (setup.include_image)
    kernel -= monopole_axial_kernel(setup.beam_offset_x, h + 2.0 * setup.trap.trap_height);
  const double coeff = setup.trap.ion.charge * pc.coulomb_constant() / setup.trap.stiffness() *
                       rate * pc.elementary_charge;
  return coeff * kernel;
}

/// Samples an initial-velocity map over beam offsets at per-point powers.
/// `rate` is quoted at the setup's calibration power and scaled linearly.
inline VelocityMap synthesize_velocity_map(const ExperimentSetup& setup, double rate,
                                           const std::vector<double>& offsets,
                                           const std::vector<double>& powers,
                                           double velocity_noise_sigma, std::uint64_t rng_seed,
                                           const PhysicalConstants& pc = codata2018) {
  setup.validate();
  if (setup.source_kind == SourceKind::both)
    throw config_error("synthesize_velocity_map: pick a single source kind");
  if (offsets.size() != powers.size() || offsets.empty())
    throw std::invalid_argument("synthesize_velocity_map: offsets/powers size mismatch");
  if (!(velocity_noise_sigma >= 0.0) || !std::isfinite(velocity_noise_sigma))
    throw std::domain_error("synthesize_velocity_map: noise must be finite and >= 0");

  std::mt19937_64 rng(rng_seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  VelocityMap map;
  map.points.reserve(offsets.size());
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    ExperimentSetup at_point = setup;
    at_point.beam_offset_x = offsets[i];
    const double scaled_rate = rate * powers[i] / setup.calibration_power;
    double v = setup.source_kind == SourceKind::electrode
                   ? initial_velocity_electrode(at_point, scaled_rate, pc)
                   : initial_velocity_glass(at_point, scaled_rate, pc);
    if (velocity_noise_sigma > 0.0) v += velocity_noise_sigma * gauss(rng);
    map.points.push_back({offsets[i], v, powers[i]});
  }
  return map;
}

/// Charges produced per incident photon.
inline double efficiency_from_rate(double rate, double power, double wavelength,
                                   const PhysicalConstants& pc = codata2018) {
  if (!(power > 0.0) || !std::isfinite(power))
    throw std::domain_error("efficiency_from_rate: power must be finite and > 0");
  if (!std::isfinite(rate) || rate < 0.0)
    throw std::domain_error("efficiency_from_rate: rate must be finite and >= 0");
  return rate / photon_rate(power, wavelength, pc);
}

/// Dipole-source efficiency in the normalization velocity maps constrain:
/// only the product rate * r_dip is observable, so the quoted number is
/// eta * (r_dip / 1 um) and is independent of the assumed dipole length.
inline double dipole_efficiency_from_rate(double rate, double power, double wavelength,
                                          double dipole_length,
                                          const PhysicalConstants& pc = codata2018) {
  if (!(dipole_length > 0.0) || !std::isfinite(dipole_length))
    throw std::domain_error("dipole_efficiency_from_rate: dipole_length must be finite and > 0");
  return efficiency_from_rate(rate, power, wavelength, pc) * (dipole_length / 1e-6);
}

}  // namespace ionprobe
