#pragma once

#include "ionprobe/charging.hpp"
#include "ionprobe/forward.hpp"

namespace ionprobe {

/// Planar trap operating point used throughout the docs and tests:
/// 2 pi * 90 kHz axial confinement, 800 um ion height, 40Ca+ string.
inline TrapConfig reference_trap(int ion_count = 3) {
  TrapConfig trap;
  trap.axial_frequency = 2.0 * std::numbers::pi * 90e3;
  trap.trap_height = 800e-6;
  trap.ion = IonSpecies::calcium40();
  trap.ion_count = ion_count;
  return trap;
}

/// Copper-electrode charging kinetics: two self-limiting, relaxing processes
/// with settling times of 2 s / 16 s under illumination and relaxation times
/// of 5 s / 120 s in the dark. Production rates are quoted at 8.5 uW drive.
inline MultiProcessParams electrode_charging_preset() {
  ChargingParams fast;
  fast.production_rate = 1.2e5;
  fast.relaxation_rate = 1.0 / 5.0;
  fast.saturation_coeff = (1.0 / 2.0 - fast.relaxation_rate) / fast.production_rate;

  ChargingParams slow;
  slow.production_rate = 6.0e4;
  slow.relaxation_rate = 1.0 / 120.0;
  slow.saturation_coeff = (1.0 / 16.0 - slow.relaxation_rate) / slow.production_rate;

  return MultiProcessParams::make({fast, slow});
}

/// Glass-plate charging kinetics: irreversible (gamma = 0), self-limiting with
/// a 38 s settling time, producing 566 charges/s at 2.5 uW, 375 nm drive.
inline ChargingParams glass_charging_preset() {
  ChargingParams p;
  p.production_rate = 566.0;
  p.relaxation_rate = 0.0;
  p.saturation_coeff = (1.0 / 38.0) / p.production_rate;
  return p;
}

/// Electrode run geometry: 375 nm beam at 8.5 uW, 200 um to the side of the string.
inline ExperimentSetup electrode_reference_setup(int ion_count = 3) {
  ExperimentSetup setup;
  setup.trap = reference_trap(ion_count);
  setup.source_kind = SourceKind::electrode;
  setup.beam_offset_x = 200e-6;
  setup.dipole_length = 1e-6;
  setup.calibration_power = 8.5e-6;
  setup.wavelength = 375e-9;
  return setup;
}

/// Glass run geometry: 375 nm beam at 2.5 uW, 300 um offset, plate 2 mm above.
inline ExperimentSetup glass_reference_setup(int ion_count = 3) {
  ExperimentSetup setup;
  setup.trap = reference_trap(ion_count);
  setup.source_kind = SourceKind::glass;
  setup.beam_offset_x = 300e-6;
  setup.glass_height = 2e-3;
  setup.include_image = true;
  setup.calibration_power = 2.5e-6;
  setup.wavelength = 375e-9;
  return setup;
}

}  // namespace ionprobe
