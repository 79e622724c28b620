#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "ionprobe/errors.hpp"

namespace ionprobe {

/// Fundamental constants, CODATA 2018, SI units throughout.
///
/// All internal computation is SI; prefixed units exist only at the I/O edges
/// (config keys, CSV columns, report fields).
struct PhysicalConstants {
  double vacuum_permittivity = 8.8541878128e-12;  // F/m
  double elementary_charge = 1.602176634e-19;     // C
  double atomic_mass_unit = 1.66053906660e-27;    // kg
  double planck_constant = 6.62607015e-34;        // J s
  double speed_of_light = 2.99792458e8;           // m/s

  /// Coulomb constant 1/(4 pi eps0), N m^2 / C^2.
  constexpr double coulomb_constant() const {
    return 1.0 / (4.0 * std::numbers::pi * vacuum_permittivity);
  }
};

inline constexpr PhysicalConstants codata2018{};

/// A trappable atomic ion.
struct IonSpecies {
  double mass = 0.0;    // kg
  double charge = 0.0;  // C
  std::string label;

  void validate() const {
    if (!(mass > 0.0) || !std::isfinite(mass))
      throw std::domain_error("ion species '" + label + "': mass must be finite and > 0");
    if (charge == 0.0 || !std::isfinite(charge))
      throw std::domain_error("ion species '" + label + "': charge must be finite and nonzero");
  }

  static IonSpecies calcium40(const PhysicalConstants& pc = codata2018) {
    return IonSpecies{40.0 * pc.atomic_mass_unit, pc.elementary_charge, "40Ca+"};
  }
};

/// Photon flux of a monochromatic beam: P * lambda / (h c), photons/s.
inline double photon_rate(double power, double wavelength,
                          const PhysicalConstants& pc = codata2018) {
  if (!std::isfinite(power) || power < 0.0)
    throw std::domain_error("photon_rate: power must be finite and >= 0");
  if (!std::isfinite(wavelength) || wavelength <= 0.0)
    throw std::domain_error("photon_rate: wavelength must be finite and > 0");
  return power * wavelength / (pc.planck_constant * pc.speed_of_light);
}

/// Units the CLI and file formats expose. Conversions are pure powers of ten.
enum class Unit {
  meter,
  millimeter,
  micrometer,
  nanometer,
  second,
  millisecond,
  watt,
  milliwatt,
  microwatt,
  newton,
  zeptonewton,
  volt_per_meter,
  millivolt_per_meter,
  hertz,
  kilohertz,
};

enum class Dimension { length, time, power, force, electric_field, frequency };

struct UnitInfo {
  Dimension dimension;
  int decade;  // unit = 10^decade * (SI base of its dimension)
  const char* name;
};

constexpr UnitInfo unit_info(Unit u) {
  switch (u) {
    case Unit::meter: return {Dimension::length, 0, "m"};
    case Unit::millimeter: return {Dimension::length, -3, "mm"};
    case Unit::micrometer: return {Dimension::length, -6, "um"};
    case Unit::nanometer: return {Dimension::length, -9, "nm"};
    case Unit::second: return {Dimension::time, 0, "s"};
    case Unit::millisecond: return {Dimension::time, -3, "ms"};
    case Unit::watt: return {Dimension::power, 0, "W"};
    case Unit::milliwatt: return {Dimension::power, -3, "mW"};
    case Unit::microwatt: return {Dimension::power, -6, "uW"};
    case Unit::newton: return {Dimension::force, 0, "N"};
    case Unit::zeptonewton: return {Dimension::force, -21, "zN"};
    case Unit::volt_per_meter: return {Dimension::electric_field, 0, "V/m"};
    case Unit::millivolt_per_meter: return {Dimension::electric_field, -3, "mV/m"};
    case Unit::hertz: return {Dimension::frequency, 0, "Hz"};
    case Unit::kilohertz: return {Dimension::frequency, 3, "kHz"};
  }
  throw std::invalid_argument("unit_info: unknown unit tag");
}

namespace detail {
// Powers of ten up to 1e22 are exactly representable in binary64, which keeps
// round trips within 1 ulp. The largest decade gap exposed here is 21 (N<->zN).
inline constexpr double pow10_exact[23] = {
    1e0,  1e1,  1e2,  1e3,  1e4,  1e5,  1e6,  1e7,  1e8,  1e9,  1e10, 1e11,
    1e12, 1e13, 1e14, 1e15, 1e16, 1e17, 1e18, 1e19, 1e20, 1e21, 1e22};
}  // namespace detail

/// Converts between two units of the same dimension.
inline double unit_convert(double value, Unit from, Unit to) {
  const UnitInfo f = unit_info(from);
  const UnitInfo t = unit_info(to);
  if (f.dimension != t.dimension)
    throw unit_error(std::string("incompatible units: ") + f.name + " -> " + t.name);
  const int d = f.decade - t.decade;
  if (d >= 0) return value * detail::pow10_exact[d];
  return value / detail::pow10_exact[-d];
}

}  // namespace ionprobe
