#pragma once

#include <cmath>
#include <stdexcept>

#include "ionprobe/units.hpp"

namespace ionprobe {

/// Axial (in-plane) field shape of a vertical point dipole seen from lateral
/// offset dx at distance h: h*dx / (dx^2 + h^2)^(5/2), units 1/m^3.
///
/// Odd in dx; the magnitude peaks at dx = h/2.
inline double dipole_axial_kernel(double dx, double h) {
  if (!std::isfinite(dx) || !std::isfinite(h) || !(h > 0.0))
    throw std::domain_error("dipole_axial_kernel: requires finite dx and h > 0");
  const double r2 = dx * dx + h * h;
  const double r = std::sqrt(r2);
  return h * dx / (r2 * r2 * r);
}

/// Axial field shape of a point charge: dx / (dx^2 + h^2)^(3/2), units 1/m^2.
///
/// Odd in dx; the magnitude peaks at dx = h/sqrt(2).
inline double monopole_axial_kernel(double dx, double h) {
  if (!std::isfinite(dx) || !std::isfinite(h) || !(h > 0.0))
    throw std::domain_error("monopole_axial_kernel: requires finite dx and h > 0");
  const double r2 = dx * dx + h * h;
  return dx / (r2 * std::sqrt(r2));
}

/// Charge patch on the trap electrode's insulating film together with its
/// image in the metal underneath: a surface dipole of moment
/// n_q * e * dipole_length.
struct ElectrodeDipoleSource {
  double surface_offset_x = 0.0;  // laser spot position relative to the ion, m
  double trap_height = 0.0;       // ion-electrode distance, m
  double dipole_length = 0.0;     // charge-image separation (twice the film thickness), m
  double charge_count = 0.0;      // accumulated elementary charges, >= 0

  void validate() const {
    if (!std::isfinite(surface_offset_x))
      throw std::domain_error("electrode source: surface_offset_x must be finite");
    if (!(trap_height > 0.0) || !std::isfinite(trap_height))
      throw std::domain_error("electrode source: trap_height must be finite and > 0");
    if (!(dipole_length > 0.0) || !std::isfinite(dipole_length))
      throw std::domain_error("electrode source: dipole_length must be finite and > 0");
    if (!(charge_count >= 0.0) || !std::isfinite(charge_count))
      throw std::domain_error("electrode source: charge_count must be finite and >= 0");
  }
};

/// Localized charge on a dielectric plate facing the trap, optionally screened
/// by its image in the grounded electrode plane below the ion.
struct GlassMonopoleSource {
  double surface_offset_x = 0.0;  // laser spot position relative to the ion, m
  double glass_height = 0.0;      // ion-plate distance, m
  double trap_height = 0.0;       // ion-electrode distance (sets the image depth), m
  double charge_count = 0.0;      // accumulated elementary charges, >= 0
  bool include_image = true;

  void validate() const {
    if (!std::isfinite(surface_offset_x))
      throw std::domain_error("glass source: surface_offset_x must be finite");
    if (!(glass_height > 0.0) || !std::isfinite(glass_height))
      throw std::domain_error("glass source: glass_height must be finite and > 0");
    if (!(trap_height > 0.0) || !std::isfinite(trap_height))
      throw std::domain_error("glass source: trap_height must be finite and > 0");
    if (!(charge_count >= 0.0) || !std::isfinite(charge_count))
      throw std::domain_error("glass source: charge_count must be finite and >= 0");
  }
};

/// Axial field of the electrode surface dipole at the ion, V/m.
/// Positive for a positive surface offset; the attractive/repulsive sign of the
/// resulting ion motion is applied by the forward model.
inline double axial_field_electrode(const ElectrodeDipoleSource& src,
                                    const PhysicalConstants& pc = codata2018) {
  src.validate();
  const double moment = src.charge_count * pc.elementary_charge * src.dipole_length;
  return 3.0 * pc.coulomb_constant() * moment *
         dipole_axial_kernel(src.surface_offset_x, src.trap_height);
}

/// Axial field of the plate charge at the ion, V/m. With image screening on,
/// an opposite charge of equal magnitude mirrored in the electrode plane
/// (depth glass_height + 2*trap_height below the ion) is subtracted.
inline double axial_field_glass(const GlassMonopoleSource& src,
                                const PhysicalConstants& pc = codata2018) {
  src.validate();
  double kernel = monopole_axial_kernel(src.surface_offset_x, src.glass_height);
  if (src.include_image)
    kernel -= monopole_axial_kernel(src.surface_offset_x,
                                    src.glass_height + 2.0 * src.trap_height);
  return pc.coulomb_constant() * src.charge_count * pc.elementary_charge * kernel;
}

}  // namespace ionprobe
