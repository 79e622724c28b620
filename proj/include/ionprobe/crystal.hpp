#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "ionprobe/detail/linalg.hpp"
#include "ionprobe/errors.hpp"
#include "ionprobe/units.hpp"

namespace ionprobe {

/// Harmonic axial confinement for a linear ion string.
struct TrapConfig {
  double axial_frequency = 0.0;  // omega, rad/s
  double trap_height = 0.0;      // ion-electrode distance, m
  IonSpecies ion;
  int ion_count = 1;

  void validate() const {
    ion.validate();
    if (!(axial_frequency > 0.0) || !std::isfinite(axial_frequency))
      throw std::domain_error("trap: axial_frequency must be finite and > 0");
    if (!(trap_height > 0.0) || !std::isfinite(trap_height))
      throw std::domain_error("trap: trap_height must be finite and > 0");
    if (ion_count < 1 || ion_count > 16)
      throw std::domain_error("trap: ion_count must be between 1 and 16");
  }

  /// Axial spring constant per ion, m*omega^2, N/m.
  double stiffness() const { return ion.mass * axial_frequency * axial_frequency; }

  /// Coulomb length scale l = (q^2 / (4 pi eps0 m omega^2))^(1/3), m.
  double length_scale(const PhysicalConstants& pc = codata2018) const {
    return std::cbrt(pc.coulomb_constant() * ion.charge * ion.charge / stiffness());
  }
};

/// Equilibrium positions of the string, ascending, plus their mean.
struct CrystalState {
  std::vector<double> positions;  // m
  double com_position = 0.0;      // m
};

namespace detail {

// Gradient and Hessian of the dimensionless potential
//   U(u) = sum_i u_i^2 / 2 + sum_{i<j} 1/|u_i - u_j|
// (positions in units of the Coulomb length scale, energy in m w^2 l^2).
inline double crystal_energy(const std::vector<double>& u) {
  double e = 0.0;
  for (double ui : u) e += 0.5 * ui * ui;
  for (std::size_t i = 0; i < u.size(); ++i)
    for (std::size_t j = i + 1; j < u.size(); ++j) e += 1.0 / std::abs(u[i] - u[j]);
  return e;
}

inline void crystal_gradient(const std::vector<double>& u, std::vector<double>& g) {
  const std::size_t n = u.size();
  g.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) g[i] = u[i];
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = u[i] - u[j];
      const double f = (d > 0.0 ? 1.0 : -1.0) / (d * d);
      g[i] -= f;
      g[j] += f;
    }
  }
}

inline void crystal_hessian(const std::vector<double>& u, Matrix& h) {
  const std::size_t n = u.size();
  h = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) h(i, i) = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = std::abs(u[i] - u[j]);
      const double c = 2.0 / (d * d * d);
      h(i, i) += c;
      h(j, j) += c;
      h(i, j) -= c;
      h(j, i) -= c;
    }
  }
}

inline bool strictly_ascending(const std::vector<double>& u) {
  for (std::size_t i = 1; i < u.size(); ++i)
    if (!(u[i] > u[i - 1])) return false;
  return true;
}

}  // namespace detail

/// Solves for the string's equilibrium positions with a damped Newton
/// iteration, starting from ion_count points spread uniformly over
/// [-N^0.6, +N^0.6] length scales. Converges when the dimensionless gradient
/// norm drops below 1e-12 (i.e. |grad U| <= 1e-12 * m w^2 l).
inline CrystalState equilibrium_positions(const TrapConfig& cfg,
                                          const PhysicalConstants& pc = codata2018) {
  cfg.validate();
  const int n = cfg.ion_count;
  const double scale = cfg.length_scale(pc);

  std::vector<double> u(static_cast<std::size_t>(n), 0.0);
  if (n > 1) {
    const double span = std::pow(static_cast<double>(n), 0.6);
    for (int i = 0; i < n; ++i)
      u[static_cast<std::size_t>(i)] = -span + 2.0 * span * i / (n - 1);
  }

  constexpr double tol = 1e-12;
  constexpr int max_iterations = 200;
  std::vector<double> g, trial;
  detail::Matrix h;
  double gnorm = 0.0;

  for (int iter = 0; iter < max_iterations; ++iter) {
    detail::crystal_gradient(u, g);
    gnorm = std::sqrt(std::inner_product(g.begin(), g.end(), g.begin(), 0.0));
    if (gnorm <= tol) break;

    detail::crystal_hessian(u, h);
    std::vector<double> rhs(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) rhs[i] = -g[i];
    auto step = detail::solve_spd(h, rhs);
    if (!step) throw conditioning_error("equilibrium_positions: Hessian not positive definite");

    // Backtrack until the energy decreases and the ordering survives.
    const double e0 = detail::crystal_energy(u);
    double t = 1.0;
    bool moved = false;
    trial.resize(u.size());
    for (int k = 0; k < 60; ++k, t *= 0.5) {
      for (std::size_t i = 0; i < u.size(); ++i) trial[i] = u[i] + t * (*step)[i];
      if (!detail::strictly_ascending(trial) && n > 1) continue;
      if (detail::crystal_energy(trial) < e0) {
        u = trial;
        moved = true;
        break;
      }
    }
    if (!moved) {
      // Near the minimum the energy comparison saturates at double rounding
      // while the gradient still resolves progress: accept the full Newton
      // step as long as it shrinks the gradient norm.
      for (std::size_t i = 0; i < u.size(); ++i) trial[i] = u[i] + (*step)[i];
      detail::crystal_gradient(trial, g);
      const double gnorm_trial =
          std::sqrt(std::inner_product(g.begin(), g.end(), g.begin(), 0.0));
      if ((detail::strictly_ascending(trial) || n == 1) && gnorm_trial < gnorm) {
        u = trial;
        continue;
      }
      break;  // stalled at numerical precision; tolerance check decides below
    }
  }

  detail::crystal_gradient(u, g);
  gnorm = std::sqrt(std::inner_product(g.begin(), g.end(), g.begin(), 0.0));
  if (!(gnorm <= tol))
    throw convergence_error("equilibrium_positions: Newton iteration did not reach tolerance",
                            gnorm * cfg.stiffness() * scale);

  CrystalState state;
  state.positions.resize(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) state.positions[i] = u[i] * scale;
  std::sort(state.positions.begin(), state.positions.end());
  state.com_position =
      std::accumulate(state.positions.begin(), state.positions.end(), 0.0) / n;
  return state;
}

/// Linearized center-of-mass displacement of the string in a weak axial field
/// profile: (q / (N m w^2)) * sum_i E(x_i), evaluated at the unperturbed
/// equilibrium positions.
inline double com_displacement(const TrapConfig& cfg,
                               const std::function<double(double)>& field_at,
                               const std::vector<double>& equilibrium,
                               const PhysicalConstants& = codata2018) {
  cfg.validate();
  if (equilibrium.size() != static_cast<std::size_t>(cfg.ion_count))
    throw std::invalid_argument("com_displacement: positions do not match ion_count");
  double sum = 0.0;
  for (double x : equilibrium) {
    const double e = field_at(x);
    if (!std::isfinite(e)) throw std::domain_error("com_displacement: field must be finite");
    sum += e;
  }
  return cfg.ion.charge * sum / (cfg.ion_count * cfg.stiffness());
}

inline double com_displacement(const TrapConfig& cfg,
                               const std::function<double(double)>& field_at,
                               const PhysicalConstants& pc = codata2018) {
  return com_displacement(cfg, field_at, equilibrium_positions(cfg, pc).positions, pc);
}

/// Uniform axial field that would displace the center of mass by dx: m w^2 dx / q.
inline double field_from_displacement(const TrapConfig& cfg, double displacement) {
  cfg.validate();
  if (!std::isfinite(displacement))
    throw std::domain_error("field_from_displacement: displacement must be finite");
  return cfg.stiffness() * displacement / cfg.ion.charge;
}

/// Per-ion force balancing a center-of-mass displacement dx: m w^2 dx.
inline double force_from_displacement(const TrapConfig& cfg, double displacement) {
  cfg.validate();
  if (!std::isfinite(displacement))
    throw std::domain_error("force_from_displacement: displacement must be finite");
  return cfg.stiffness() * displacement;
}

}  // namespace ionprobe
