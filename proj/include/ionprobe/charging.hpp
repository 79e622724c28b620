#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "ionprobe/errors.hpp"

namespace ionprobe {

/// One light-induced charging process:
///
///   dn/dt = P0 (1 - delta n) - gamma n        (laser on)
///   dn/dt = - gamma n                          (laser off)
///
/// P0 is the zero-coverage production rate (charges/s), delta the
/// self-limiting coefficient (1/charge), gamma the spontaneous relaxation
/// rate (1/s). gamma = 0 models irreversible charging.
struct ChargingParams {
  double production_rate = 0.0;     // P0, charges/s at the calibration power
  double saturation_coeff = 0.0;    // delta, 1/charge
  double relaxation_rate = 0.0;     // gamma, 1/s

  void validate() const {
    if (!(production_rate >= 0.0) || !std::isfinite(production_rate))
      throw std::domain_error("charging: production_rate must be finite and >= 0");
    if (!(saturation_coeff >= 0.0) || !std::isfinite(saturation_coeff))
      throw std::domain_error("charging: saturation_coeff must be finite and >= 0");
    if (!(relaxation_rate >= 0.0) || !std::isfinite(relaxation_rate))
      throw std::domain_error("charging: relaxation_rate must be finite and >= 0");
  }

  /// Effective settling rate under illumination, gamma_on = gamma + P0 * delta.
  double gamma_on() const { return relaxation_rate + production_rate * saturation_coeff; }

  /// Steady-state charge under illumination, n_eq = P0 / gamma_on.
  /// Only defined when gamma_on > 0 (otherwise charge grows without bound).
  double equilibrium_charge() const {
    const double g = gamma_on();
    if (!(g > 0.0))
      throw std::domain_error("charging: equilibrium charge undefined for gamma_on == 0");
    return production_rate / g;
  }
};

enum class Phase { on, off };

/// Closed-form solution of the charging ODE after time t in a single phase,
/// starting from n_start accumulated charges.
inline double charge_at(const ChargingParams& p, double t, Phase phase, double n_start = 0.0) {
  p.validate();
  if (!(t >= 0.0) || !std::isfinite(t)) throw std::domain_error("charge_at: t must be finite and >= 0");
  if (!std::isfinite(n_start) || n_start < 0.0)
    throw std::domain_error("charge_at: n_start must be finite and >= 0");

  if (phase == Phase::off) {
    if (p.relaxation_rate == 0.0) return n_start;
    return n_start * std::exp(-p.relaxation_rate * t);
  }
  const double g = p.gamma_on();
  if (g == 0.0) return n_start + p.production_rate * t;  // unbounded linear growth
  const double neq = p.production_rate / g;
  return neq + (n_start - neq) * std::exp(-g * t);
}

/// Up to two charging processes acting on the same surface site, fastest
/// settling rate first.
struct MultiProcessParams {
  std::vector<ChargingParams> processes;

  /// Sorts by descending gamma_on (ties: larger P0 first) and validates.
  static MultiProcessParams make(std::vector<ChargingParams> procs) {
    MultiProcessParams mp;
    mp.processes = std::move(procs);
    std::stable_sort(mp.processes.begin(), mp.processes.end(),
                     [](const ChargingParams& a, const ChargingParams& b) {
                       if (a.gamma_on() != b.gamma_on()) return a.gamma_on() > b.gamma_on();
                       return a.production_rate > b.production_rate;
                     });
    mp.validate();
    return mp;
  }

  void validate() const {
    if (processes.empty() || processes.size() > 2)
      throw std::domain_error("charging: between 1 and 2 processes supported");
    for (const auto& p : processes) p.validate();
    for (std::size_t i = 1; i < processes.size(); ++i) {
      if (processes[i - 1].gamma_on() < processes[i].gamma_on())
        throw std::domain_error("charging: processes must be ordered by descending gamma_on");
    }
  }
};

/// One stretch of the illumination program.
struct ScheduleSegment {
  double duration = 0.0;  // s, > 0
  bool laser_on = false;
  double power = 0.0;     // W at the surface; ignored while off
};

/// Piecewise-constant illumination program. Production rates inside a segment
/// scale linearly with segment power relative to calibration_power.
struct IlluminationSchedule {
  std::vector<ScheduleSegment> segments;
  double calibration_power = 0.0;  // W; the power at which P0 values are quoted

  void validate() const {
    if (segments.empty()) throw std::domain_error("schedule: needs at least one segment");
    if (!(calibration_power > 0.0) || !std::isfinite(calibration_power))
      throw std::domain_error("schedule: calibration_power must be finite and > 0");
    for (const auto& s : segments) {
      if (!(s.duration > 0.0) || !std::isfinite(s.duration))
        throw std::domain_error("schedule: segment duration must be finite and > 0");
      if (!(s.power >= 0.0) || !std::isfinite(s.power))
        throw std::domain_error("schedule: segment power must be finite and >= 0");
    }
  }

  double total_duration() const {
    double t = 0.0;
    for (const auto& s : segments) t += s.duration;
    return t;
  }

  /// Uniform on/off cycle quoted at its own power.
  static IlluminationSchedule on_off(double on_s, double off_s, double power) {
    IlluminationSchedule sched;
    sched.calibration_power = power;
    sched.segments.push_back({on_s, true, power});
    if (off_s > 0.0) sched.segments.push_back({off_s, false, 0.0});
    return sched;
  }
};

namespace detail {

inline ChargingParams power_scaled(const ChargingParams& p, double scale) {
  return ChargingParams{p.production_rate * scale, p.saturation_coeff, p.relaxation_rate};
}

}  // namespace detail

/// Total accumulated charge at the requested times (nondecreasing, within
/// [0, total schedule duration]), propagated per process through the schedule
/// with the closed-form phase solutions. Continuous across segment boundaries
/// by construction.
inline std::vector<double> charge_trajectory(const MultiProcessParams& params,
                                             const IlluminationSchedule& schedule,
                                             const std::vector<double>& sample_times) {
  params.validate();
  schedule.validate();
  const double total = schedule.total_duration();
  for (std::size_t i = 0; i < sample_times.size(); ++i) {
    const double t = sample_times[i];
    if (!std::isfinite(t) || t < 0.0 || t > total * (1.0 + 1e-12))
      throw std::domain_error("charge_trajectory: sample time outside the schedule span");
    if (i > 0 && t < sample_times[i - 1])
      throw std::domain_error("charge_trajectory: sample times must be nondecreasing");
  }

  const std::size_t n_proc = params.processes.size();
  const std::size_t n_seg = schedule.segments.size();

  // Per-process charge at the start of every segment.
  std::vector<std::vector<double>> seg_start(n_proc, std::vector<double>(n_seg + 1, 0.0));
  std::vector<double> seg_begin_time(n_seg + 1, 0.0);
  for (std::size_t k = 0; k < n_seg; ++k) {
    const ScheduleSegment& seg = schedule.segments[k];
    seg_begin_time[k + 1] = seg_begin_time[k] + seg.duration;
    for (std::size_t p = 0; p < n_proc; ++p) {
      if (seg.laser_on) {
        const ChargingParams scaled =
            detail::power_scaled(params.processes[p], seg.power / schedule.calibration_power);
        seg_start[p][k + 1] = charge_at(scaled, seg.duration, Phase::on, seg_start[p][k]);
      } else {
        seg_start[p][k + 1] =
            charge_at(params.processes[p], seg.duration, Phase::off, seg_start[p][k]);
      }
    }
  }

  std::vector<double> out(sample_times.size(), 0.0);
  std::size_t k = 0;
  for (std::size_t i = 0; i < sample_times.size(); ++i) {
    const double t = std::min(sample_times[i], total);
    while (k + 1 < n_seg && t > seg_begin_time[k + 1]) ++k;
    const ScheduleSegment& seg = schedule.segments[k];
    const double tau = t - seg_begin_time[k];
    double n_total = 0.0;
    for (std::size_t p = 0; p < n_proc; ++p) {
      if (seg.laser_on) {
        const ChargingParams scaled =
            detail::power_scaled(params.processes[p], seg.power / schedule.calibration_power);
        n_total += charge_at(scaled, tau, Phase::on, seg_start[p][k]);
      } else {
        n_total += charge_at(params.processes[p], tau, Phase::off, seg_start[p][k]);
      }
    }
    out[i] = n_total;
  }
  return out;
}

/// Net production rate at zero accumulated charge, sum_i P0_i, scaled to the
/// given fraction of the calibration power.
inline double initial_production_rate(const MultiProcessParams& params, double power_scale = 1.0) {
  params.validate();
  if (!(power_scale >= 0.0) || !std::isfinite(power_scale))
    throw std::domain_error("initial_production_rate: power_scale must be finite and >= 0");
  double sum = 0.0;
  for (const auto& p : params.processes) sum += p.production_rate;
  return power_scale * sum;
}

}  // namespace ionprobe
