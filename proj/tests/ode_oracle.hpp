#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace testutil {

/// Adaptive Cash-Karp Runge-Kutta 4(5) for a scalar ODE y' = f(t, y).
/// Independent of any closed-form solution; used to cross-check analytic
/// charge kinetics.
inline double integrate_ode(const std::function<double(double, double)>& f, double t0, double t1,
                            double y0, double rtol = 1e-11, double atol = 1e-16) {
  if (t1 < t0) throw std::invalid_argument("integrate_ode: t1 < t0");
  if (t1 == t0) return y0;

  constexpr double b21 = 1.0 / 5.0;
  constexpr double b31 = 3.0 / 40.0, b32 = 9.0 / 40.0;
  constexpr double b41 = 3.0 / 10.0, b42 = -9.0 / 10.0, b43 = 6.0 / 5.0;
  constexpr double b51 = -11.0 / 54.0, b52 = 5.0 / 2.0, b53 = -70.0 / 27.0, b54 = 35.0 / 27.0;
  constexpr double b61 = 1631.0 / 55296.0, b62 = 175.0 / 512.0, b63 = 575.0 / 13824.0,
                   b64 = 44275.0 / 110592.0, b65 = 253.0 / 4096.0;
  constexpr double a2 = 1.0 / 5.0, a3 = 3.0 / 10.0, a4 = 3.0 / 5.0, a5 = 1.0, a6 = 7.0 / 8.0;
  constexpr double c1 = 37.0 / 378.0, c3 = 250.0 / 621.0, c4 = 125.0 / 594.0,
                   c6 = 512.0 / 1771.0;
  constexpr double d1 = c1 - 2825.0 / 27648.0, d3 = c3 - 18575.0 / 48384.0,
                   d4 = c4 - 13525.0 / 55296.0, d5 = -277.0 / 14336.0, d6 = c6 - 1.0 / 4.0;

  double t = t0;
  double y = y0;
  double h = (t1 - t0) / 100.0;
  int steps = 0;
  while (t < t1) {
    if (++steps > 10'000'000) throw std::runtime_error("integrate_ode: step limit exceeded");
    h = std::min(h, t1 - t);
    const double k1 = f(t, y);
    const double k2 = f(t + a2 * h, y + h * b21 * k1);
    const double k3 = f(t + a3 * h, y + h * (b31 * k1 + b32 * k2));
    const double k4 = f(t + a4 * h, y + h * (b41 * k1 + b42 * k2 + b43 * k3));
    const double k5 = f(t + a5 * h, y + h * (b51 * k1 + b52 * k2 + b53 * k3 + b54 * k4));
    const double k6 =
        f(t + a6 * h, y + h * (b61 * k1 + b62 * k2 + b63 * k3 + b64 * k4 + b65 * k5));
    const double y_next = y + h * (c1 * k1 + c3 * k3 + c4 * k4 + c6 * k6);
    const double err = std::abs(h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6));
    const double tol = atol + rtol * std::max(std::abs(y), std::abs(y_next));
    if (err <= tol) {
      t += h;
      y = y_next;
      h *= err > 0.0 ? std::min(5.0, 0.9 * std::pow(tol / err, 0.2)) : 5.0;
    } else {
      h *= std::max(0.1, 0.9 * std::pow(tol / err, 0.25));
    }
    if (!(h > 0.0) || !std::isfinite(h)) throw std::runtime_error("integrate_ode: step underflow");
  }
  return y;
}

}  // namespace testutil
