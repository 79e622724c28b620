#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>

namespace testutil {

/// Golden-section search for the maximum of a unimodal function on [a, b];
/// returns the abscissa to within tol.
inline double golden_section_maximize(const std::function<double(double)>& f, double a, double b,
                                      double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tol) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::abs(want);
}

}  // namespace testutil
