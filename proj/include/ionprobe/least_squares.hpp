#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "ionprobe/detail/linalg.hpp"
#include "ionprobe/errors.hpp"

namespace ionprobe {

using VectorFunction = std::function<std::vector<double>(const std::vector<double>&)>;

struct LeastSquaresOptions {
  int max_iterations = 200;
  double cost_tolerance = 1e-10;      // relative decrease of sum(residual^2)
  double gradient_tolerance = 1e-8;   // inf-norm of J^T r, scaled units
  double fd_relative_step = 1e-6;     // central-difference step per parameter
  double fd_absolute_step_floor = 1e-12;  // in scaled (guess-normalized) units
  double initial_lambda = 1e-3;
};

struct LeastSquaresSolution {
  std::vector<double> parameters;
  /// 1-sigma proxies from the Gauss-Newton normal matrix at the optimum,
  /// sqrt(diag((J^T J)^-1) * SSE/(n-p)). A curvature estimate, not a
  /// calibrated confidence interval.
  std::vector<double> standard_error;
  double residual_rms = 0.0;  // data units
  int iterations = 0;
  bool converged = false;
  /// Cost after each accepted step, index 0 = initial cost. Non-increasing.
  std::vector<double> accepted_costs;
};

/// Central-difference Jacobian of fn at x; row i, column j = d fn_i / d x_j.
inline detail::Matrix finite_difference_jacobian(const VectorFunction& fn,
                                                 std::vector<double> x,
                                                 double relative_step = 1e-6,
                                                 double absolute_floor = 1e-12) {
  const std::size_t p = x.size();
  const std::vector<double> f0 = fn(x);
  detail::Matrix j(f0.size(), p);
  for (std::size_t col = 0; col < p; ++col) {
    const double x0 = x[col];
    const double h = std::max(relative_step * std::abs(x0), absolute_floor);
    x[col] = x0 + h;
    const std::vector<double> fp = fn(x);
    x[col] = x0 - h;
    const std::vector<double> fm = fn(x);
    x[col] = x0;
    if (fp.size() != f0.size() || fm.size() != f0.size())
      throw std::invalid_argument("finite_difference_jacobian: function changed output size");
    for (std::size_t row = 0; row < f0.size(); ++row)
      j(row, col) = (fp[row] - fm[row]) / (2.0 * h);
  }
  return j;
}

/// Levenberg-Marquardt least squares: minimizes sum((predict(theta) - observed)^2)
/// over box-constrained theta. Parameters are normalized by the magnitude of
/// the initial guess and residuals by the data scale, so the tolerances above
/// are dimensionless. Trial steps are projected onto the bounds.
inline LeastSquaresSolution solve_least_squares(const VectorFunction& predict,
                                                const std::vector<double>& observed,
                                                const std::vector<double>& initial,
                                                const std::vector<double>& lower,
                                                const std::vector<double>& upper,
                                                const LeastSquaresOptions& options = {}) {
  const std::size_t p = initial.size();
  const std::size_t n = observed.size();
  if (p == 0) throw std::invalid_argument("least squares: no free parameters");
  if (n < p) throw std::invalid_argument("least squares: fewer data points than parameters");
  if (lower.size() != p || upper.size() != p)
    throw std::invalid_argument("least squares: bounds must match parameter count");
  for (std::size_t j = 0; j < p; ++j) {
    if (!std::isfinite(lower[j]) || !std::isfinite(upper[j]) || !(lower[j] < upper[j]))
      throw std::invalid_argument("least squares: bounds must be finite with lower < upper");
    if (!std::isfinite(initial[j]) || initial[j] < lower[j] || initial[j] > upper[j])
      throw std::invalid_argument("least squares: initial guess must lie within bounds");
  }

  double y_scale = 0.0;
  for (double y : observed) y_scale = std::max(y_scale, std::abs(y));
  if (!(y_scale > 0.0)) y_scale = 1.0;

  std::vector<double> scale(p);
  for (std::size_t j = 0; j < p; ++j)
    scale[j] = std::abs(initial[j]) > 0.0 ? std::abs(initial[j]) : 1.0;

  std::vector<double> u(p), lo(p), hi(p);
  for (std::size_t j = 0; j < p; ++j) {
    u[j] = initial[j] / scale[j];
    lo[j] = lower[j] / scale[j];
    hi[j] = upper[j] / scale[j];
  }

  auto scaled_residual = [&](const std::vector<double>& uu) -> std::optional<std::vector<double>> {
    std::vector<double> theta(p);
    for (std::size_t j = 0; j < p; ++j) theta[j] = uu[j] * scale[j];
    std::vector<double> pred = predict(theta);
    if (pred.size() != n)
      throw std::invalid_argument("least squares: model returned wrong number of predictions");
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) {
      r[i] = (pred[i] - observed[i]) / y_scale;
      if (!std::isfinite(r[i])) return std::nullopt;
    }
    return r;
  };
  auto cost_of = [](const std::vector<double>& r) {
    double c = 0.0;
    for (double v : r) c += v * v;
    return c;
  };

  auto maybe_r = scaled_residual(u);
  if (!maybe_r) throw conditioning_error("least squares: model is not finite at the initial guess");
  std::vector<double> r = std::move(*maybe_r);
  double cost = cost_of(r);

  LeastSquaresSolution sol;
  sol.accepted_costs.push_back(cost);

  auto fd_wrapper = [&](const std::vector<double>& uu) {
    auto rr = scaled_residual(uu);
    if (!rr) throw conditioning_error("least squares: model is not finite near the iterate");
    return *rr;
  };

  double lambda = options.initial_lambda;
  bool converged = false;
  int iterations = 0;
  detail::Matrix jac;

  for (int iter = 1; iter <= options.max_iterations && !converged; ++iter) {
    iterations = iter;
    jac = finite_difference_jacobian(fd_wrapper, u, options.fd_relative_step,
                                     options.fd_absolute_step_floor);

    detail::Matrix a(p, p);
    std::vector<double> g(p, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < p; ++j) g[j] += jac(i, j) * r[i];
    for (std::size_t j = 0; j < p; ++j)
      for (std::size_t k = j; k < p; ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += jac(i, j) * jac(i, k);
        a(j, k) = s;
        a(k, j) = s;
      }

    double gmax = 0.0, dmax = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      gmax = std::max(gmax, std::abs(g[j]));
      dmax = std::max(dmax, a(j, j));
    }
    if (!std::isfinite(dmax)) throw conditioning_error("least squares: Jacobian is not finite");
    if (gmax < options.gradient_tolerance) {
      converged = true;
      break;
    }
    if (!(dmax > 0.0)) throw conditioning_error("least squares: Jacobian is singular (all zero)");

    bool accepted = false;
    while (true) {
      detail::Matrix damped = a;
      for (std::size_t j = 0; j < p; ++j)
        damped(j, j) += lambda * std::max(a(j, j), 1e-12 * dmax);
      std::vector<double> rhs(p);
      for (std::size_t j = 0; j < p; ++j) rhs[j] = -g[j];
      auto step = detail::solve_spd(damped, rhs);
      if (!step) {
        lambda *= 10.0;
        if (lambda > 1e15) throw conditioning_error("least squares: normal equations are singular");
        continue;
      }
      std::vector<double> u_trial(p);
      for (std::size_t j = 0; j < p; ++j)
        u_trial[j] = std::clamp(u[j] + (*step)[j], lo[j], hi[j]);

      auto r_trial = scaled_residual(u_trial);
      const double cost_trial =
          r_trial ? cost_of(*r_trial) : std::numeric_limits<double>::infinity();
      if (cost_trial < cost) {
        const double prev = cost;
        u = std::move(u_trial);
        r = std::move(*r_trial);
        cost = cost_trial;
        sol.accepted_costs.push_back(cost);
        lambda = std::max(lambda / 3.0, 1e-14);
        accepted = true;
        if (prev - cost <= options.cost_tolerance * std::max(prev, 1e-300) || cost == 0.0)
          converged = true;
        break;
      }
      lambda *= 4.0;
      if (lambda > 1e15) break;  // no usable descent direction remains
    }
    if (!accepted) {
      // The damped step degenerated to zero length without lowering the cost:
      // the iterate is a minimum to working precision.
      converged = true;
      break;
    }
  }

  // Gauss-Newton error proxy at the optimum.
  jac = finite_difference_jacobian(fd_wrapper, u, options.fd_relative_step,
                                   options.fd_absolute_step_floor);
  detail::Matrix a(p, p);
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t k = j; k < p; ++k) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += jac(i, j) * jac(i, k);
      a(j, k) = s;
      a(k, j) = s;
    }
  double dmax = 0.0;
  for (std::size_t j = 0; j < p; ++j) dmax = std::max(dmax, a(j, j));
  const double sigma2 = cost / static_cast<double>(std::max<std::size_t>(n - p, 1));

  sol.standard_error.assign(p, std::numeric_limits<double>::infinity());
  for (const double jitter : {0.0, 1e-14, 1e-12, 1e-10, 1e-8, 1e-6}) {
    detail::Matrix reg = a;
    for (std::size_t j = 0; j < p; ++j) reg(j, j) += jitter * std::max(dmax, 1e-300);
    bool ok = true;
    std::vector<double> diag(p, 0.0);
    for (std::size_t j = 0; j < p && ok; ++j) {
      std::vector<double> e(p, 0.0);
      e[j] = 1.0;
      auto col = detail::solve_spd(reg, e);
      if (!col || !((*col)[j] >= 0.0)) {
        ok = false;
        break;
      }
      diag[j] = (*col)[j];
    }
    if (ok) {
      for (std::size_t j = 0; j < p; ++j)
        sol.standard_error[j] = scale[j] * std::sqrt(sigma2 * diag[j]);
      break;
    }
  }

  sol.parameters.resize(p);
  for (std::size_t j = 0; j < p; ++j) sol.parameters[j] = u[j] * scale[j];
  sol.residual_rms = std::sqrt(cost / static_cast<double>(n)) * y_scale;
  sol.iterations = iterations;
  sol.converged = converged;
  return sol;
}

}  // namespace ionprobe
