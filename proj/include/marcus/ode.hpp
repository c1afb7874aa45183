#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace marcus {

/// Thrown when an integration cannot reach its tolerance within the
/// substep budget.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <std::size_t N>
using OdeState = std::array<double, N>;

inline constexpr int kMaxSubsteps = 1 << 21;

/// Classical fourth-order Runge-Kutta with `substeps` equal steps over an
/// interval of the given length. `field` is autonomous: y -> dy/du.
template <std::size_t N, class Field>
OdeState<N> rk4_fixed(const Field& field, OdeState<N> y, double length,
                      int substeps) {
  const double dt = length / substeps;
  const double half = 0.5 * dt;
  const double sixth = dt / 6.0;
  OdeState<N> tmp;
  for (int s = 0; s < substeps; ++s) {
    const OdeState<N> k1 = field(y);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + half * k1[i];
    const OdeState<N> k2 = field(tmp);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + half * k2[i];
    const OdeState<N> k3 = field(tmp);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + dt * k3[i];
    const OdeState<N> k4 = field(tmp);
    for (std::size_t i = 0; i < N; ++i) {
      y[i] += sixth * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
  }
  return y;
}

template <std::size_t N>
struct OdeSolution {
  OdeState<N> y;
  int substeps = 0;           // substeps of the finer of the two solves
  double error_estimate = 0;  // |y_2n - y_n| / 15, max over components
  double scaled_error = 0;    // same, components i > 0 divided by max(1, |y_i|)
};

namespace detail {

template <std::size_t N>
OdeSolution<N> richardson(const OdeState<N>& coarse, const OdeState<N>& fine,
                          int fine_substeps) {
  OdeSolution<N> out;
  out.substeps = fine_substeps;
  for (std::size_t i = 0; i < N; ++i) {
    const double diff = (fine[i] - coarse[i]) / 15.0;
    out.error_estimate = std::max(out.error_estimate, std::abs(diff));
    out.y[i] = fine[i] + diff;
    const double scale = i == 0 ? 1.0 : std::max(1.0, std::abs(out.y[i]));
    out.scaled_error = std::max(out.scaled_error, std::abs(diff) / scale);
  }
  return out;
}

}  // namespace detail

/// RK4 at n and 2n substeps combined by Richardson extrapolation. The
/// result is a smooth function of the initial data and of the field
/// parameters, which is what finite-difference stencils need.
template <std::size_t N, class Field>
OdeSolution<N> rk4_extrapolated(const Field& field, const OdeState<N>& y0,
                                double length, int substeps) {
  const OdeState<N> coarse = rk4_fixed<N>(field, y0, length, substeps);
  const OdeState<N> fine = rk4_fixed<N>(field, y0, length, 2 * substeps);
  return detail::richardson<N>(coarse, fine, 2 * substeps);
}

/// Step-halving driver: starts from `initial_substeps`, doubles until the
/// estimated error of the 2n-solution is below `tol`, then returns the
/// extrapolated value. Component 0 is the state and is held to `tol`
/// absolutely; the remaining components are sensitivities, whose error is
/// measured relative to max(1, |y_i|).
template <std::size_t N, class Field>
OdeSolution<N> rk4_adaptive(const Field& field, const OdeState<N>& y0,
                            double length, int initial_substeps, double tol,
                            int max_substeps = kMaxSubsteps) {
  if (!(tol > 0.0)) throw std::invalid_argument("ODE tolerance must be > 0");
  int n = std::max(1, initial_substeps);
  OdeState<N> coarse = rk4_fixed<N>(field, y0, length, n);
  while (2 * n <= max_substeps) {
    const OdeState<N> fine = rk4_fixed<N>(field, y0, length, 2 * n);
    OdeSolution<N> sol = detail::richardson<N>(coarse, fine, 2 * n);
    bool finite = true;
    for (double v : sol.y) finite = finite && std::isfinite(v);
    if (!finite) break;
    if (sol.scaled_error <= tol) return sol;
    coarse = fine;
    n *= 2;
  }
  throw ConvergenceError("RK4 did not reach tolerance " + std::to_string(tol) +
                         " within " + std::to_string(max_substeps) +
                         " substeps");
}

}  // namespace marcus
