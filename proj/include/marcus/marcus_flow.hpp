#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "marcus/coefficients.hpp"
#include "marcus/ode.hpp"

namespace marcus {

inline constexpr double kDefaultFlowTol = 1e-10;
inline constexpr double kMonteCarloFlowTol = 1e-8;

/// Time-u map of du phi = c(phi) z together with its x-derivatives.
struct FlowResult {
  double value = 0.0;
  std::array<double, 4> derivs{1.0, 0.0, 0.0, 0.0};  // phi_x .. phi_xxxx
  int substeps_used = 0;
  double local_error_estimate = 0.0;
};

struct PsiSensitivities {
  double tau = 0.0;
  double w = 0.0;
  double z = 0.0;
};

/// Time-1 map of du psi = a(psi) tau + b(psi) w + c(psi) z.
struct PsiResult {
  double value = 0.0;
  std::optional<PsiSensitivities> sensitivities;
  int substeps_used = 0;
  double local_error_estimate = 0.0;
};

namespace detail {

inline double lipschitz_or_local(const ScalarField& f, double x) {
  const double global = f.sup_norm(1);
  return std::isfinite(global) ? global : std::abs(f.derivative(x, 1));
}

}  // namespace detail

/// Substep count per unit u: max(8, ceil(4 * (|a'| tau + |b'| |w| + |c'| |z|))).
inline int initial_substeps(const CoefficientModel& m, double x, double tau,
                            double w, double z) {
  const double stiffness =
      detail::lipschitz_or_local(m.a, x) * std::abs(tau) +
      detail::lipschitz_or_local(m.b, x) * std::abs(w) +
      detail::lipschitz_or_local(m.c, x) * std::abs(z);
  const double n = std::ceil(4.0 * stiffness);
  return n > 1e6 ? 1000000 : std::max(8, static_cast<int>(n));
}

namespace detail {

// Variational system of the jump flow: phi, phi_x, ..., up to N-1
// derivatives, obtained by differentiating du phi = z c(phi) in x.
template <std::size_t N>
struct FlowField {
  const ScalarField* c;
  double z;

  OdeState<N> operator()(const OdeState<N>& y) const {
    OdeState<N> dy{};
    const double p = y[0];
    dy[0] = z * (*c)(p);
    if constexpr (N >= 2) {
      const double c1 = c->derivative(p, 1);
      dy[1] = z * c1 * y[1];
      if constexpr (N >= 3) {
        const double c2 = c->derivative(p, 2);
        const double y1 = y[1], y2 = y[2];
        dy[2] = z * (c2 * y1 * y1 + c1 * y2);
        if constexpr (N >= 4) {
          const double c3 = c->derivative(p, 3);
          const double y3 = y[3];
          dy[3] = z * (c3 * y1 * y1 * y1 + 3.0 * c2 * y1 * y2 + c1 * y3);
          if constexpr (N >= 5) {
            const double c4 = c->derivative(p, 4);
            const double y4 = y[4];
            dy[4] = z * (c4 * y1 * y1 * y1 * y1 + 6.0 * c3 * y1 * y1 * y2 +
                         3.0 * c2 * y2 * y2 + 4.0 * c2 * y1 * y3 + c1 * y4);
          }
        }
      }
    }
    return dy;
  }
};

template <std::size_t N>
FlowResult solve_flow_impl(const CoefficientModel& model, double x, double z,
                           double tol, double u) {
  OdeState<N> y0{};
  y0[0] = x;
  if constexpr (N >= 2) y0[1] = 1.0;
  const FlowField<N> field{&model.c, z};
  const int n0 = initial_substeps(model, x, 0.0, 0.0, z * u);
  const OdeSolution<N> sol = rk4_adaptive<N>(field, y0, u, n0, tol);
  FlowResult out;
  out.value = sol.y[0];
  out.derivs = {1.0, 0.0, 0.0, 0.0};
  for (std::size_t k = 1; k < N; ++k) out.derivs[k - 1] = sol.y[k];
  out.substeps_used = sol.substeps;
  out.local_error_estimate = sol.error_estimate;
  return out;
}

struct PsiField {
  const CoefficientModel* m;
  double tau, w, z;
  OdeState<1> operator()(const OdeState<1>& y) const {
    const double p = y[0];
    return {m->a(p) * tau + m->b(p) * w + m->c(p) * z};
  }
};

// psi together with its first-order sensitivities in (tau, w, z):
// du psi_tau = a(psi) + J psi_tau, J = a'(psi) tau + b'(psi) w + c'(psi) z,
// and likewise for w and z.
struct PsiSensitivityField {
  const CoefficientModel* m;
  double tau, w, z;
  OdeState<4> operator()(const OdeState<4>& y) const {
    const double p = y[0];
    const double av = m->a(p), bv = m->b(p), cv = m->c(p);
    const double jac = m->a.derivative(p, 1) * tau +
                       m->b.derivative(p, 1) * w + m->c.derivative(p, 1) * z;
    return {av * tau + bv * w + cv * z, av + jac * y[1], bv + jac * y[2],
            cv + jac * y[3]};
  }
};

}  // namespace detail

/// Marcus jump flow phi^z(u; x) and its x-derivatives up to `order`.
/// Throws ConvergenceError when the tolerance cannot be met.
inline FlowResult solve_flow(const CoefficientModel& model, double x, double z,
                             int order = 1, double tol = kDefaultFlowTol,
                             double u = 1.0) {
  if (order < 0 || order > kMaxDerivativeOrder) {
    throw std::invalid_argument("flow derivative order must be in [0, 4]");
  }
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be > 0");
  if (z == 0.0 || u == 0.0) {
    FlowResult identity;
    identity.value = x;
    return identity;
  }
  switch (order) {
    case 0: return detail::solve_flow_impl<1>(model, x, z, tol, u);
    case 1: return detail::solve_flow_impl<2>(model, x, z, tol, u);
    case 2: return detail::solve_flow_impl<3>(model, x, z, tol, u);
    case 3: return detail::solve_flow_impl<4>(model, x, z, tol, u);
    default: return detail::solve_flow_impl<5>(model, x, z, tol, u);
  }
}

/// One-step map psi(x; tau, w, z). With `fixed_substeps > 0` the step count
/// is pinned (no halving), making the result smooth in (x, tau, w, z).
inline PsiResult solve_psi(const CoefficientModel& model, double x, double tau,
                           double w, double z, double tol = kDefaultFlowTol,
                           bool with_sensitivities = false,
                           int fixed_substeps = 0) {
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be > 0");
  PsiResult out;
  if (!with_sensitivities) {
    if (tau == 0.0 && w == 0.0 && z == 0.0) {
      out.value = x;
      return out;
    }
    const detail::PsiField field{&model, tau, w, z};
    const OdeSolution<1> sol =
        fixed_substeps > 0
            ? rk4_extrapolated<1>(field, {x}, 1.0, fixed_substeps)
            : rk4_adaptive<1>(field, {x}, 1.0,
                              initial_substeps(model, x, tau, w, z), tol);
    out.value = sol.y[0];
    out.substeps_used = sol.substeps;
    out.local_error_estimate = sol.error_estimate;
    return out;
  }
  const detail::PsiSensitivityField field{&model, tau, w, z};
  const OdeState<4> y0{x, 0.0, 0.0, 0.0};
  const OdeSolution<4> sol =
      fixed_substeps > 0
          ? rk4_extrapolated<4>(field, y0, 1.0, fixed_substeps)
          : rk4_adaptive<4>(field, y0, 1.0,
                            initial_substeps(model, x, tau, w, z), tol);
  out.value = sol.y[0];
  out.sensitivities = PsiSensitivities{sol.y[1], sol.y[2], sol.y[3]};
  out.substeps_used = sol.substeps;
  out.local_error_estimate = sol.error_estimate;
  return out;
}

/// phi^z(u; x) - x - c(x) z u; O(z^2 |c(x)|) for |z| <= 1.
inline double flow_remainder(const CoefficientModel& model, double x, double z,
                             double u, double tol = kDefaultFlowTol) {
  if (u < 0.0 || u > 1.0) throw std::invalid_argument("u must lie in [0, 1]");
  return solve_flow(model, x, z, 0, tol, u).value - x - model.c(x) * z * u;
}

// ---------------------------------------------------------------------------
// Growth bounds of the flow derivatives.

struct FlowSample {
  double x;
  double z;
};

struct BoundViolation {
  FlowSample sample;
  int order;  // 1..4
  double value;
  double bound;
};

struct BoundReport {
  std::size_t n_samples = 0;
  std::array<std::size_t, 4> violations{};
  /// max |derivative| / bound per order; the empirical constant.
  std::array<double, 4> max_ratio{};
  std::vector<BoundViolation> details;
  bool ok() const {
    return std::all_of(violations.begin(), violations.end(),
                       [](std::size_t v) { return v == 0; });
  }
};

/// |phi_x| <= e^{L|z|}, |phi_xx| <= |z| e^{3L|z|}, |phi_xxx| <= z^2 e^{5L|z|},
/// |phi_xxxx| <= |z|^3 e^{8L|z|}, with L = ||c'||.
inline std::array<double, 4> flow_derivative_bounds(double lip_c, double z) {
  const double az = std::abs(z);
  const double e = lip_c * az;
  return {std::exp(e), az * std::exp(3.0 * e), az * az * std::exp(5.0 * e),
          az * az * az * std::exp(8.0 * e)};
}

inline BoundReport assert_appendix_bounds(const CoefficientModel& model,
                                          const std::vector<FlowSample>& sample,
                                          double tol = kDefaultFlowTol) {
  const double lip = model.bound_catalog().c[1];
  if (!std::isfinite(lip)) {
    throw std::invalid_argument("bound catalog has no finite ||c'||");
  }
  BoundReport report;
  report.n_samples = sample.size();
  for (const FlowSample& s : sample) {
    const FlowResult r = solve_flow(model, s.x, s.z, 4, tol);
    const auto bounds = flow_derivative_bounds(lip, s.z);
    for (std::size_t k = 0; k < 4; ++k) {
      const double v = std::abs(r.derivs[k]);
      // Slack for the integration error of the computed derivative.
      const double slack = 1e-9 * std::max(1.0, bounds[k]);
      if (bounds[k] > 0.0) {
        report.max_ratio[k] = std::max(report.max_ratio[k], v / bounds[k]);
      }
      if (v > bounds[k] + slack) {
        ++report.violations[k];
        report.details.push_back({s, static_cast<int>(k) + 1, v, bounds[k]});
      }
    }
  }
  return report;
}

/// Growth of the first-order psi sensitivities relative to
/// (1 + |x|) e^{2(|a'| tau + |b'| |w| + |c'| |z|)}.
struct PsiGrowthReport {
  double empirical_constant = 0.0;  // max ratio over points and directions
  double max_fd_mismatch = 0.0;     // |analytic - finite difference|
};

struct PsiPoint {
  double x, tau, w, z;
};

inline PsiGrowthReport psi_sensitivity_growth(const CoefficientModel& model,
                                              const std::vector<PsiPoint>& pts,
                                              double fd_step = 1e-4) {
  PsiGrowthReport report;
  const double la = model.lip_a(), lb = model.lip_b(), lc = model.lip_c();
  for (const PsiPoint& p : pts) {
    const int n = 2 * initial_substeps(model, p.x, std::abs(p.tau) + fd_step,
                                       std::abs(p.w) + fd_step,
                                       std::abs(p.z) + fd_step);
    const PsiResult r =
        solve_psi(model, p.x, p.tau, p.w, p.z, kDefaultFlowTol, true, n);
    auto psi_at = [&](double t, double w, double z) {
      return solve_psi(model, p.x, t, w, z, kDefaultFlowTol, false, n).value;
    };
    const double h = fd_step;
    const std::array<double, 3> fd{
        (psi_at(p.tau + h, p.w, p.z) - psi_at(p.tau - h, p.w, p.z)) / (2 * h),
        (psi_at(p.tau, p.w + h, p.z) - psi_at(p.tau, p.w - h, p.z)) / (2 * h),
        (psi_at(p.tau, p.w, p.z + h) - psi_at(p.tau, p.w, p.z - h)) / (2 * h)};
    const std::array<double, 3> an{r.sensitivities->tau, r.sensitivities->w,
                                   r.sensitivities->z};
    const double shape = (1.0 + std::abs(p.x)) *
                         std::exp(2.0 * (la * std::abs(p.tau) +
                                         lb * std::abs(p.w) +
                                         lc * std::abs(p.z)));
    for (std::size_t i = 0; i < 3; ++i) {
      report.max_fd_mismatch =
          std::max(report.max_fd_mismatch, std::abs(fd[i] - an[i]));
      report.empirical_constant =
          std::max(report.empirical_constant, std::abs(fd[i]) / shape);
    }
  }
  return report;
}

}  // namespace marcus
