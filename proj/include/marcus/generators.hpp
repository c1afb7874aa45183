#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "marcus/integrators.hpp"
#include "marcus/levy.hpp"
#include "marcus/marcus_flow.hpp"
#include "marcus/test_functions.hpp"

namespace marcus {

inline constexpr double kDefaultFdStep = 1e-4;

/// L~f(x) = a* f' + b^2 f'' / 2 + int_{|z|<=1} (f(phi^z(x)) - f(x) - f'(x) c(x) z) nu(dz),
/// a* = a + b' b / 2.
inline double apply_L_tilde(const EffectiveDrift& ed, const TestFunction& f,
                            double x) {
  const CoefficientModel& m = ed.model();
  const double f1 = f.derivative(x, 1);
  const double f2 = f.derivative(x, 2);
  const double bx = m.b(x);
  double value = (m.a(x) + ed.stratonovich_correction(x)) * f1 + 0.5 * bx * bx * f2;
  if (!ed.levy().is_zero()) {
    const double fx = f(x);
    const double cx = m.c(x);
    value += ed.levy().integrate(
        [&](double z) {
          return f(solve_flow(m, x, z, 0, ed.tol()).value) - fx - f1 * cx * z;
        },
        JumpRegion::small);
  }
  return value;
}

namespace detail {

// g(tau, w, z) = f(psi(x; tau, w, z)) evaluated with a pinned RK4 step count
// so that finite differences see a smooth function.
struct LiftedFunction {
  const CoefficientModel* model;
  const TestFunction* f;
  double x;
  int substeps;

  double operator()(double tau, double w, double z) const {
    if (tau == 0.0 && w == 0.0 && z == 0.0) return (*f)(x);
    return (*f)(solve_psi(*model, x, tau, w, z, kDefaultFlowTol, false, substeps).value);
  }
};

// Step count that resolves psi to `tol` everywhere on the box
// |tau'| <= |tau| + s, |w'| <= |w| + s, |z'| <= |z| + reach.
inline int pinned_substeps(const CoefficientModel& model, double x, double tau,
                           double w, double z, double s, double reach,
                           double tol) {
  int n = 1;
  for (double st : {-1.0, 1.0}) {
    for (double sw : {-1.0, 1.0}) {
      for (double sz : {-1.0, 1.0}) {
        const PsiResult r = solve_psi(model, x, tau + st * s,
                                      w + sw * s, z + sz * reach, tol);
        n = std::max(n, r.substeps_used);
      }
    }
  }
  return n;
}

}  // namespace detail

/// Qg(tau, w, z) for g = f o psi(x; .), i.e. Qf(psi(x; tau, w, z)).
/// Directional derivatives by central differences with one Richardson
/// refinement (steps fd_step and fd_step / 2). The second derivative in w
/// uses sqrt(fd_step) instead, since its rounding error scales like 1/s^2.
inline double apply_Q(const CoefficientModel& model, const LevyModel& levy,
                      const TestFunction& f, double x, double tau, double w,
                      double z, double fd_step = kDefaultFdStep,
                      double tol = kDefaultFlowTol) {
  if (!(fd_step > 0.0)) throw std::invalid_argument("fd_step must be > 0");
  const double ww_step = std::sqrt(fd_step);
  const double box = std::max(fd_step, ww_step);
  const double reach = levy.is_zero() ? box : std::max(1.0, box);
  const int n = detail::pinned_substeps(model, x, tau, w, z, box, reach, tol);
  const detail::LiftedFunction g{&model, &f, x, n};

  auto d_tau = [&](double s) { return (g(tau + s, w, z) - g(tau - s, w, z)) / (2.0 * s); };
  auto d_ww = [&](double s) {
    return (g(tau, w + s, z) - 2.0 * g(tau, w, z) + g(tau, w - s, z)) / (s * s);
  };
  auto d_z = [&](double s) { return (g(tau, w, z + s) - g(tau, w, z - s)) / (2.0 * s); };
  auto refine = [](auto&& d, double s) { return (4.0 * d(0.5 * s) - d(s)) / 3.0; };

  double value = refine(d_tau, fd_step) + 0.5 * refine(d_ww, ww_step);
  if (!levy.is_zero()) {
    const double g0 = g(tau, w, z);
    const double gz = refine(d_z, fd_step);
    value += levy.integrate(
        [&](double xi) { return g(tau, w, z + xi) - g0 - gz * xi; },
        JumpRegion::small);
  }
  return value;
}

struct IdentityProbe {
  double x;
  double l_tilde;
  double q;
  double discrepancy;
};

struct IdentityReport {
  std::vector<IdentityProbe> probes;
  double max_discrepancy = 0.0;
  double worst_x = 0.0;
  double tol = 0.0;
  bool pass = false;
};

/// Checks L~f(x) = Qf(psi(x; 0, 0, 0)) on every probe.
inline IdentityReport verify_L_equals_Q(const EffectiveDrift& ed,
                                        const TestFunction& f,
                                        const std::vector<double>& probes,
                                        double tol,
                                        double fd_step = kDefaultFdStep) {
  IdentityReport rep;
  rep.tol = tol;
  for (double x : probes) {
    if (!std::isfinite(x)) throw std::invalid_argument("probe must be finite");
    IdentityProbe p{x, 0.0, 0.0, 0.0};
    p.l_tilde = apply_L_tilde(ed, f, x);
    p.q = apply_Q(ed.model(), ed.levy(), f, x, 0.0, 0.0, 0.0, fd_step, ed.tol());
    p.discrepancy = std::abs(p.l_tilde - p.q);
    if (!(p.discrepancy <= rep.max_discrepancy)) {
      rep.max_discrepancy = std::isfinite(p.discrepancy) ? p.discrepancy : kInfinity;
      rep.worst_x = x;
    }
    rep.probes.push_back(p);
  }
  rep.pass = rep.max_discrepancy <= tol;
  return rep;
}

struct GrowthReport {
  double max_ratio = 0.0;  // max |L~f(x)| / (1 + x^2)
  double argmax = 0.0;
  double ratio_per_norm = 0.0;  // max_ratio / (||f'|| + ||f''||)
};

/// Empirical constant of |L~f(x)| <= C (||f'|| + ||f''||)(1 + x^2).
inline GrowthReport generator_growth(const EffectiveDrift& ed,
                                     const TestFunction& f,
                                     const std::vector<double>& xs) {
  GrowthReport rep;
  for (double x : xs) {
    const double r = std::abs(apply_L_tilde(ed, f, x)) / (1.0 + x * x);
    if (r > rep.max_ratio) {
      rep.max_ratio = r;
      rep.argmax = x;
    }
  }
  const SupNorms norms = f.sampled_sup_norms();
  const double denom = norms[1] + norms[2];
  rep.ratio_per_norm = denom > 0.0 ? rep.max_ratio / denom : 0.0;
  return rep;
}

}  // namespace marcus
