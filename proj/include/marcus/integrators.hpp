#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "marcus/coefficients.hpp"
#include "marcus/levy.hpp"
#include "marcus/marcus_flow.hpp"
#include "marcus/rng.hpp"

namespace marcus {

inline constexpr double kMaxGridSteps = 1e8;

/// A jump of the driver with its absolute time.
struct PathJump {
  double time;
  double size;
  std::size_t base_step;  // index of the base-grid step containing `time`
  bool large;             // |size| > 1
  double bridge_normal;   // N(0,1) used to place W at the jump time
};

/// Increments of the driver over one step of a coarse grid.
struct StepIncrement {
  double dW = 0.0;
  double dZ = 0.0;        // dZ_small + sum of large jumps
  double dZ_small = 0.0;  // compensated jumps with |z| <= 1
  std::size_t jump_begin = 0;  // range into DrivingPath::jumps()
  std::size_t jump_end = 0;
};

/// One realisation of the driving noise (W, Z) on [0, T], fixed on a base
/// grid. Every coarser grid whose step count divides the base count sees
/// the same realisation, which is what couples the scheme to its oracle.
class DrivingPath {
 public:
  DrivingPath(const LevyModel& levy, std::uint64_t seed,
              std::uint64_t path_index, double horizon, std::size_t base_steps)
      : seed_(seed),
        path_index_(path_index),
        horizon_(horizon),
        small_mean_(levy.small_jump_mean()) {
    if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be > 0");
    if (base_steps == 0 || static_cast<double>(base_steps) > kMaxGridSteps) {
      throw std::invalid_argument("base step count out of range");
    }
    const double hb = horizon / static_cast<double>(base_steps);
    IncrementStream stream(seed, path_index);
    base_dw_.resize(base_steps);
    for (std::size_t k = 0; k < base_steps; ++k) {
      base_dw_[k] = stream.brownian_increment(hb);
      if (levy.is_zero()) continue;
      LevyIncrement inc = stream.levy_increment(levy, hb);
      if (inc.small.empty() && inc.large.empty()) continue;
      CounterRng bridge(seed, path_index, k, Substream::bridge);
      const double t0 = static_cast<double>(k) * hb;
      std::size_t i = 0, j = 0;
      while (i < inc.small.size() || j < inc.large.size()) {
        const bool take_small =
            j >= inc.large.size() ||
            (i < inc.small.size() && inc.small[i].offset < inc.large[j].offset);
        const StepJump& sj = take_small ? inc.small[i++] : inc.large[j++];
        jumps_.push_back(
            {t0 + sj.offset, sj.size, k, !take_small, standard_normal(bridge)});
      }
    }
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t path_index() const { return path_index_; }
  double horizon() const { return horizon_; }
  std::size_t base_steps() const { return base_dw_.size(); }
  std::span<const double> base_brownian() const { return base_dw_; }
  const std::vector<PathJump>& jumps() const { return jumps_; }
  double small_jump_mean() const { return small_mean_; }

  /// Step count of a grid with step h; must divide the base count.
  std::size_t steps_for(double h) const {
    if (!(h > 0.0)) throw std::invalid_argument("time step must be > 0");
    const double ratio = horizon_ / h;
    if (ratio > kMaxGridSteps) throw std::invalid_argument("too many steps");
    const auto n = static_cast<std::size_t>(std::llround(ratio));
    if (n == 0 || std::abs(static_cast<double>(n) * h - horizon_) > 1e-9 * horizon_) {
      throw std::invalid_argument("T/h is not an integer");
    }
    if (base_steps() % n != 0) {
      throw std::invalid_argument("grid is not a coarsening of the base grid");
    }
    return n;
  }

  std::vector<StepIncrement> increments(std::size_t steps) const {
    if (steps == 0 || base_steps() % steps != 0) {
      throw std::invalid_argument("grid is not a coarsening of the base grid");
    }
    const std::size_t ratio = base_steps() / steps;
    const double h = horizon_ / static_cast<double>(steps);
    std::vector<StepIncrement> out(steps);
    std::size_t jump = 0;
    for (std::size_t k = 0; k < steps; ++k) {
      StepIncrement& inc = out[k];
      for (std::size_t b = k * ratio; b < (k + 1) * ratio; ++b) inc.dW += base_dw_[b];
      inc.jump_begin = jump;
      double small_sum = 0.0, large_sum = 0.0;
      while (jump < jumps_.size() && jumps_[jump].base_step < (k + 1) * ratio) {
        (jumps_[jump].large ? large_sum : small_sum) += jumps_[jump].size;
        ++jump;
      }
      inc.jump_end = jump;
      inc.dZ_small = small_sum - h * small_mean_;
      inc.dZ = inc.dZ_small + large_sum;
    }
    return out;
  }

 private:
  std::uint64_t seed_;
  std::uint64_t path_index_;
  double horizon_;
  double small_mean_;
  std::vector<double> base_dw_;
  std::vector<PathJump> jumps_;
};

enum class SchemeTag { wong_zakai, ito_reference, exact_linear, small_jump_only };

inline const char* to_string(SchemeTag s) {
  switch (s) {
    case SchemeTag::wong_zakai: return "wong_zakai";
    case SchemeTag::ito_reference: return "ito_reference";
    case SchemeTag::exact_linear: return "exact_linear";
    default: return "small_jump_only";
  }
}

/// Discrete trajectory on the grid k*h, k = 0..floor(T/h).
struct PathGrid {
  double h = 0.0;
  std::vector<double> times;
  std::vector<double> states;
  std::uint64_t seed = 0;
  std::uint64_t path_index = 0;
  SchemeTag scheme = SchemeTag::wong_zakai;
  std::vector<StepIncrement> increments;

  double terminal() const { return states.back(); }
};

namespace detail {

inline PathGrid make_grid(const DrivingPath& path, std::size_t steps,
                          SchemeTag tag) {
  PathGrid g;
  g.h = path.horizon() / static_cast<double>(steps);
  g.seed = path.seed();
  g.path_index = path.path_index();
  g.scheme = tag;
  g.times.resize(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) g.times[k] = static_cast<double>(k) * g.h;
  g.states.reserve(steps + 1);
  return g;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Wong-Zakai scheme.

/// X_{k+1} = psi(X_k; h, dW, dZ).
inline double wz_step(const CoefficientModel& model, double x, double h,
                      double dW, double dZ, double tol = kMonteCarloFlowTol) {
  if (!(h > 0.0)) throw std::invalid_argument("time step must be > 0");
  return solve_psi(model, x, h, dW, dZ, tol).value;
}

/// Terminal value of the scheme on the grid with `steps` steps.
inline double wz_terminal(const CoefficientModel& model, double x0,
                          const DrivingPath& path, std::size_t steps,
                          double tol = kMonteCarloFlowTol,
                          bool small_jumps_only = false) {
  const double h = path.horizon() / static_cast<double>(steps);
  double x = x0;
  for (const StepIncrement& inc : path.increments(steps)) {
    x = wz_step(model, x, h, inc.dW, small_jumps_only ? inc.dZ_small : inc.dZ, tol);
  }
  return x;
}

inline PathGrid simulate_wz_path(const CoefficientModel& model, double x0,
                                 double h, const DrivingPath& path,
                                 double tol = kMonteCarloFlowTol,
                                 bool small_jumps_only = false) {
  const std::size_t n = path.steps_for(h);
  PathGrid g = detail::make_grid(
      path, n, small_jumps_only ? SchemeTag::small_jump_only : SchemeTag::wong_zakai);
  g.increments = path.increments(n);
  double x = x0;
  g.states.push_back(x);
  for (const StepIncrement& inc : g.increments) {
    x = wz_step(model, x, g.h, inc.dW, small_jumps_only ? inc.dZ_small : inc.dZ, tol);
    g.states.push_back(x);
  }
  return g;
}

/// Convenience overload: draws the driving path for (seed, path_index) on
/// the scheme's own grid.
inline PathGrid simulate_wz_path(const CoefficientModel& model,
                                 const LevyModel& levy, double x0, double T,
                                 double h, std::uint64_t seed,
                                 std::uint64_t path_index,
                                 double tol = kMonteCarloFlowTol) {
  if (!(h > 0.0) || T / h > kMaxGridSteps) {
    throw std::invalid_argument("invalid time step");
  }
  const DrivingPath path(levy, seed, path_index, T,
                         static_cast<std::size_t>(std::llround(T / h)));
  return simulate_wz_path(model, x0, h, path, tol);
}

// ---------------------------------------------------------------------------
// Jump-adapted reference integrator for the Marcus solution.

namespace detail {

// Euler-Maruyama on the Ito form between jumps, exact Marcus flow at every
// jump time. With jumps applied uncompensated, the drift
//   a~(x) - int (phi^z(x) - x) nu_small(dz)
// collapses to a(x) + b'(x) b(x) / 2 - c(x) m, m = int z nu_small(dz).
template <class Record>
void reference_walk(const CoefficientModel& model, double x0,
                    const DrivingPath& path, std::size_t steps, double tol,
                    bool include_large, Record&& record) {
  const double h = path.horizon() / static_cast<double>(steps);
  const std::size_t ratio = path.base_steps() / steps;
  if (ratio == 0 || path.base_steps() % steps != 0) {
    throw std::invalid_argument("grid is not a coarsening of the base grid");
  }
  const double m = path.small_jump_mean();
  const auto dw = path.base_brownian();
  const auto& jumps = path.jumps();
  auto drift = [&](double x) {
    return model.a(x) + 0.5 * model.b.derivative(x, 1) * model.b(x) - model.c(x) * m;
  };
  double x = x0;
  record(x);
  std::size_t j = 0;
  for (std::size_t k = 0; k < steps; ++k) {
    double dW = 0.0;
    for (std::size_t b = k * ratio; b < (k + 1) * ratio; ++b) dW += dw[b];
    const double t0 = static_cast<double>(k) * h, t1 = t0 + h;
    if (j >= jumps.size() || jumps[j].base_step >= (k + 1) * ratio) {
      x += drift(x) * h + model.b(x) * dW;
      record(x);
      continue;
    }
    double t_prev = t0, w_prev = 0.0;
    for (; j < jumps.size() && jumps[j].base_step < (k + 1) * ratio; ++j) {
      const PathJump& jump = jumps[j];
      if (jump.large && !include_large) continue;
      const double s = std::clamp(jump.time, t_prev, t1);
      // Brownian bridge between (t_prev, w_prev) and (t1, dW).
      const double span = t1 - t_prev;
      double w_s = w_prev;
      if (span > 0.0) {
        const double frac = (s - t_prev) / span;
        w_s = w_prev + frac * (dW - w_prev) +
              std::sqrt(std::max(0.0, (s - t_prev) * (t1 - s) / span)) *
                  jump.bridge_normal;
      }
      x += drift(x) * (s - t_prev) + model.b(x) * (w_s - w_prev);
      x = solve_flow(model, x, jump.size, 0, tol).value;
      t_prev = s;
      w_prev = w_s;
    }
    x += drift(x) * (t1 - t_prev) + model.b(x) * (dW - w_prev);
    record(x);
  }
}

}  // namespace detail

inline double reference_terminal(const CoefficientModel& model, double x0,
                                 const DrivingPath& path, std::size_t steps,
                                 double tol = kMonteCarloFlowTol,
                                 bool include_large = true) {
  double last = x0;
  detail::reference_walk(model, x0, path, steps, tol, include_large,
                         [&last](double x) { last = x; });
  return last;
}

inline PathGrid simulate_reference_path(const CoefficientModel& model,
                                        double x0, double h_fine,
                                        const DrivingPath& path,
                                        double tol = kMonteCarloFlowTol,
                                        bool include_large = true) {
  const std::size_t n = path.steps_for(h_fine);
  PathGrid g = detail::make_grid(
      path, n, include_large ? SchemeTag::ito_reference : SchemeTag::small_jump_only);
  detail::reference_walk(model, x0, path, n, tol, include_large,
                         [&g](double x) { g.states.push_back(x); });
  return g;
}

// ---------------------------------------------------------------------------
// Closed-form solution of the linear model.

/// x0 exp(alpha t + beta W_t + M Z_t) on the grid with step h.
inline PathGrid exact_linear_path(const CoefficientModel& model, double x0,
                                  double h, const DrivingPath& path) {
  if (!model.is_linear()) {
    throw std::invalid_argument("exact solution requires the linear model");
  }
  const auto [alpha, beta, m] = model.linear_params();
  const std::size_t n = path.steps_for(h);
  PathGrid g = detail::make_grid(path, n, SchemeTag::exact_linear);
  g.increments = path.increments(n);
  double w = 0.0, z = 0.0;
  g.states.push_back(x0);
  for (std::size_t k = 0; k < n; ++k) {
    w += g.increments[k].dW;
    z += g.increments[k].dZ;
    g.states.push_back(x0 * std::exp(alpha * g.times[k + 1] + beta * w + m * z));
  }
  return g;
}

inline double exact_linear_terminal(const CoefficientModel& model, double x0,
                                    const DrivingPath& path) {
  const auto [alpha, beta, m] = model.linear_params();
  double w = 0.0;
  for (double v : path.base_brownian()) w += v;
  double z = -path.horizon() * path.small_jump_mean();
  for (const PathJump& j : path.jumps()) z += j.size;
  return x0 * std::exp(alpha * path.horizon() + beta * w + m * z);
}

// ---------------------------------------------------------------------------
// Effective drift of the small-jump process.

/// a~(x) = a(x) + b'(x) b(x) / 2 + int_{|z|<=1} (phi^z(x) - x - c(x) z) nu(dz).
class EffectiveDrift {
 public:
  EffectiveDrift(CoefficientModel model, LevyModel levy,
                 double tol = kDefaultFlowTol)
      : model_(std::move(model)), levy_(std::move(levy)), tol_(tol) {}

  const CoefficientModel& model() const { return model_; }
  const LevyModel& levy() const { return levy_; }
  double tol() const { return tol_; }

  double stratonovich_correction(double x) const {
    return 0.5 * model_.b.derivative(x, 1) * model_.b(x);
  }

  double jump_correction(double x) const {
    if (model_.c.is_constant()) return 0.0;  // flow is affine in z
    const double cx = model_.c(x);
    return levy_.integrate(
        [&](double z) {
          return solve_flow(model_, x, z, 0, tol_).value - x - cx * z;
        },
        JumpRegion::small);
  }

  double operator()(double x) const {
    return model_.a(x) + stratonovich_correction(x) + jump_correction(x);
  }

 private:
  CoefficientModel model_;
  LevyModel levy_;
  double tol_;
};

inline double effective_drift_eval(const EffectiveDrift& ed, double x) {
  return ed(x);
}

}  // namespace marcus
