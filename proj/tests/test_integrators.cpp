#include <cmath>

#include <gtest/gtest.h>

#include "marcus/integrators.hpp"
#include "marcus/montecarlo.hpp"

using namespace marcus;

namespace {

const CoefficientModel kTrig = builtin_model("bounded_trig", {0.3, 0.4, 0.5});
const CoefficientModel kLinear = builtin_model("linear", {0.05, 0.2, 0.3});
const LevyModel kJumps(LevyFamily::compound_poisson_normal, {1.0, 0.0, 0.5});

}  // namespace

TEST(DrivingPath, CoarseIncrementsAggregateFine) {
  const DrivingPath path(kJumps, 5, 3, 1.0, 64);
  const auto fine = path.increments(64);
  const auto coarse = path.increments(8);
  for (std::size_t k = 0; k < 8; ++k) {
    double dw = 0.0, dz = 0.0;
    for (std::size_t j = 8 * k; j < 8 * (k + 1); ++j) {
      dw += fine[j].dW;
      dz += fine[j].dZ;
    }
    EXPECT_NEAR(coarse[k].dW, dw, 1e-14);
    EXPECT_NEAR(coarse[k].dZ, dz, 1e-14);
  }
  EXPECT_THROW(path.increments(7), std::invalid_argument);
  EXPECT_THROW(path.steps_for(0.3), std::invalid_argument);
}

TEST(DrivingPath, JumpsSortedWithinHorizon) {
  for (std::uint64_t p = 0; p < 50; ++p) {
    const DrivingPath path(kJumps, 6, p, 2.0, 16);
    double last = 0.0;
    for (const PathJump& j : path.jumps()) {
      EXPECT_GE(j.time, last);
      EXPECT_LE(j.time, 2.0);
      EXPECT_EQ(j.large, std::abs(j.size) > 1.0);
      last = j.time;
    }
  }
}

TEST(WzStep, TrivialCases) {
  EXPECT_EQ(wz_step(builtin_model("bounded_trig", {0, 0.4, 0.5}), 0.8, 0.1, 0.0, 0.0), 0.8);
  EXPECT_NEAR(wz_step(kLinear, 1.2, 0.1, 0.3, -0.4),
              1.2 * std::exp(0.05 * 0.1 + 0.2 * 0.3 - 0.3 * 0.4), 1e-8);
  const CoefficientModel c = builtin_model("constant", {0.5, 1.0, -2.0});
  EXPECT_NEAR(wz_step(c, 1.0, 0.1, 0.3, 0.2), 1.0 + 0.05 + 0.3 - 0.4, 1e-12);
  EXPECT_THROW(wz_step(kTrig, 1.0, 0.0, 0.0, 0.0), std::invalid_argument);
}

TEST(WzStep, NoJumpsIsStratonovichOneStepMap) {
  const LevyModel none(LevyFamily::none, {});
  const DrivingPath path(none, 8, 0, 1.0, 16);
  const PathGrid g = simulate_wz_path(kTrig, 0.5, 1.0 / 16, path);
  for (std::size_t k = 0; k < 16; ++k) {
    EXPECT_EQ(g.increments[k].dZ, 0.0);
    EXPECT_EQ(g.states[k + 1], solve_psi(kTrig, g.states[k], 1.0 / 16, g.increments[k].dW, 0.0,
                                         kMonteCarloFlowTol).value);
  }
}

TEST(SimulateWzPath, ShapeAndZeroNoise) {
  const PathGrid g = simulate_wz_path(builtin_model("linear", {0, 0, 0}), kJumps, 0.7, 1.0, 0.125, 1, 0);
  ASSERT_EQ(g.states.size(), 9u);
  ASSERT_EQ(g.times.size(), 9u);
  EXPECT_EQ(g.states.front(), 0.7);
  for (double x : g.states) EXPECT_EQ(x, 0.7);
}

TEST(SimulateWzPath, LinearModelIsExact) {
  for (std::uint64_t p = 0; p < 50; ++p) {
    const DrivingPath path(kJumps, 21, p, 1.0, 64);
    for (double h : {1.0, 0.25, 1.0 / 64}) {
      const PathGrid wz = simulate_wz_path(kLinear, 1.0, h, path);
      const PathGrid ex = exact_linear_path(kLinear, 1.0, h, path);
      for (std::size_t k = 0; k < wz.states.size(); ++k) {
        EXPECT_NEAR(wz.states[k], ex.states[k], static_cast<double>(k + 1) * 1e-8);
      }
    }
  }
}

TEST(SimulateWzPath, Reproducible) {
  const PathGrid a = simulate_wz_path(kTrig, kJumps, 0.5, 1.0, 1.0 / 32, 9, 4);
  const PathGrid b = simulate_wz_path(kTrig, kJumps, 0.5, 1.0, 1.0 / 32, 9, 4);
  EXPECT_EQ(a.states, b.states);
}

TEST(ReferencePath, SingleLargeJumpIsExactFlow) {
  const CoefficientModel m = builtin_model("bounded_trig", {0, 0, 0.9});
  const LevyModel fixed(LevyFamily::compound_poisson_fixed, {0.5, 2.0});
  int checked = 0;
  for (std::uint64_t p = 0; p < 200 && checked < 10; ++p) {
    const DrivingPath path(fixed, 3, p, 1.0, 64);
    if (path.jumps().size() != 1) continue;
    ++checked;
    EXPECT_NEAR(reference_terminal(m, 0.4, path, 64),
                solve_flow(m, 0.4, 2.0, 0, kMonteCarloFlowTol).value, 1e-12);
  }
  EXPECT_GT(checked, 0);
}

TEST(ReferencePath, ConstantJumpCoefficientIsAdditive) {
  const CoefficientModel m = builtin_model("constant", {0, 0, 1.5});
  const LevyModel skewed(LevyFamily::compound_poisson_normal, {2.0, 0.3, 0.6});
  for (std::uint64_t p = 0; p < 20; ++p) {
    const DrivingPath path(skewed, 4, p, 1.0, 128);
    double z = -path.small_jump_mean();
    for (const PathJump& j : path.jumps()) z += j.size;
    EXPECT_NEAR(reference_terminal(m, 0.2, path, 128), 0.2 + 1.5 * z, 1e-12);
  }
}

TEST(ReferencePath, LinearStrongErrorShrinks) {
  double err_coarse = 0.0, err_fine = 0.0;
  const int n = 200;
  for (int p = 0; p < n; ++p) {
    const DrivingPath path(kJumps, 12, static_cast<std::uint64_t>(p), 1.0, 4096);
    const double exact = exact_linear_terminal(kLinear, 1.0, path);
    err_coarse += std::abs(reference_terminal(kLinear, 1.0, path, 256) - exact);
    err_fine += std::abs(reference_terminal(kLinear, 1.0, path, 4096) - exact);
  }
  err_coarse /= n;
  err_fine /= n;
  EXPECT_LT(err_fine, err_coarse);
  EXPECT_LT(err_fine, 5.0 * std::sqrt(1.0 / 4096));
}

TEST(ExactLinear, ZeroParametersConstant) {
  const DrivingPath path(kJumps, 1, 0, 1.0, 8);
  const PathGrid g = exact_linear_path(builtin_model("linear", {0, 0, 0}), 2.0, 0.125, path);
  for (double x : g.states) EXPECT_EQ(x, 2.0);
  EXPECT_THROW(exact_linear_path(kTrig, 1.0, 0.125, path), std::invalid_argument);
}

TEST(ExactLinear, GeometricBrownianMean) {
  const CoefficientModel m = builtin_model("linear", {0.1, 0.3, 0.0});
  const LevyModel none(LevyFamily::none, {});
  const int n = 1000000;
  double s = 0, ss = 0;
  for (int p = 0; p < n; ++p) {
    const double x = exact_linear_terminal(m, 1.0, DrivingPath(none, 2, static_cast<std::uint64_t>(p), 1.0, 1));
    s += x;
    ss += x * x;
  }
  const double mean = s / n, se = std::sqrt((ss / n - mean * mean) / n);
  EXPECT_NEAR(mean, std::exp(0.1 + 0.045), 4 * se);
}

TEST(ExactLinear, MeanViaLevyExponent) {
  const int n = 1000000;
  double s = 0, ss = 0;
  for (int p = 0; p < n; ++p) {
    const double x = exact_linear_terminal(kLinear, 1.0, DrivingPath(kJumps, 3, static_cast<std::uint64_t>(p), 1.0, 1));
    s += x;
    ss += x * x;
  }
  const double mean = s / n, se = std::sqrt((ss / n - mean * mean) / n);
  EXPECT_NEAR(mean, std::exp(0.05 + 0.02 + kJumps.levy_exponent(0.3)), 4 * se);
}

TEST(EffectiveDrift, ConstantJumpCoefficient) {
  const CoefficientModel m = builtin_model("constant", {0.3, 0.4, 0.5});
  const EffectiveDrift ed(m, kJumps);
  EXPECT_EQ(ed.jump_correction(0.7), 0.0);
  EXPECT_EQ(ed(0.7), 0.3);
  CoefficientModel trig_b = kTrig;
  EXPECT_NEAR(EffectiveDrift(trig_b, kJumps).stratonovich_correction(0.7),
              0.5 * (-0.4 * std::sin(0.7)) * (0.4 * std::cos(0.7)), 1e-15);
}

TEST(EffectiveDrift, TwoAtomFiniteSum) {
  const CoefficientModel m = builtin_model("bounded_trig", {0, 0, 1});
  const LevyModel atoms(LevyFamily::compound_poisson_atoms, {0.5, 1.0, -0.5, 1.0});
  const EffectiveDrift ed(m, atoms);
  for (double x : {-1.0, 0.3, 2.0}) {
    double sum = 0.0;
    for (double z : {0.5, -0.5}) sum += solve_flow(m, x, z, 0).value - x - z * std::sin(x);
    EXPECT_NEAR(ed(x), sum, 1e-12);
  }
}

TEST(Coupling, VarianceReductionForLinearModel) {
  ExperimentSetup s{kLinear, kJumps, TestFunction::identity()};
  s.x0 = 1.0;
  s.h_list = {0.01};
  s.n_paths = 10000;
  s.oracle = Oracle::exact_linear;
  const WeakErrorRow r = estimate_weak_error(s, 0.01);
  EXPECT_LT(r.stderr_coupled * r.stderr_coupled, 0.1 * r.stderr_scheme * r.stderr_scheme);
}

TEST(Moments, FourthMomentDoesNotGrowWithRefinement) {
  const auto rows = fourth_moment_profile(kTrig, kJumps, 0.5, 1.0, {0.1, 0.05, 0.025}, 10000, 31);
  for (const MomentRow& r : rows) {
    EXPECT_TRUE(std::isfinite(r.mean_max_fourth));
    EXPECT_GE(r.mean_max_fourth, r.max_mean_fourth);
    EXPECT_LT(r.mean_max_fourth / rows.front().mean_max_fourth, 1.5);
    EXPECT_GT(r.mean_max_fourth / rows.front().mean_max_fourth, 1.0 / 1.5);
  }
}
