#include <cmath>

#include <gtest/gtest.h>

#include "marcus/montecarlo.hpp"

using namespace marcus;

namespace {

const CoefficientModel kTrig = builtin_model("bounded_trig", {0.3, 0.4, 0.5});
const CoefficientModel kLinear = builtin_model("linear", {0.05, 0.2, 0.3});
const LevyModel kJumps(LevyFamily::compound_poisson_normal, {1.0, 0.0, 0.5});
const LevyModel kNone(LevyFamily::none, {});

std::vector<WeakErrorRow> synthetic(double c, double p) {
  std::vector<WeakErrorRow> rows;
  for (double h : {0.25, 0.125, 0.0625, 0.03125}) {
    WeakErrorRow r;
    r.h = h;
    r.weak_error = c * std::pow(h, p);
    rows.push_back(r);
  }
  return rows;
}

ExperimentSetup trig_setup(std::size_t n_paths) {
  ExperimentSetup s{kTrig, kJumps, TestFunction::gaussian_bump(0.5, 1.0)};
  s.h_list = {0.25, 0.125};
  s.n_paths = n_paths;
  s.h_fine = 1.0 / 64;
  s.seed = 99;
  return s;
}

}  // namespace

TEST(FitOrder, ExactLines) {
  const ConvergenceFit one = fit_convergence_order(synthetic(0.7, 1.0));
  EXPECT_NEAR(one.order, 1.0, 1e-12);
  EXPECT_NEAR(one.r2, 1.0, 1e-12);
  EXPECT_NEAR(one.constant(), 0.7, 1e-12);
  EXPECT_NEAR(fit_convergence_order(synthetic(0.7, 2.0)).order, 2.0, 1e-12);
}

TEST(FitOrder, NoiseFloorExcludesRows) {
  auto rows = synthetic(0.7, 1.0);
  rows[3].stderr_coupled = rows[3].weak_error;  // below 3 SE
  EXPECT_EQ(fit_convergence_order(rows).rows_used, 3u);
  rows[2].stderr_coupled = rows[2].weak_error;
  EXPECT_THROW(fit_convergence_order(rows), std::invalid_argument);
}

TEST(WeakError, ZeroNoiseZeroDrift) {
  ExperimentSetup s{builtin_model("linear", {0, 0, 0}), kJumps, TestFunction::cosine(1, 0)};
  s.h_list = {0.5, 0.25, 0.125};
  s.n_paths = 1000;
  s.h_fine = 1.0 / 64;
  const WeakErrorReport r = run_convergence(s);
  for (const WeakErrorRow& row : r.rows) EXPECT_EQ(row.weak_error, 0.0);
  EXPECT_EQ(*r.self_convergence, 0.0);
}

TEST(WeakError, LinearModelClosedFormMean) {
  ExperimentSetup s{kLinear, kJumps, TestFunction::identity()};
  s.x0 = 1.0;
  s.n_paths = 1000000;
  s.oracle = Oracle::exact_linear;
  s.h_list = {1.0};
  const WeakErrorRow r = estimate_weak_error(s, 1.0);
  const double exact = std::exp(0.05 + 0.02 + kJumps.levy_exponent(0.3));
  EXPECT_NEAR(r.est_oracle, exact, 4.0 * r.stderr_scheme);
  EXPECT_LE(r.weak_error, 10.0 * 1e-8);
}

TEST(WeakError, OracleMismatchRejected) {
  ExperimentSetup s = trig_setup(1000);
  s.oracle = Oracle::exact_linear;
  EXPECT_THROW(run_convergence(s), std::invalid_argument);
  s = trig_setup(1000);
  s.h_list = {0.125, 0.25};
  EXPECT_THROW(run_convergence(s), std::invalid_argument);
  s = trig_setup(999);
  EXPECT_THROW(run_convergence(s), std::invalid_argument);
}

TEST(SelfConvergence, LinearAndDriftOnly) {
  ExperimentSetup s{kLinear, kJumps, TestFunction::identity()};
  s.x0 = 1.0;
  s.n_paths = 2000;
  s.h_fine = 1.0 / 1024;
  // Euler bias of the reference shrinks like h_fine
  EXPECT_LT(self_convergence_check(s), 1e-3);

  ExperimentSetup d{builtin_model("bounded_trig", {0.3, 0, 0}), kNone, TestFunction::identity()};
  d.n_paths = 1000;
  d.h_fine = 1.0 / 1024;
  EXPECT_LT(self_convergence_check(d), 0.3 * d.h_fine);
}

TEST(Estimator, CouplingDoesNotBiasSchemeMean) {
  ExperimentSetup a = trig_setup(100000);
  a.h_list = {0.125};
  a.self_check = false;
  const WeakErrorRow coupled = run_convergence(a).rows[0];
  // scheme-only paths from an unrelated seed
  ExperimentSetup b = a;
  b.seed = 12345;
  b.oracle = Oracle::reference;
  const WeakErrorRow other = run_convergence(b).rows[0];
  EXPECT_NEAR(coupled.est_scheme, other.est_scheme,
              4.0 * std::hypot(coupled.stderr_scheme, other.stderr_scheme));
}

TEST(Estimator, StandardErrorScaling) {
  const WeakErrorRow small = run_convergence(trig_setup(10000)).rows[0];
  const WeakErrorRow big = run_convergence(trig_setup(20000)).rows[0];
  const double ratio = big.stderr_scheme / small.stderr_scheme;
  EXPECT_GE(ratio, 0.65);
  EXPECT_LE(ratio, 0.76);
}

TEST(Estimator, ReproducibleAcrossWorkerCounts) {
  const ExperimentSetup s = trig_setup(3000);
  const WeakErrorReport one = run_convergence(s, {1, true});
  const WeakErrorReport three = run_convergence(s, {3, true});
  EXPECT_EQ(weak_error_csv(one), weak_error_csv(three));
  EXPECT_EQ(weak_error_csv(one), weak_error_csv(run_convergence(s, {1, true})));
}

TEST(PathPool, FailureRateAborts) {
  EXPECT_THROW(run_paths(10000, 1, {}, [](std::uint64_t p, double* out) {
                 if (p % 1000 == 0) throw ConvergenceError("forced");
                 out[0] = 1.0;
               }),
               NumericalFailure);
  const PathTable t = run_paths(20000, 1, {}, [](std::uint64_t p, double* out) {
    out[0] = p == 7 ? NAN : 1.0;
  });
  EXPECT_EQ(t.n_failed, 1u);
  EXPECT_EQ(t.column(0).size(), 19999u);
}

TEST(Output, CsvAndPlotData) {
  WeakErrorReport rep;
  WeakErrorRow r;
  r.h = 0.25;
  r.n_paths = 1000;
  r.est_scheme = 0.1;
  r.est_oracle = 0.2;
  r.weak_error = 0.125;
  r.stderr_scheme = 0.01;
  r.stderr_coupled = 0.001;
  r.seed = 5;
  rep.rows.push_back(r);
  EXPECT_EQ(weak_error_csv(rep),
            "h,n_paths,est_scheme,est_oracle,weak_error,stderr_scheme,stderr_coupled,seed\n"
            "0.25,1000,0.10000000000000001,0.20000000000000001,0.125,0.01,0.001,5\n");
  EXPECT_EQ(plot_data(rep), "log2_h,log2_weak_error\n-2,-3\n");
}
