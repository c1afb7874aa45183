#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <mutex>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "marcus/coefficients.hpp"
#include "marcus/integrators.hpp"
#include "marcus/levy.hpp"
#include "marcus/test_functions.hpp"

namespace marcus {

enum class Oracle { exact_linear, reference };

inline const char* to_string(Oracle o) {
  return o == Oracle::exact_linear ? "exact_linear" : "reference";
}

inline Oracle oracle_from_string(const std::string& s) {
  if (s == "exact_linear") return Oracle::exact_linear;
  if (s == "reference") return Oracle::reference;
  throw std::invalid_argument("unknown oracle '" + s + "'");
}

/// Too many paths failed (non-finite state or ODE non-convergence).
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kMaxPathFailureRate = 1e-4;

struct WeakErrorRow {
  double h = 0.0;
  std::size_t n_paths = 0;
  double est_scheme = 0.0;
  double est_oracle = 0.0;
  double mean_difference = 0.0;  // est_oracle - est_scheme, paired
  double weak_error = 0.0;
  double stderr_scheme = 0.0;
  double stderr_coupled = 0.0;
  std::uint64_t seed = 0;
  std::size_t failed_paths = 0;

  bool above_noise_floor() const { return weak_error > 3.0 * stderr_coupled; }
};

struct ConvergenceFit {
  double order = 0.0;
  double intercept = 0.0;  // log(C) in weak_error ~ C h^order
  double r2 = 0.0;
  std::size_t rows_used = 0;
  double constant() const { return std::exp(intercept); }
};

struct WeakErrorReport {
  std::vector<WeakErrorRow> rows;
  std::optional<ConvergenceFit> fit;
  std::optional<double> self_convergence;
  double ci_level = 0.99;
  bool degenerate = false;  // every row is at ODE-tolerance level
};

struct ExperimentSetup {
  ExperimentSetup(CoefficientModel m, LevyModel l, TestFunction fn)
      : model(std::move(m)), levy(std::move(l)), f(std::move(fn)) {}

  CoefficientModel model;
  LevyModel levy;
  TestFunction f;
  double x0 = 0.5;
  double T = 1.0;
  std::vector<double> h_list;
  std::size_t n_paths = 100000;
  std::uint64_t seed = 1;
  Oracle oracle = Oracle::reference;
  double h_fine = 1.0 / 4096.0;
  double ode_tol = kMonteCarloFlowTol;
  bool self_check = true;
};

struct PoolOptions {
  unsigned workers = 1;
  bool reproducible = true;
};

/// Sample mean and standard error.
struct Moments {
  double mean = 0.0;
  double stderr_ = 0.0;
};

inline Moments sample_moments(const std::vector<double>& v) {
  Moments m;
  if (v.empty()) return m;
  const double n = static_cast<double>(v.size());
  m.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  if (v.size() < 2) return m;
  double ss = 0.0;
  for (double x : v) ss += (x - m.mean) * (x - m.mean);
  m.stderr_ = std::sqrt(ss / (n - 1.0) / n);
  return m;
}

/// Evaluates `fn(path_index, out)` for every path on `workers` threads.
/// `out` has `width` slots; a path whose fn throws ConvergenceError or
/// writes a non-finite value is marked failed. Results are stored per path,
/// so any reduction over them is independent of the worker count.
struct PathTable {
  std::size_t width = 0;
  std::vector<double> values;
  std::vector<char> failed;
  std::size_t n_failed = 0;

  double at(std::size_t path, std::size_t slot) const {
    return values[path * width + slot];
  }
  /// Column `slot` over non-failed paths, in path order.
  std::vector<double> column(std::size_t slot) const {
    std::vector<double> out;
    out.reserve(failed.size());
    for (std::size_t p = 0; p < failed.size(); ++p) {
      if (!failed[p]) out.push_back(at(p, slot));
    }
    return out;
  }
};

inline PathTable run_paths(
    std::size_t n_paths, std::size_t width, const PoolOptions& opt,
    const std::function<void(std::uint64_t, double*)>& fn) {
  PathTable t;
  t.width = width;
  t.values.assign(n_paths * width, 0.0);
  t.failed.assign(n_paths, 0);
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  constexpr std::size_t kChunk = 64;

  auto work = [&]() {
    for (;;) {
      const std::size_t begin = next.fetch_add(kChunk);
      if (begin >= n_paths) return;
      const std::size_t end = std::min(n_paths, begin + kChunk);
      for (std::size_t p = begin; p < end; ++p) {
        double* out = t.values.data() + p * width;
        try {
          fn(p, out);
          for (std::size_t s = 0; s < width; ++s) {
            if (!std::isfinite(out[s])) t.failed[p] = 1;
          }
        } catch (const ConvergenceError&) {
          t.failed[p] = 1;
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          next.store(n_paths);
          return;
        }
      }
    }
  };

  const unsigned workers = std::max(1u, opt.workers);
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < workers; ++i) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
  t.n_failed = static_cast<std::size_t>(std::count(t.failed.begin(), t.failed.end(), 1));
  if (n_paths > 0 &&
      static_cast<double>(t.n_failed) > kMaxPathFailureRate * static_cast<double>(n_paths)) {
    throw NumericalFailure(std::to_string(t.n_failed) + " of " + std::to_string(n_paths) +
                           " paths failed");
  }
  return t;
}

namespace detail {

inline std::size_t grid_steps(double T, double h) {
  if (!(h > 0.0) || !(T > 0.0)) throw std::invalid_argument("T and h must be > 0");
  const double r = T / h;
  if (r > kMaxGridSteps) throw std::invalid_argument("T/h exceeds the step limit");
  const auto n = static_cast<std::size_t>(std::llround(r));
  if (n == 0 || std::abs(static_cast<double>(n) * h - T) > 1e-9 * T) {
    throw std::invalid_argument("T/h must be an integer");
  }
  return n;
}

inline std::size_t common_base_steps(double T, const std::vector<double>& hs) {
  std::size_t base = 1;
  for (double h : hs) base = std::lcm(base, grid_steps(T, h));
  if (static_cast<double>(base) > kMaxGridSteps) {
    throw std::invalid_argument("common grid exceeds the step limit");
  }
  return base;
}

inline void validate_setup(const ExperimentSetup& s) {
  if (s.h_list.empty()) throw std::invalid_argument("h_list is empty");
  for (std::size_t i = 1; i < s.h_list.size(); ++i) {
    if (!(s.h_list[i] < s.h_list[i - 1])) {
      throw std::invalid_argument("h_list must be strictly decreasing");
    }
  }
  if (s.n_paths < 1000) throw std::invalid_argument("n_paths must be >= 1000");
  if (s.oracle == Oracle::exact_linear && !s.model.is_linear()) {
    throw std::invalid_argument("exact_linear oracle requires the linear model");
  }
}

}  // namespace detail

/// Runs the whole h ladder on common random numbers: one driving path per
/// path index serves the oracle and every scheme grid.
inline WeakErrorReport run_convergence(const ExperimentSetup& s,
                                       const PoolOptions& opt = {}) {
  detail::validate_setup(s);
  const bool reference = s.oracle == Oracle::reference;
  const bool self_check = reference && s.self_check;
  std::vector<double> grids = s.h_list;
  if (reference) grids.push_back(s.h_fine);
  if (self_check) grids.push_back(0.5 * s.h_fine);
  const std::size_t base = detail::common_base_steps(s.T, grids);

  const std::size_t nh = s.h_list.size();
  // slots: [0, nh) scheme per h, nh oracle, nh + 1 oracle at h_fine / 2
  const std::size_t width = nh + 2;
  const PathTable table = run_paths(s.n_paths, width, opt, [&](std::uint64_t p, double* out) {
    const DrivingPath path(s.levy, s.seed, p, s.T, base);
    for (std::size_t i = 0; i < nh; ++i) {
      out[i] = s.f(wz_terminal(s.model, s.x0, path, path.steps_for(s.h_list[i]), s.ode_tol));
    }
    if (reference) {
      out[nh] = s.f(reference_terminal(s.model, s.x0, path, path.steps_for(s.h_fine), s.ode_tol));
      out[nh + 1] = self_check
                        ? s.f(reference_terminal(s.model, s.x0, path,
                                                 path.steps_for(0.5 * s.h_fine), s.ode_tol))
                        : 0.0;
    } else {
      out[nh] = s.f(exact_linear_terminal(s.model, s.x0, path));
      out[nh + 1] = 0.0;
    }
  });

  WeakErrorReport rep;
  const std::vector<double> oracle = table.column(nh);
  const Moments m_oracle = sample_moments(oracle);
  for (std::size_t i = 0; i < nh; ++i) {
    const std::vector<double> scheme = table.column(i);
    std::vector<double> diff(scheme.size());
    for (std::size_t k = 0; k < diff.size(); ++k) diff[k] = oracle[k] - scheme[k];
    const Moments ms = sample_moments(scheme);
    const Moments md = sample_moments(diff);
    WeakErrorRow row;
    row.h = s.h_list[i];
    row.n_paths = s.n_paths;
    row.est_scheme = ms.mean;
    row.est_oracle = m_oracle.mean;
    row.mean_difference = md.mean;
    row.weak_error = std::abs(md.mean);
    row.stderr_scheme = ms.stderr_;
    row.stderr_coupled = md.stderr_;
    row.seed = s.seed;
    row.failed_paths = table.n_failed;
    rep.rows.push_back(row);
  }
  if (self_check) {
    const std::vector<double> half = table.column(nh + 1);
    std::vector<double> diff(half.size());
    for (std::size_t k = 0; k < diff.size(); ++k) diff[k] = oracle[k] - half[k];
    rep.self_convergence = std::abs(sample_moments(diff).mean);
  }
  return rep;
}

/// Single row of the ladder.
inline WeakErrorRow estimate_weak_error(const ExperimentSetup& s, double h,
                                        const PoolOptions& opt = {}) {
  ExperimentSetup one = s;
  one.h_list = {h};
  one.self_check = false;
  return run_convergence(one, opt).rows.front();
}

/// |mean f(X^{h_fine}_T) - mean f(X^{h_fine/2}_T)| on coupled streams.
inline double self_convergence_check(const ExperimentSetup& s,
                                     const PoolOptions& opt = {}) {
  const std::size_t base = detail::common_base_steps(s.T, {s.h_fine, 0.5 * s.h_fine});
  const PathTable table = run_paths(s.n_paths, 1, opt, [&](std::uint64_t p, double* out) {
    const DrivingPath path(s.levy, s.seed, p, s.T, base);
    out[0] = s.f(reference_terminal(s.model, s.x0, path, path.steps_for(s.h_fine), s.ode_tol)) -
             s.f(reference_terminal(s.model, s.x0, path, path.steps_for(0.5 * s.h_fine),
                                    s.ode_tol));
  });
  return std::abs(sample_moments(table.column(0)).mean);
}

/// Least-squares line through (log h, log weak_error).
inline ConvergenceFit fit_points(const std::vector<double>& h,
                                 const std::vector<double>& err) {
  if (h.size() != err.size()) throw std::invalid_argument("size mismatch");
  if (h.size() < 3) throw std::invalid_argument("need at least 3 points above the noise floor");
  const double n = static_cast<double>(h.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (!(h[i] > 0.0) || !(err[i] > 0.0)) throw std::invalid_argument("non-positive point");
    const double x = std::log(h[i]), y = std::log(err[i]);
    sx += x; sy += y; sxx += x * x; sxy += x * y; syy += y * y;
  }
  const double vx = sxx - sx * sx / n;
  const double vy = syy - sy * sy / n;
  const double cxy = sxy - sx * sy / n;
  if (!(vx > 0.0)) throw std::invalid_argument("degenerate h values");
  ConvergenceFit fit;
  fit.order = cxy / vx;
  fit.intercept = (sy - fit.order * sx) / n;
  fit.r2 = vy > 0.0 ? (cxy * cxy) / (vx * vy) : 1.0;
  fit.rows_used = h.size();
  return fit;
}

/// Fit over the rows whose weak error exceeds 3 coupled standard errors.
inline ConvergenceFit fit_convergence_order(const std::vector<WeakErrorRow>& rows) {
  std::vector<double> h, e;
  for (const WeakErrorRow& r : rows) {
    if (r.above_noise_floor()) {
      h.push_back(r.h);
      e.push_back(r.weak_error);
    }
  }
  if (h.size() < 3) {
    throw std::invalid_argument("fewer than 3 rows above the noise floor (" +
                                std::to_string(h.size()) + ")");
  }
  return fit_points(h, e);
}

/// Smallest weak error among the rows that enter the fit.
inline double smallest_usable_error(const std::vector<WeakErrorRow>& rows) {
  double m = kInfinity;
  for (const WeakErrorRow& r : rows) {
    if (r.above_noise_floor()) m = std::min(m, r.weak_error);
  }
  return m;
}

/// Linear-model check: every row below 10 * n * tol, n = T / h.
inline bool rows_at_ode_tolerance(const std::vector<WeakErrorRow>& rows, double T,
                                  double ode_tol) {
  for (const WeakErrorRow& r : rows) {
    if (!(r.weak_error <= 10.0 * (T / r.h) * ode_tol)) return false;
  }
  return !rows.empty();
}

// ---------------------------------------------------------------------------
// Fourth moments of the scheme.

struct MomentRow {
  double h = 0.0;
  double mean_max_fourth = 0.0;  // E max_k |X_kh|^4
  double stderr_max_fourth = 0.0;
  double max_mean_fourth = 0.0;  // max_k E |X_kh|^4
};

inline std::vector<MomentRow> fourth_moment_profile(
    const CoefficientModel& model, const LevyModel& levy, double x0, double T,
    const std::vector<double>& h_list, std::size_t n_paths, std::uint64_t seed,
    double ode_tol = kMonteCarloFlowTol, const PoolOptions& opt = {}) {
  const std::size_t base = detail::common_base_steps(T, h_list);
  std::vector<std::size_t> steps;
  std::size_t width = 0;
  for (double h : h_list) {
    steps.push_back(detail::grid_steps(T, h));
    width += 1 + steps.back();
  }
  // per h: [max_k |X|^4, |X_1|^4, ..., |X_n|^4]
  const PathTable table = run_paths(n_paths, width, opt, [&](std::uint64_t p, double* out) {
    const DrivingPath path(levy, seed, p, T, base);
    std::size_t off = 0;
    for (std::size_t i = 0; i < h_list.size(); ++i) {
      double x = x0;
      double mx = std::pow(x0, 4);
      std::size_t k = 0;
      for (const StepIncrement& inc : path.increments(steps[i])) {
        x = wz_step(model, x, h_list[i], inc.dW, inc.dZ, ode_tol);
        const double x4 = x * x * x * x;
        out[off + 1 + k++] = x4;
        mx = std::max(mx, x4);
      }
      out[off] = mx;
      off += 1 + steps[i];
    }
  });
  std::vector<MomentRow> rows;
  std::size_t off = 0;
  for (std::size_t i = 0; i < h_list.size(); ++i) {
    MomentRow r;
    r.h = h_list[i];
    const Moments mm = sample_moments(table.column(off));
    r.mean_max_fourth = mm.mean;
    r.stderr_max_fourth = mm.stderr_;
    r.max_mean_fourth = std::pow(x0, 4);
    for (std::size_t k = 0; k < steps[i]; ++k) {
      r.max_mean_fourth = std::max(r.max_mean_fourth, sample_moments(table.column(off + 1 + k)).mean);
    }
    rows.push_back(r);
    off += 1 + steps[i];
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Output files.

inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline constexpr const char* kWeakErrorCsvHeader =
    "h,n_paths,est_scheme,est_oracle,weak_error,stderr_scheme,stderr_coupled,seed";

inline std::string weak_error_csv(const WeakErrorReport& rep) {
  std::string out = std::string(kWeakErrorCsvHeader) + "\n";
  for (const WeakErrorRow& r : rep.rows) {
    out += format_g17(r.h) + "," + std::to_string(r.n_paths) + "," +
           format_g17(r.est_scheme) + "," + format_g17(r.est_oracle) + "," +
           format_g17(r.weak_error) + "," + format_g17(r.stderr_scheme) + "," +
           format_g17(r.stderr_coupled) + "," + std::to_string(r.seed) + "\n";
  }
  return out;
}

inline std::string plot_data(const WeakErrorReport& rep) {
  std::string out = "log2_h,log2_weak_error\n";
  for (const WeakErrorRow& r : rep.rows) {
    out += format_g17(std::log2(r.h)) + "," + format_g17(std::log2(r.weak_error)) + "\n";
  }
  return out;
}

/// Writes `content` to `path`; throws std::ios_base::failure on error.
inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::ios_base::failure("cannot open " + path + " for writing");
  os << content;
  os.flush();
  if (!os) throw std::ios_base::failure("write failed for " + path);
}

}  // namespace marcus
