#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <string>
#include <vector>

#include "marcus/config.hpp"
#include "marcus/generators.hpp"
#include "marcus/integrators.hpp"
#include "marcus/levy.hpp"
#include "marcus/marcus_flow.hpp"
#include "marcus/montecarlo.hpp"
#include "marcus/rng.hpp"

namespace marcus {

/// Process exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailed = 1,
  kExitConfig = 2,
  kExitNumerical = 3,
  kExitIo = 4,
};

struct CommandOptions {
  PoolOptions pool;
  std::size_t n_export = 10;  // paths written by `paths`
};

namespace detail {

inline std::string out_path(const ExperimentConfig& c, const std::string& name) {
  return (std::filesystem::path(c.out_dir) / name).string();
}

inline void ensure_out_dir(const ExperimentConfig& c) {
  std::error_code ec;
  std::filesystem::create_directories(c.out_dir, ec);
  if (ec) throw std::ios_base::failure("cannot create " + c.out_dir + ": " + ec.message());
}

inline std::string sci(double v, int digits = 3) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*e", digits, v);
  return buf;
}

}  // namespace detail

/// Runs the h ladder, writes weak_error.csv and weak_error_plot.csv.
/// Exit 0 iff the fitted order lies in [0.8, 1.2] and the reference
/// self-convergence is below 20% of the smallest usable weak error.
inline int cmd_converge(const ExperimentConfig& c, const CommandOptions& opt,
                        std::ostream& out) {
  WeakErrorReport rep;
  try {
    rep = run_convergence(c.setup(), opt.pool);
  } catch (const NumericalFailure& e) {
    out << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const ConvergenceError& e) {
    out << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    out << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    detail::ensure_out_dir(c);
    write_text_file(detail::out_path(c, "weak_error.csv"), weak_error_csv(rep));
    write_text_file(detail::out_path(c, "weak_error_plot.csv"), plot_data(rep));
  } catch (const std::ios_base::failure& e) {
    out << "I/O error: " << e.what() << "\n";
    return kExitIo;
  }

  out << "h            weak_error   stderr_coupled  99% CI half-width  used\n";
  const double z99 = 2.5758293035489004;
  for (const WeakErrorRow& r : rep.rows) {
    out << std::left << std::setw(13) << format_g17(r.h).substr(0, 12) << detail::sci(r.weak_error)
        << "    " << detail::sci(r.stderr_coupled) << "       "
        << detail::sci(z99 * r.stderr_coupled) << "          "
        << (r.above_noise_floor() ? "yes" : "no") << "\n";
  }

  const CoefficientModel model = c.model();
  if (model.is_linear() && rows_at_ode_tolerance(rep.rows, c.T, c.ode_tol)) {
    rep.degenerate = true;
    out << "degenerate: scheme exact\n";
    return kExitOk;
  }

  ConvergenceFit fit;
  try {
    fit = fit_convergence_order(rep.rows);
  } catch (const std::invalid_argument& e) {
    out << "fit failed: " << e.what() << "\n";
    return kExitCheckFailed;
  }
  out << "fitted order " << fit.order << " (r2 " << fit.r2 << ", rows " << fit.rows_used
      << ", constant " << fit.constant() << ")\n";
  bool ok = fit.order >= 0.8 && fit.order <= 1.2;
  if (rep.self_convergence) {
    const double limit = 0.2 * smallest_usable_error(rep.rows);
    const bool sc_ok = *rep.self_convergence < limit;
    out << "self-convergence " << detail::sci(*rep.self_convergence) << " (limit "
        << detail::sci(limit) << ") " << (sc_ok ? "ok" : "too large") << "\n";
    ok = ok && sc_ok;
  }
  return ok ? kExitOk : kExitCheckFailed;
}

/// Random (x, z) with x uniform on [-5, 5] and |z| uniform on (1, 5].
inline std::vector<FlowSample> appendix_samples(std::size_t n, std::uint64_t seed) {
  CounterRng rng(seed, 0, 0, Substream::probe);
  std::vector<FlowSample> s;
  s.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = -5.0 + 10.0 * rng.uniform();
    const double mag = 1.0 + 4.0 * rng.uniform();
    s.push_back({x, rng.uniform() < 0.5 ? -mag : mag});
  }
  return s;
}

/// Generator identity, flow-derivative bounds, coefficient and Levy-tail
/// hypotheses. Exit 0 iff every check passes.
inline int cmd_verify(const ExperimentConfig& c, const CommandOptions& opt,
                      std::ostream& out) {
  (void)opt;
  const CoefficientModel model = c.model();
  const LevyModel levy = c.levy();
  const TestFunction f = c.f();
  bool all = true;
  auto line = [&](const std::string& name, const std::string& value, bool pass) {
    out << std::left << std::setw(28) << name << std::setw(36) << value
        << (pass ? "pass" : "FAIL") << "\n";
    all = all && pass;
  };

  try {
    std::vector<double> probes;
    const std::size_t n = std::max<std::size_t>(c.n_probes, 2);
    for (std::size_t i = 0; i < n; ++i) {
      probes.push_back(-3.0 + 6.0 * static_cast<double>(i) / static_cast<double>(n - 1));
    }
    const EffectiveDrift ed(model, levy, kDefaultFlowTol);
    const IdentityReport id = verify_L_equals_Q(ed, f, probes, c.identity_tol);
    line("generator identity", "max |L~f - Qf| = " + detail::sci(id.max_discrepancy), id.pass);

    const double lip = model.bound_catalog().c[1];
    if (std::isfinite(lip)) {
      const BoundReport br = assert_appendix_bounds(model, appendix_samples(1000, c.seed));
      std::size_t v = 0;
      for (auto k : br.violations) v += k;
      line("flow derivative bounds", std::to_string(v) + " violations / " +
                                         std::to_string(br.n_samples) + " samples",
           br.ok());
    } else {
      line("flow derivative bounds", "||c'|| unbounded", false);
    }

    const HypothesisReport hr = check_habc(model, default_probe_grid(c.seed));
    std::size_t bad = 0;
    for (const auto& cl : hr.clauses) bad += cl.verdict != Verdict::pass;
    line("coefficient hypotheses",
         std::to_string(hr.clauses.size() - bad) + "/" + std::to_string(hr.clauses.size()) +
             " clauses bounded",
         hr.all_pass());
    for (const auto& cl : hr.clauses) {
      if (cl.verdict != Verdict::pass) {
        out << "  " << cl.name << ": " << to_string(cl.verdict) << "\n";
      }
    }

    if (levy.is_zero()) {
      line("Levy tail moment", "no jumps (vacuous)", true);
    } else if (!std::isfinite(lip)) {
      line("Levy tail moment", "||c'|| unbounded", false);
    } else {
      const MomentReport mr = check_hnu(levy, lip);
      const bool pass = mr.verdict == MomentVerdict::finite;
      const char* verdict = mr.verdict == MomentVerdict::finite
                                ? "finite"
                                : (mr.verdict == MomentVerdict::infinite ? "infinite"
                                                                         : "inconclusive");
      line("Levy tail moment",
           std::string(verdict) + (pass ? " = " + detail::sci(mr.value) : ""), pass);
      if (!pass) out << "  " << mr.detail << "\n";
    }
  } catch (const ConvergenceError& e) {
    out << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }
  return all ? kExitOk : kExitCheckFailed;
}

/// Writes paths_wz.csv and paths_oracle.csv (path_index,k,t,state) for
/// n coupled sample paths on the finest grid of the ladder.
inline int cmd_paths(const ExperimentConfig& c, const CommandOptions& opt,
                     std::ostream& out) {
  if (opt.n_export == 0 || opt.n_export > 1000) {
    out << "config error: path export count must be in [1, 1000]\n";
    return kExitConfig;
  }
  const CoefficientModel model = c.model();
  const LevyModel levy = c.levy();
  const Oracle oracle = c.oracle_kind();
  if (oracle == Oracle::exact_linear && !model.is_linear()) {
    out << "config error: exact_linear oracle requires the linear model\n";
    return kExitConfig;
  }
  const double h = c.h_list.back();
  std::string wz = "path_index,k,t,state\n";
  std::string ref = wz;
  auto append = [](std::string& dst, const PathGrid& g) {
    for (std::size_t k = 0; k < g.states.size(); ++k) {
      dst += std::to_string(g.path_index) + "," + std::to_string(k) + "," +
             format_g17(g.times[k]) + "," + format_g17(g.states[k]) + "\n";
    }
  };
  try {
    const std::size_t base =
        oracle == Oracle::reference ? detail::common_base_steps(c.T, {h, c.h_fine})
                                    : detail::common_base_steps(c.T, {h});
    for (std::size_t p = 0; p < opt.n_export; ++p) {
      const DrivingPath path(levy, c.seed, p, c.T, base);
      append(wz, simulate_wz_path(model, c.x0, h, path, c.ode_tol));
      append(ref, oracle == Oracle::reference
                      ? simulate_reference_path(model, c.x0, c.h_fine, path, c.ode_tol)
                      : exact_linear_path(model, c.x0, h, path));
    }
  } catch (const ConvergenceError& e) {
    out << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }
  try {
    detail::ensure_out_dir(c);
    write_text_file(detail::out_path(c, "paths_wz.csv"), wz);
    write_text_file(detail::out_path(c, "paths_oracle.csv"), ref);
  } catch (const std::ios_base::failure& e) {
    out << "I/O error: " << e.what() << "\n";
    return kExitIo;
  }
  out << "wrote " << opt.n_export << " paths to " << c.out_dir << "\n";
  return kExitOk;
}

}  // namespace marcus
