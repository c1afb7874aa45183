#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <variant>
#include <vector>

#include "marcus/rng.hpp"

namespace marcus {

inline constexpr int kMaxDerivativeOrder = 4;
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Sup-norms of a scalar function and its derivatives, index = order.
using SupNorms = std::array<double, kMaxDerivativeOrder + 1>;

/// Scalar coefficient function with analytic derivatives up to order 4.
///
/// Three representations are supported: polynomials, sinusoids
/// A*sin(w*x + phase) and user callables. Sinusoids keep whole quarter
/// turns of the phase as an integer so that cos x is represented exactly.
class ScalarField {
 public:
  struct Polynomial {
    std::vector<double> coeffs;  // coeffs[i] multiplies x^i
  };
  struct Sinusoid {
    double amplitude = 0.0;
    double frequency = 1.0;
    double phase = 0.0;
    int quarter_turns = 0;
  };
  struct Custom {
    std::function<double(double, int)> eval;  // (x, order) -> value
    SupNorms sup_norms;                       // declared by the author
  };

  ScalarField() : rep_(Polynomial{{0.0}}) {}

  static ScalarField zero() { return ScalarField(Polynomial{{0.0}}); }
  static ScalarField constant(double value) {
    return ScalarField(Polynomial{{value}});
  }
  static ScalarField polynomial(std::vector<double> coeffs) {
    if (coeffs.empty()) coeffs.push_back(0.0);
    while (coeffs.size() > 1 && coeffs.back() == 0.0) coeffs.pop_back();
    return ScalarField(Polynomial{std::move(coeffs)});
  }
  static ScalarField sine(double amplitude, double frequency = 1.0,
                          double phase = 0.0) {
    return ScalarField(Sinusoid{amplitude, frequency, phase, 0});
  }
  static ScalarField cosine(double amplitude, double frequency = 1.0,
                            double phase = 0.0) {
    return ScalarField(Sinusoid{amplitude, frequency, phase, 1});
  }
  static ScalarField custom(std::function<double(double, int)> eval,
                            SupNorms declared_sup_norms) {
    return ScalarField(Custom{std::move(eval), declared_sup_norms});
  }

  double operator()(double x) const { return derivative(x, 0); }

  /// d^order/dx^order at x, order in [0, 4].
  double derivative(double x, int order) const {
    if (const auto* p = std::get_if<Polynomial>(&rep_)) {
      const auto& c = p->coeffs;
      const int n = static_cast<int>(c.size());
      if (order >= n) return 0.0;
      double acc = 0.0;
      for (int i = n - 1; i >= order; --i) {
        double falling = 1.0;
        for (int j = 0; j < order; ++j) falling *= static_cast<double>(i - j);
        acc = acc * x + falling * c[static_cast<std::size_t>(i)];
      }
      return acc;
    }
    if (const auto* s = std::get_if<Sinusoid>(&rep_)) {
      const double theta = s->frequency * x + s->phase;
      double scale = s->amplitude;
      for (int j = 0; j < order; ++j) scale *= s->frequency;
      switch ((s->quarter_turns + order) % 4) {
        case 0: return scale * std::sin(theta);
        case 1: return scale * std::cos(theta);
        case 2: return -scale * std::sin(theta);
        default: return -scale * std::cos(theta);
      }
    }
    return std::get<Custom>(rep_).eval(x, order);
  }

  /// sup_x |d^order f| as far as it is known analytically (+inf when the
  /// derivative grows without bound).
  double sup_norm(int order) const {
    if (const auto* p = std::get_if<Polynomial>(&rep_)) {
      const int n = static_cast<int>(p->coeffs.size());
      if (order >= n) return 0.0;
      if (order == n - 1) return std::abs(derivative(0.0, order));
      return kInfinity;
    }
    if (const auto* s = std::get_if<Sinusoid>(&rep_)) {
      if (s->amplitude == 0.0) return 0.0;
      if (s->frequency == 0.0) {
        return order == 0 ? std::abs(derivative(0.0, 0)) : 0.0;
      }
      return std::abs(s->amplitude) * std::pow(std::abs(s->frequency), order);
    }
    return std::get<Custom>(rep_).sup_norms[static_cast<std::size_t>(order)];
  }

  /// Upper bound of sup_x |f(x) * d^order f(x)|.
  double sup_self_product(int order) const {
    if (const auto* p = std::get_if<Polynomial>(&rep_)) {
      const int n = static_cast<int>(p->coeffs.size());
      if (order >= n) return 0.0;
      if (n == 1) return 0.0;  // order >= 1 kills constants
      return kInfinity;
    }
    if (std::holds_alternative<Sinusoid>(rep_)) {
      return sup_norm(0) * sup_norm(order);
    }
    const double d = sup_norm(order);
    if (d == 0.0) return 0.0;
    return sup_norm(0) * d;
  }

  /// True for x -> slope * x (no intercept, possibly zero slope).
  bool is_linear_through_origin() const {
    const auto* p = std::get_if<Polynomial>(&rep_);
    return p != nullptr && p->coeffs.size() <= 2 && p->coeffs[0] == 0.0;
  }
  double linear_slope() const {
    const auto& c = std::get<Polynomial>(rep_).coeffs;
    return c.size() > 1 ? c[1] : 0.0;
  }
  bool is_constant() const {
    const auto* p = std::get_if<Polynomial>(&rep_);
    return p != nullptr && p->coeffs.size() == 1;
  }

 private:
  using Rep = std::variant<Polynomial, Sinusoid, Custom>;
  explicit ScalarField(Rep rep) : rep_(std::move(rep)) {}
  Rep rep_;
};

/// Recorded sup-norms of the coefficients (H_{a,b,c} data).
struct BoundCatalog {
  SupNorms a{}, b{}, c{};
  // ||b * b^(k)|| and ||c * c^(k)|| for k = 2..4 (indices 0,1 unused).
  SupNorms b_product{}, c_product{};
};

/// The triple (a, b, c) of a scalar Marcus SDE
///   dX = a(X) dt + b(X) o dW + c(X) <> dZ.
struct CoefficientModel {
  std::string name;
  std::vector<double> params;
  ScalarField a;
  ScalarField b;
  ScalarField c;

  int dim_state() const { return 1; }
  int dim_noise() const { return 1; }

  BoundCatalog bound_catalog() const {
    BoundCatalog cat;
    for (int k = 0; k <= kMaxDerivativeOrder; ++k) {
      const auto i = static_cast<std::size_t>(k);
      cat.a[i] = a.sup_norm(k);
      cat.b[i] = b.sup_norm(k);
      cat.c[i] = c.sup_norm(k);
      cat.b_product[i] = k >= 2 ? b.sup_self_product(k) : 0.0;
      cat.c_product[i] = k >= 2 ? c.sup_self_product(k) : 0.0;
    }
    return cat;
  }

  /// Global Lipschitz constants ||a'||, ||b'||, ||c'||.
  double lip_a() const { return a.sup_norm(1); }
  double lip_b() const { return b.sup_norm(1); }
  double lip_c() const { return c.sup_norm(1); }

  /// a(x) + b'(x) b(x) / 2, the drift of the Ito form of the diffusion part.
  double stratonovich_drift(double x) const {
    return a(x) + 0.5 * b.derivative(x, 1) * b(x);
  }

  bool is_linear() const {
    return a.is_linear_through_origin() && b.is_linear_through_origin() &&
           c.is_linear_through_origin();
  }
  /// (alpha, beta, M) of a linear model.
  std::array<double, 3> linear_params() const {
    if (!is_linear()) throw std::invalid_argument("model is not linear");
    return {a.linear_slope(), b.linear_slope(), c.linear_slope()};
  }
};

inline CoefficientModel builtin_model(const std::string& name,
                                      const std::vector<double>& params) {
  if (name != "linear" && name != "constant" && name != "bounded_trig") {
    throw std::invalid_argument("unknown coefficient model '" + name + "'");
  }
  if (params.size() != 3) {
    throw std::invalid_argument("model '" + name + "' takes 3 parameters, got " +
                                std::to_string(params.size()));
  }
  CoefficientModel m;
  m.name = name;
  m.params = params;
  const double p0 = params[0], p1 = params[1], p2 = params[2];
  if (name == "linear") {
    m.a = ScalarField::polynomial({0.0, p0});
    m.b = ScalarField::polynomial({0.0, p1});
    m.c = ScalarField::polynomial({0.0, p2});
  } else if (name == "constant") {
    m.a = ScalarField::constant(p0);
    m.b = ScalarField::constant(p1);
    m.c = ScalarField::constant(p2);
  } else {
    m.a = ScalarField::sine(p0);
    m.b = ScalarField::cosine(p1);
    m.c = ScalarField::sine(p2);
  }
  return m;
}

// ---------------------------------------------------------------------------
// Empirical check of the coefficient hypotheses.

enum class Verdict { pass, numerically_unbounded, unknown };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::numerically_unbounded: return "numerically-unbounded";
    default: return "unknown";
  }
}

struct HypothesisClause {
  std::string name;        // e.g. "||c''||" or "||c*c'''||"
  double empirical_sup;    // over the whole probe grid
  double inner_sup;        // over the inner half |x| <= R/2
  double declared_bound;   // from the bound catalog
  bool catalog_consistent; // empirical_sup <= declared_bound (+ rounding)
  Verdict verdict;
};

struct HypothesisReport {
  std::vector<HypothesisClause> clauses;
  bool all_pass() const {
    return std::all_of(clauses.begin(), clauses.end(), [](const auto& c) {
      return c.verdict == Verdict::pass;
    });
  }
};

/// Uniform grid on [-50, 50] (10^4 points) plus 10^3 standard normal draws.
inline std::vector<double> default_probe_grid(std::uint64_t seed = 20240101) {
  std::vector<double> grid;
  grid.reserve(11000);
  constexpr int n = 10000;
  for (int i = 0; i < n; ++i) grid.push_back(-50.0 + 100.0 * i / (n - 1));
  CounterRng rng(seed, 0, 0, Substream::probe);
  for (int i = 0; i < 1000; ++i) grid.push_back(standard_normal(rng));
  return grid;
}

namespace detail {

// Growth rule: a clause is flagged when the sup over the full grid exceeds
// 1.5x the sup over its inner half, i.e. the sup keeps growing as the grid
// expands.
inline HypothesisClause evaluate_clause(std::string name,
                                        const std::vector<double>& grid,
                                        const std::function<double(double)>& g,
                                        double declared) {
  HypothesisClause clause{std::move(name), 0.0, 0.0, declared, true,
                          Verdict::unknown};
  double radius = 0.0;
  for (double x : grid) {
    if (std::isfinite(x)) radius = std::max(radius, std::abs(x));
  }
  std::size_t n_inner = 0, n_outer = 0;
  bool finite = true;
  for (double x : grid) {
    if (!std::isfinite(x)) continue;
    const double v = std::abs(g(x));
    if (!std::isfinite(v)) finite = false;
    clause.empirical_sup = std::max(clause.empirical_sup, v);
    if (std::abs(x) <= 0.5 * radius) {
      clause.inner_sup = std::max(clause.inner_sup, v);
      ++n_inner;
    } else {
      ++n_outer;
    }
  }
  clause.catalog_consistent =
      clause.empirical_sup <= declared * (1.0 + 1e-9) + 1e-12;
  if (!finite) {
    clause.verdict = Verdict::numerically_unbounded;
  } else if (radius == 0.0 || n_inner == 0 || n_outer == 0) {
    clause.verdict = Verdict::unknown;
  } else if (clause.empirical_sup > 1.5 * clause.inner_sup + 1e-12) {
    clause.verdict = Verdict::numerically_unbounded;
  } else {
    clause.verdict = Verdict::pass;
  }
  return clause;
}

inline std::string prime_label(int order) {
  switch (order) {
    case 1: return "'";
    case 2: return "''";
    case 3: return "'''";
    default: return "''''";
  }
}

}  // namespace detail

/// Evaluates every clause of H_{a,b,c} on the probe grid. Verdicts are
/// empirical.
inline HypothesisReport check_habc(const CoefficientModel& model,
                                   const std::vector<double>& probe_grid) {
  HypothesisReport report;
  const BoundCatalog cat = model.bound_catalog();
  const std::array<std::pair<const char*, const ScalarField*>, 3> fields{
      {{"a", &model.a}, {"b", &model.b}, {"c", &model.c}}};
  const std::array<const SupNorms*, 3> sups{&cat.a, &cat.b, &cat.c};
  for (std::size_t f = 0; f < fields.size(); ++f) {
    const ScalarField& field = *fields[f].second;
    for (int k = 1; k <= kMaxDerivativeOrder; ++k) {
      report.clauses.push_back(detail::evaluate_clause(
          std::string("||") + fields[f].first + detail::prime_label(k) + "||",
          probe_grid, [&field, k](double x) { return field.derivative(x, k); },
          (*sups[f])[static_cast<std::size_t>(k)]));
    }
  }
  for (const auto& [label, field, products] :
       {std::tuple{"b", &model.b, &cat.b_product},
        std::tuple{"c", &model.c, &cat.c_product}}) {
    for (int k = 2; k <= kMaxDerivativeOrder; ++k) {
      const ScalarField& g = *field;
      report.clauses.push_back(detail::evaluate_clause(
          std::string("||") + label + "*" + label + detail::prime_label(k) + "||",
          probe_grid, [&g, k](double x) { return g(x) * g.derivative(x, k); },
          (*products)[static_cast<std::size_t>(k)]));
    }
  }
  return report;
}

}  // namespace marcus
