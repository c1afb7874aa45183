#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "marcus/coefficients.hpp"

namespace marcus {

enum class TestFunctionTag { poly_truncated, gaussian_bump, cosine, identity, combination };

inline const char* to_string(TestFunctionTag t) {
  switch (t) {
    case TestFunctionTag::poly_truncated: return "poly_truncated";
    case TestFunctionTag::gaussian_bump: return "gaussian_bump";
    case TestFunctionTag::cosine: return "cosine";
    case TestFunctionTag::identity: return "identity";
    default: return "combination";
  }
}

namespace detail {

// Probabilists' Hermite polynomials He_0 .. He_5.
inline double hermite(int k, double u) {
  const double u2 = u * u;
  switch (k) {
    case 0: return 1.0;
    case 1: return u;
    case 2: return u2 - 1.0;
    case 3: return u * (u2 - 3.0);
    case 4: return u2 * u2 - 6.0 * u2 + 3.0;
    default: return u * (u2 * u2 - 10.0 * u2 + 15.0);
  }
}

}  // namespace detail

/// Real test function with analytic derivatives up to order 4.
class TestFunction {
 public:
  using Eval = std::function<double(double, int)>;

  TestFunction(TestFunctionTag tag, std::vector<double> params, Eval eval)
      : tag_(tag), params_(std::move(params)), eval_(std::move(eval)) {}

  TestFunctionTag tag() const { return tag_; }
  const std::vector<double>& params() const { return params_; }

  double operator()(double x) const { return eval_(x, 0); }
  double derivative(double x, int order) const { return eval_(x, order); }

  /// exp(-(x - center)^2 / (2 width^2)).
  static TestFunction gaussian_bump(double center = 0.0, double width = 1.0) {
    if (!(width > 0.0)) throw std::invalid_argument("width must be > 0");
    return TestFunction(TestFunctionTag::gaussian_bump, {center, width},
                        [center, width](double x, int k) {
                          const double u = (x - center) / width;
                          const double sign = (k % 2 == 0) ? 1.0 : -1.0;
                          return sign * detail::hermite(k, u) *
                                 std::exp(-0.5 * u * u) / std::pow(width, k);
                        });
  }

  /// (x - center) exp(-(x - center)^2 / (2 scale^2)): linear near the
  /// centre, truncated smoothly in the tails.
  static TestFunction poly_truncated(double center = 0.0, double scale = 1.0) {
    if (!(scale > 0.0)) throw std::invalid_argument("scale must be > 0");
    return TestFunction(TestFunctionTag::poly_truncated, {center, scale},
                        [center, scale](double x, int k) {
                          const double u = (x - center) / scale;
                          const double sign = (k % 2 == 0) ? 1.0 : -1.0;
                          return sign * detail::hermite(k + 1, u) *
                                 std::exp(-0.5 * u * u) * std::pow(scale, 1 - k);
                        });
  }

  /// cos(frequency x + phase).
  static TestFunction cosine(double frequency = 1.0, double phase = 0.0) {
    return TestFunction(TestFunctionTag::cosine, {frequency, phase},
                        [frequency, phase](double x, int k) {
                          const double theta = frequency * x + phase;
                          const double scale = std::pow(frequency, k);
                          switch (k % 4) {
                            case 0: return scale * std::cos(theta);
                            case 1: return -scale * std::sin(theta);
                            case 2: return -scale * std::cos(theta);
                            default: return scale * std::sin(theta);
                          }
                        });
  }

  /// f(x) = x. Not bounded; meant for the linear model only.
  static TestFunction identity() {
    return TestFunction(TestFunctionTag::identity, {},
                        [](double x, int k) { return k == 0 ? x : (k == 1 ? 1.0 : 0.0); });
  }

  /// alpha f + beta g.
  static TestFunction combine(double alpha, const TestFunction& f, double beta,
                              const TestFunction& g) {
    return TestFunction(TestFunctionTag::combination, {alpha, beta},
                        [alpha, beta, f, g](double x, int k) {
                          return alpha * f.derivative(x, k) + beta * g.derivative(x, k);
                        });
  }

  /// Sup-norms of f, f', ..., f'''' sampled on a dense grid around the
  /// feature of the function (+inf for the identity).
  SupNorms sampled_sup_norms() const {
    SupNorms out{};
    if (tag_ == TestFunctionTag::identity) {
      out = {kInfinity, 1.0, 0.0, 0.0, 0.0};
      return out;
    }
    for (int i = -20000; i <= 20000; ++i) {
      const double x = 1e-3 * i;
      for (int k = 0; k <= kMaxDerivativeOrder; ++k) {
        auto& s = out[static_cast<std::size_t>(k)];
        s = std::max(s, std::abs(derivative(x, k)));
      }
    }
    return out;
  }

 private:
  TestFunctionTag tag_;
  std::vector<double> params_;
  Eval eval_;
};

inline TestFunction make_test_function(const std::string& tag,
                                       const std::vector<double>& params) {
  auto param = [&](std::size_t i, double fallback) {
    return i < params.size() ? params[i] : fallback;
  };
  if (params.size() > 2) {
    throw std::invalid_argument("test functions take at most 2 parameters");
  }
  if (tag == "gaussian_bump") return TestFunction::gaussian_bump(param(0, 0.0), param(1, 1.0));
  if (tag == "poly_truncated") return TestFunction::poly_truncated(param(0, 0.0), param(1, 1.0));
  if (tag == "cosine") return TestFunction::cosine(param(0, 1.0), param(1, 0.0));
  if (tag == "identity") {
    if (!params.empty()) throw std::invalid_argument("identity takes no parameters");
    return TestFunction::identity();
  }
  throw std::invalid_argument("unknown test function '" + tag + "'");
}

}  // namespace marcus
