#pragma once

#include "mixreg/errors.hpp"
#include "mixreg/rng.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace mixreg {

namespace detail {

inline constexpr double kInvSqrt2 = 0.70710678118654752440;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

} // namespace detail

inline double normal_cdf(double z)
{
  return 0.5 * std::erfc(-z * detail::kInvSqrt2);
}

inline double normal_pdf(double z)
{
  return detail::kInvSqrt2Pi * std::exp(-0.5 * z * z);
}

inline double normal_quantile(double p)
{
  if (!(p > 0.0 && p < 1.0)) {
    throw ConfigError("normal_quantile: probability must lie in (0, 1)");
  }
  return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p);
}

/// Centered normal error law N(0, sigma^2).
struct NormalError
{
  double sigma = 1.0;
};

/// Gamma(shape, rate), shifted to mean zero and rescaled to variance `variance`.
struct ShiftedGammaError
{
  double shape = 2.0;
  double rate = 0.5;
  double variance = 1.0;
};

/// Standard exponential shifted to mean zero and rescaled to `variance`.
struct ShiftedExponentialError
{
  double variance = 1.0;
};

/// Piecewise-linear c.d.f. through user-supplied (t, F(t)) knots. The c.d.f.
/// is 0 left of the first knot and 1 right of the last one.
struct TabulatedCdfError
{
  std::vector<double> t;
  std::vector<double> cdf;
};

/// Law of an error term: c.d.f., p.d.f., quantiles and sampling.
class ErrorDistribution
{
public:
  using Variant = std::variant<NormalError, ShiftedGammaError, ShiftedExponentialError,
                               TabulatedCdfError>;

  ErrorDistribution()
    : law_(NormalError{})
  {
  }

  ErrorDistribution(NormalError law)
    : law_(law)
  {
    if (!(law.sigma > 0.0) || !std::isfinite(law.sigma)) {
      throw ConfigError("normal error: sigma must be positive and finite");
    }
  }

  ErrorDistribution(ShiftedGammaError law)
    : law_(law)
  {
    if (!(law.shape > 0.0 && law.rate > 0.0 && law.variance > 0.0)) {
      throw ConfigError("gamma error: shape, rate and variance must be positive");
    }
  }

  ErrorDistribution(ShiftedExponentialError law)
    : law_(law)
  {
    if (!(law.variance > 0.0)) {
      throw ConfigError("exponential error: variance must be positive");
    }
  }

  ErrorDistribution(TabulatedCdfError law)
    : law_(std::move(law))
  {
    const auto& tab = std::get<TabulatedCdfError>(law_);
    if (tab.t.size() < 3 || tab.t.size() != tab.cdf.size()) {
      throw ConfigError("tabulated c.d.f.: need at least 3 (t, F) knots");
    }
    for (std::size_t k = 0; k < tab.t.size(); ++k) {
      if (!std::isfinite(tab.t[k]) || !std::isfinite(tab.cdf[k])) {
        throw ConfigError("tabulated c.d.f.: non-finite knot " + std::to_string(k));
      }
      if (k > 0 && (tab.t[k] <= tab.t[k - 1] || tab.cdf[k] < tab.cdf[k - 1])) {
        throw ConfigError("tabulated c.d.f.: knots must be increasing in t and "
                          "nondecreasing in F (knot " +
                          std::to_string(k) + ")");
      }
    }
    if (tab.cdf.front() < 0.0 || tab.cdf.back() > 1.0) {
      throw ConfigError("tabulated c.d.f.: values must lie in [0, 1]");
    }
  }

  const Variant& law() const noexcept { return law_; }

  double cdf(double t) const
  {
    return std::visit([t](const auto& d) { return cdf_of(d, t); }, law_);
  }

  double pdf(double t) const
  {
    return std::visit([t](const auto& d) { return pdf_of(d, t); }, law_);
  }

  /// Generalized inverse of the c.d.f. Gamma quantiles are found by bisection
  /// on the regularized incomplete gamma function to 1e-10.
  double quantile(double p) const
  {
    if (!(p > 0.0 && p < 1.0)) {
      throw ConfigError("quantile: probability must lie in (0, 1)");
    }
    return std::visit([p](const auto& d) { return quantile_of(d, p); }, law_);
  }

  double variance() const
  {
    return std::visit([](const auto& d) { return variance_of(d); }, law_);
  }

  double sample(Rng& rng) const
  {
    return std::visit([&rng](const auto& d) { return sample_of(d, rng); }, law_);
  }

  /// Descriptor in the CLI grammar (normal:<sigma>, gamma:..., exp:..., table).
  std::string describe() const
  {
    struct V
    {
      std::string operator()(const NormalError& d) const
      {
        return "normal:" + num(d.sigma);
      }
      std::string operator()(const ShiftedGammaError& d) const
      {
        return "gamma:" + num(d.shape) + ":" + num(d.rate) + ":" + num(d.variance);
      }
      std::string operator()(const ShiftedExponentialError& d) const
      {
        return "exp:" + num(d.variance);
      }
      std::string operator()(const TabulatedCdfError& d) const
      {
        return "table[" + std::to_string(d.t.size()) + " knots]";
      }
      static std::string num(double v)
      {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
      }
    };
    return std::visit(V{}, law_);
  }

private:
  // scale factor mapping the raw law onto the requested variance
  static double gamma_scale(const ShiftedGammaError& d)
  {
    return std::sqrt(d.variance * d.rate * d.rate / d.shape);
  }

  static double cdf_of(const NormalError& d, double t) { return normal_cdf(t / d.sigma); }
  static double pdf_of(const NormalError& d, double t)
  {
    return normal_pdf(t / d.sigma) / d.sigma;
  }
  static double quantile_of(const NormalError& d, double p)
  {
    return d.sigma * normal_quantile(p);
  }
  static double variance_of(const NormalError& d) { return d.sigma * d.sigma; }
  static double sample_of(const NormalError& d, Rng& rng) { return d.sigma * rng.normal(); }

  static double cdf_of(const ShiftedGammaError& d, double t)
  {
    const double g = t / gamma_scale(d) + d.shape / d.rate;
    if (g <= 0.0) {
      return 0.0;
    }
    if (g == std::numeric_limits<double>::infinity()) {
      return 1.0;
    }
    return boost::math::gamma_p(d.shape, d.rate * g);
  }
  static double pdf_of(const ShiftedGammaError& d, double t)
  {
    const double s = gamma_scale(d);
    const double g = t / s + d.shape / d.rate;
    if (g <= 0.0 || !std::isfinite(g)) {
      return 0.0;
    }
    return d.rate * boost::math::gamma_p_derivative(d.shape, d.rate * g) / s;
  }
  static double quantile_of(const ShiftedGammaError& d, double p)
  {
    const double s = gamma_scale(d);
    double lo = 0.0;
    double hi = d.shape / d.rate + 1.0 / d.rate;
    while (boost::math::gamma_p(d.shape, d.rate * hi) < p) {
      hi *= 2.0;
    }
    while (hi - lo > 1e-10 * std::max(1.0, hi)) {
      const double mid = 0.5 * (lo + hi);
      if (boost::math::gamma_p(d.shape, d.rate * mid) < p) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return s * (0.5 * (lo + hi) - d.shape / d.rate);
  }
  static double variance_of(const ShiftedGammaError& d) { return d.variance; }
  static double sample_of(const ShiftedGammaError& d, Rng& rng)
  {
    return gamma_scale(d) * (rng.gamma(d.shape) / d.rate - d.shape / d.rate);
  }

  static double cdf_of(const ShiftedExponentialError& d, double t)
  {
    const double e = t / std::sqrt(d.variance) + 1.0;
    return e <= 0.0 ? 0.0 : -std::expm1(-e);
  }
  static double pdf_of(const ShiftedExponentialError& d, double t)
  {
    const double s = std::sqrt(d.variance);
    const double e = t / s + 1.0;
    return e < 0.0 ? 0.0 : std::exp(-e) / s;
  }
  static double quantile_of(const ShiftedExponentialError& d, double p)
  {
    return std::sqrt(d.variance) * (-std::log1p(-p) - 1.0);
  }
  static double variance_of(const ShiftedExponentialError& d) { return d.variance; }
  static double sample_of(const ShiftedExponentialError& d, Rng& rng)
  {
    return std::sqrt(d.variance) * (rng.exponential() - 1.0);
  }

  static double cdf_of(const TabulatedCdfError& d, double t)
  {
    if (t <= d.t.front()) {
      return t < d.t.front() ? 0.0 : d.cdf.front();
    }
    if (t >= d.t.back()) {
      return 1.0;
    }
    const auto it = std::upper_bound(d.t.begin(), d.t.end(), t);
    const std::size_t k = static_cast<std::size_t>(it - d.t.begin());
    const double w = (t - d.t[k - 1]) / (d.t[k] - d.t[k - 1]);
    return d.cdf[k - 1] + w * (d.cdf[k] - d.cdf[k - 1]);
  }
  // centered differences on the knots, interpolated linearly in between
  static double knot_density(const TabulatedCdfError& d, std::size_t k)
  {
    const std::size_t last = d.t.size() - 1;
    const std::size_t a = k == 0 ? 0 : k - 1;
    const std::size_t b = k == last ? last : k + 1;
    return (d.cdf[b] - d.cdf[a]) / (d.t[b] - d.t[a]);
  }
  static double pdf_of(const TabulatedCdfError& d, double t)
  {
    if (t < d.t.front() || t > d.t.back()) {
      return 0.0;
    }
    const auto it = std::upper_bound(d.t.begin(), d.t.end(), t);
    std::size_t k = static_cast<std::size_t>(it - d.t.begin());
    if (k == d.t.size()) {
      return knot_density(d, k - 1);
    }
    const double w = (t - d.t[k - 1]) / (d.t[k] - d.t[k - 1]);
    return (1.0 - w) * knot_density(d, k - 1) + w * knot_density(d, k);
  }
  static double quantile_of(const TabulatedCdfError& d, double p)
  {
    if (p <= d.cdf.front()) {
      return d.t.front();
    }
    const auto it = std::lower_bound(d.cdf.begin(), d.cdf.end(), p);
    if (it == d.cdf.end()) {
      return d.t.back();
    }
    const std::size_t k = static_cast<std::size_t>(it - d.cdf.begin());
    const double span = d.cdf[k] - d.cdf[k - 1];
    const double w = span > 0.0 ? (p - d.cdf[k - 1]) / span : 1.0;
    return d.t[k - 1] + w * (d.t[k] - d.t[k - 1]);
  }
  static double variance_of(const TabulatedCdfError& d)
  {
    // exact moments of the piecewise-uniform law implied by linear interpolation
    double m1 = d.t.front() * d.cdf.front();
    double m2 = d.t.front() * d.t.front() * d.cdf.front();
    for (std::size_t k = 1; k < d.t.size(); ++k) {
      const double mass = d.cdf[k] - d.cdf[k - 1];
      const double a = d.t[k - 1];
      const double b = d.t[k];
      m1 += mass * 0.5 * (a + b);
      m2 += mass * (a * a + a * b + b * b) / 3.0;
    }
    m1 += d.t.back() * (1.0 - d.cdf.back());
    m2 += d.t.back() * d.t.back() * (1.0 - d.cdf.back());
    return m2 - m1 * m1;
  }
  static double sample_of(const TabulatedCdfError& d, Rng& rng)
  {
    return quantile_of(d, rng.uniform());
  }

  Variant law_;
};

} // namespace mixreg
