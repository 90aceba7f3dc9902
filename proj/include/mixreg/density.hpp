#pragma once

#include "mixreg/distributions.hpp"
#include "mixreg/errors.hpp"
#include "mixreg/functional.hpp"
#include "mixreg/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace mixreg {

enum class BandwidthRule
{
  PlugIn,
  Fixed,
  ScaleRule,
};

/// Gaussian-kernel density settings.
struct DensityConfig
{
  BandwidthRule rule = BandwidthRule::PlugIn;
  double fixed_h = 0.0;
  /// Report max(f_n, 0) instead of the raw estimate.
  bool clamp = false;
};

namespace detail {

inline double sample_sd(std::span<const double> v)
{
  double mean = 0.0;
  for (double x : v) {
    mean += x;
  }
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) {
    ss += (x - mean) * (x - mean);
  }
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

// type-7 sample quantile of sorted data
inline double sorted_quantile(std::span<const double> s, double p)
{
  const double h = (static_cast<double>(s.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (h - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

/// Probabilists' Hermite polynomials He_4 and He_6; phi^(r)(z) = He_r(z) phi(z) for even r.
inline double hermite_even(int r, double z)
{
  const double z2 = z * z;
  switch (r) {
    case 4:
      return (z2 - 6.0) * z2 + 3.0;
    case 6:
      return ((z2 - 15.0) * z2 + 45.0) * z2 - 15.0;
    default:
      throw ConfigError("hermite_even: only r = 4 and r = 6 are used");
  }
}

/// Linear binning of `x` onto `m` equally spaced points spanning [a, b].
inline std::vector<double> linear_bin(std::span<const double> x, double a, double b, std::size_t m)
{
  std::vector<double> counts(m, 0.0);
  const double delta = (b - a) / static_cast<double>(m - 1);
  for (double v : x) {
    const double pos = (v - a) / delta;
    if (pos < 0.0 || pos > static_cast<double>(m - 1)) {
      continue;
    }
    const auto li = static_cast<std::size_t>(pos);
    const double rem = pos - static_cast<double>(li);
    counts[li] += 1.0 - rem;
    if (li + 1 < m) {
      counts[li + 1] += rem;
    }
  }
  return counts;
}

/// Binned estimate of psi_r = E f^(r)(X) with a Gaussian kernel of bandwidth g.
inline double binned_functional(std::span<const double> counts, double delta, double n, int r,
                                double g)
{
  const auto m = counts.size();
  const double tau = 4.0 + r;
  const auto reach = std::min<std::size_t>(
    static_cast<std::size_t>(std::floor(tau * g / delta)), m - 1);
  std::vector<double> kern(reach + 1);
  const double scale = std::pow(g, -(r + 1));
  for (std::size_t l = 0; l <= reach; ++l) {
    const double z = static_cast<double>(l) * delta / g;
    kern[l] = scale * hermite_even(r, z) * normal_pdf(z);
  }
  double total = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    if (counts[k] == 0.0) {
      continue;
    }
    double s = kern[0] * counts[k];
    const std::size_t up = std::min(reach, m - 1 - k);
    for (std::size_t l = 1; l <= up; ++l) {
      s += kern[l] * counts[k + l];
    }
    const std::size_t down = std::min(reach, k);
    for (std::size_t l = 1; l <= down; ++l) {
      s += kern[l] * counts[k - l];
    }
    total += counts[k] * s;
  }
  return total / (n * n);
}

} // namespace detail

/// Exact O(n^2) kernel functional estimate, n^-2 sum_ij g^(-r-1) phi^(r)((x_i - x_j)/g).
inline double kernel_functional_exact(std::span<const double> x, int r, double g)
{
  const double scale = std::pow(g, -(r + 1));
  double total = 0.0;
  for (double xi : x) {
    for (double xj : x) {
      const double z = (xi - xj) / g;
      total += detail::hermite_even(r, z) * normal_pdf(z);
    }
  }
  const double n = static_cast<double>(x.size());
  return scale * total / (n * n);
}

inline constexpr std::size_t kPlugInGridSize = 401;

/// Robust scale min(sd, IQR / 1.349).
inline double normal_scale(std::span<const double> x)
{
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  const double sd = detail::sample_sd(s);
  const double iqr = detail::sorted_quantile(s, 0.75) - detail::sorted_quantile(s, 0.25);
  const double iqr_scale = iqr / (2.0 * normal_quantile(0.75));
  return iqr_scale > 0.0 ? std::min(sd, iqr_scale) : sd;
}

/// Two-stage direct plug-in bandwidth for a Gaussian kernel on standardized,
/// linearly binned data. `exact` replaces the binned functionals by the O(n^2) sums.
inline double plug_in_bandwidth(std::span<const double> x, bool exact = false)
{
  const double n = static_cast<double>(x.size());
  const double scale = normal_scale(x);
  double mean = 0.0;
  for (double v : x) {
    mean += v;
  }
  mean /= n;
  std::vector<double> z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    z[i] = (x[i] - mean) / scale;
  }
  const auto [lo_it, hi_it] = std::minmax_element(z.begin(), z.end());
  const double a = *lo_it;
  const double b = *hi_it;
  const std::size_t m = kPlugInGridSize;
  const double delta = (b - a) / static_cast<double>(m - 1);
  const std::vector<double> counts = exact ? std::vector<double>{} : detail::linear_bin(z, a, b, m);
  auto psi = [&](int r, double g) {
    return exact ? kernel_functional_exact(z, r, g)
                 : detail::binned_functional(counts, delta, n, r, g);
  };

  const double sqrt2 = std::numbers::sqrt2;
  const double g6 = std::pow(2.0 * std::pow(sqrt2, 9) / (7.0 * n), 1.0 / 9.0);
  const double psi6 = psi(6, g6);
  if (!(psi6 < 0.0)) {
    throw NumericError("plug-in bandwidth: sixth-order functional estimate is not negative");
  }
  const double g4 = std::pow(-3.0 * std::sqrt(2.0 / std::numbers::pi) / (psi6 * n), 1.0 / 7.0);
  const double psi4 = psi(4, g4);
  if (!(psi4 > 0.0)) {
    throw NumericError("plug-in bandwidth: fourth-order functional estimate is not positive");
  }
  return scale * std::pow(1.0 / (2.0 * std::sqrt(std::numbers::pi) * psi4 * n), 0.2);
}

/// Bandwidth h_n for the residual sample under `cfg`.
inline double select_bandwidth(std::span<const double> residuals, const DensityConfig& cfg)
{
  if (cfg.rule == BandwidthRule::Fixed) {
    if (!(cfg.fixed_h > 0.0) || !std::isfinite(cfg.fixed_h)) {
      throw ConfigError("fixed bandwidth must be positive and finite");
    }
    return cfg.fixed_h;
  }
  if (residuals.size() < 4) {
    throw ConfigError("bandwidth selection needs at least 4 residuals");
  }
  const double sd = detail::sample_sd(residuals);
  if (!(sd > 0.0)) {
    throw DegenerateDesign("bandwidth selection: residuals have zero variance");
  }
  if (cfg.rule == BandwidthRule::ScaleRule) {
    return 1.06 * sd * std::pow(static_cast<double>(residuals.size()), -0.2);
  }
  return plug_in_bandwidth(residuals);
}

/// f_n(t) = (1/pi){(1/(nh)) sum kappa((t - r_i)/h) - ((1 - pi)/n) sum f*(t + alpha + beta x_i)}.
class DensityEstimator
{
public:
  DensityEstimator(const Dataset& data, const KnownComponent& known,
                   const EuclideanParams& params, const DensityConfig& cfg = {})
    : known_(known)
    , params_(params)
    , cfg_(cfg)
  {
    detail::require_nonzero_pi(params.pi);
    residuals_ = residuals(data, eta_of(params));
    shifts_.reserve(data.size());
    for (const Observation& o : data) {
      shifts_.push_back(params.alpha + params.beta * o.x);
    }
    h_ = select_bandwidth(residuals_, cfg);
  }

  double bandwidth() const noexcept { return h_; }

  /// Kernel density of the residuals at t.
  double kernel_part(double t) const
  {
    double s = 0.0;
    for (double r : residuals_) {
      s += normal_pdf((t - r) / h_);
    }
    return s / (static_cast<double>(residuals_.size()) * h_);
  }

  /// Mean of f*(t + alpha + beta x_i).
  double known_part(double t) const
  {
    double s = 0.0;
    for (double c : shifts_) {
      s += known_.f_star.pdf(t + c);
    }
    return s / static_cast<double>(shifts_.size());
  }

  /// Raw f_n(t); never clamped.
  double raw(double t) const
  {
    const double pi = params_.pi;
    return (kernel_part(t) - (1.0 - pi) * known_part(t)) / pi;
  }

  /// f_n(t), clamped at zero when the configuration asks for it.
  double operator()(double t) const
  {
    const double v = raw(t);
    return cfg_.clamp ? std::max(v, 0.0) : v;
  }

  std::vector<double> raw_on(std::span<const double> ts) const
  {
    std::vector<double> out;
    out.reserve(ts.size());
    for (double t : ts) {
      out.push_back(raw(t));
    }
    return out;
  }

private:
  KnownComponent known_;
  EuclideanParams params_;
  DensityConfig cfg_;
  std::vector<double> residuals_;
  std::vector<double> shifts_;
  double h_ = 0.0;
};

inline double f_n_pdf(const Dataset& data, const KnownComponent& known,
                      const EuclideanParams& params, double t, const DensityConfig& cfg = {})
{
  return DensityEstimator(data, known, params, cfg)(t);
}

inline double f_n_pdf(const Dataset& data, const KnownComponent& known, const EuclideanFit& fit,
                      double t, const DensityConfig& cfg = {})
{
  return f_n_pdf(data, known, fit.params, t, cfg);
}

/// Trapezoidal integral of max(f, 0) over equally spaced points.
inline double integrate_positive_part(std::span<const double> ts, std::span<const double> f)
{
  double s = 0.0;
  for (std::size_t k = 1; k < ts.size(); ++k) {
    s += 0.5 * (std::max(f[k - 1], 0.0) + std::max(f[k], 0.0)) * (ts[k] - ts[k - 1]);
  }
  return s;
}

/// Central differences of F over the grid; stand-in for f_n when density
/// estimation is switched off.
inline std::vector<double> difference_density(std::span<const double> ts,
                                              std::span<const double> cdf)
{
  const std::size_t m = ts.size();
  std::vector<double> d(m, 0.0);
  if (m < 2) {
    return d;
  }
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t a = k == 0 ? 0 : k - 1;
    const std::size_t b = k + 1 == m ? m - 1 : k + 1;
    d[k] = (cdf[b] - cdf[a]) / (ts[b] - ts[a]);
  }
  return d;
}

} // namespace mixreg
