#pragma once

#include "mixreg/errors.hpp"
#include "mixreg/euclidean.hpp"
#include "mixreg/model.hpp"
#include "mixreg/moments.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace mixreg {

/// Intercept and slope at which residuals are formed.
struct Eta
{
  double alpha = 0.0;
  double beta = 0.0;
};

inline Eta eta_of(const EuclideanParams& p) noexcept
{
  return { p.alpha, p.beta };
}

/// y_i - alpha - beta x_i, in row order.
inline std::vector<double> residuals(const Dataset& data, Eta eta)
{
  std::vector<double> r;
  r.reserve(data.size());
  for (const Observation& o : data) {
    r.push_back(o.y - eta.alpha - eta.beta * o.x);
  }
  return r;
}

/// J_n(t, eta): empirical c.d.f. of the residuals, evaluated directly.
inline double j_n(const Dataset& data, Eta eta, double t)
{
  std::size_t count = 0;
  for (const Observation& o : data) {
    if (o.y - eta.alpha - eta.beta * o.x <= t) {
      ++count;
    }
  }
  return static_cast<double>(count) / static_cast<double>(data.size());
}

/// J_n backed by one sort of the residuals; each evaluation is a binary search.
class ResidualEcdf
{
public:
  ResidualEcdf(const Dataset& data, Eta eta)
    : sorted_(residuals(data, eta))
  {
    std::sort(sorted_.begin(), sorted_.end());
  }

  double operator()(double t) const
  {
    const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), t);
    return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
  }

  const std::vector<double>& sorted() const noexcept { return sorted_; }

private:
  std::vector<double> sorted_;
};

/// K_n(t, eta) = mean of F*(t + alpha + beta x_i).
inline double k_n(const Dataset& data, const KnownComponent& known, Eta eta, double t)
{
  double s = 0.0;
  for (const Observation& o : data) {
    s += known.f_star.cdf(t + eta.alpha + eta.beta * o.x);
  }
  return s / static_cast<double>(data.size());
}

/// Points at which F_n, f_n and the band are evaluated.
struct EvaluationGrid
{
  std::vector<double> points;

  /// `count` equally spaced points on [lo, hi]; a single point if lo == hi.
  static EvaluationGrid uniform(double lo, double hi, std::size_t count)
  {
    if (count == 0 || !(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
      throw ConfigError("evaluation grid needs count >= 1 and finite lo <= hi");
    }
    EvaluationGrid g;
    if (count == 1 || lo == hi) {
      g.points.push_back(lo);
      return g;
    }
    g.points.resize(count);
    const double step = (hi - lo) / static_cast<double>(count - 1);
    for (std::size_t k = 0; k < count; ++k) {
      g.points[k] = lo + step * static_cast<double>(k);
    }
    g.points.back() = hi;
    return g;
  }

  std::size_t size() const noexcept { return points.size(); }
};

/// Default grid: `count` points spanning [min residual, max residual].
inline EvaluationGrid residual_grid(const Dataset& data, Eta eta, std::size_t count = 100)
{
  const auto r = residuals(data, eta);
  const auto [lo, hi] = std::minmax_element(r.begin(), r.end());
  return EvaluationGrid::uniform(*lo, *hi, count);
}

/// F_n on a grid with its building blocks.
struct FunctionalFit
{
  EvaluationGrid grid;
  std::vector<double> f_raw;
  std::vector<double> f_clamped;
  std::vector<double> j_vals;
  std::vector<double> k_vals;
  /// Pointwise standard errors; empty until computed from the influence values.
  std::vector<double> se;
};

namespace detail {

inline void require_nonzero_pi(double pi)
{
  if (!(pi != 0.0) || !std::isfinite(pi)) {
    throw OutsideDomain("pi_n is zero or not finite: F_n and f_n are undefined");
  }
}

} // namespace detail

/// F_n(t) = {J_n(t, eta_n) - (1 - pi_n) K_n(t, eta_n)} / pi_n on every grid point.
inline FunctionalFit f_n_cdf(const Dataset& data, const KnownComponent& known,
                             const EuclideanParams& params, const EvaluationGrid& grid)
{
  detail::require_nonzero_pi(params.pi);
  const Eta eta = eta_of(params);
  const ResidualEcdf ecdf(data, eta);
  FunctionalFit f;
  f.grid = grid;
  const std::size_t m = grid.size();
  f.f_raw.resize(m);
  f.f_clamped.resize(m);
  f.j_vals.resize(m);
  f.k_vals.resize(m);
  const double pi = params.pi;
  for (std::size_t k = 0; k < m; ++k) {
    const double t = grid.points[k];
    f.j_vals[k] = ecdf(t);
    f.k_vals[k] = k_n(data, known, eta, t);
    f.f_raw[k] = (f.j_vals[k] - (1.0 - pi) * f.k_vals[k]) / pi;
    f.f_clamped[k] = std::clamp(f.f_raw[k], 0.0, 1.0);
  }
  return f;
}

inline FunctionalFit f_n_cdf(const Dataset& data, const KnownComponent& known,
                             const EuclideanFit& fit, const EvaluationGrid& grid)
{
  return f_n_cdf(data, known, fit.params, grid);
}

/// Precomputed pieces shared by every t in the estimated influence function.
/// Holds a reference to the data, which must outlive the builder.
class InfluenceBuilder
{
public:
  InfluenceBuilder(const Dataset& data, const KnownComponent& known, const EuclideanFit& fit,
                   const GammaEstimate& g)
    : data_(data)
    , known_(known)
    , params_(fit.params)
    , euclid_(euclidean_influence(data, g, fit.jacobian))
    , ecdf_(data, eta_of(fit.params))
  {
    detail::require_nonzero_pi(params_.pi);
    double sx = 0.0;
    for (const Observation& o : data) {
      sx += o.x;
    }
    mean_x_ = sx / static_cast<double>(data.size());
  }

  /// Writes psi_hat^F_{t}(x_i, y_i) for every row into `out` (size n).
  void fill(double t, double density_at_t, std::span<double> out) const
  {
    const double pi = params_.pi;
    const double a = params_.alpha;
    const double b = params_.beta;
    const std::size_t n = data_.size();
    // P_n psi^K - P_n psi^J at eta_n
    double k_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double kv = known_.f_star.cdf(t + a + b * data_[i].x);
      out[i] = kv;
      k_sum += kv;
    }
    const double k_mean = k_sum / static_cast<double>(n);
    const double j_mean = ecdf_(t);
    const double c_pi = (k_mean - j_mean) / (pi * pi);
    const double c_k = (1.0 - pi) / pi;
    const double c_alpha = density_at_t;
    const double c_beta = density_at_t * mean_x_;
    for (std::size_t i = 0; i < n; ++i) {
      const Observation& o = data_[i];
      const auto ii = static_cast<Eigen::Index>(i);
      const double ind = (o.y - a - b * o.x <= t) ? 1.0 : 0.0;
      out[i] = ind / pi + c_alpha * euclid_(ii, 0) + c_beta * euclid_(ii, 1) - c_k * out[i] +
               c_pi * euclid_(ii, 2);
    }
  }

  const Eigen::Matrix<double, Eigen::Dynamic, 3>& euclidean_part() const noexcept
  {
    return euclid_;
  }

private:
  const Dataset& data_;
  KnownComponent known_;
  EuclideanParams params_;
  Eigen::Matrix<double, Eigen::Dynamic, 3> euclid_;
  ResidualEcdf ecdf_;
  double mean_x_ = 0.0;
};

/// Estimated influence values psi_hat^F_t(x_i, y_i), one per row, with
/// f_n(t) supplied by the caller.
inline std::vector<double> influence_hat(const Dataset& data, const KnownComponent& known,
                                         const EuclideanFit& fit, const GammaEstimate& g,
                                         double f_n_at_t, double t)
{
  const InfluenceBuilder builder(data, known, fit, g);
  std::vector<double> out(data.size());
  builder.fill(t, f_n_at_t, out);
  return out;
}

/// Row-major |grid| x n matrix of influence values.
using InfluenceMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline InfluenceMatrix influence_matrix(const Dataset& data, const KnownComponent& known,
                                        const EuclideanFit& fit, const GammaEstimate& g,
                                        const EvaluationGrid& grid,
                                        std::span<const double> density_on_grid)
{
  if (density_on_grid.size() != grid.size()) {
    throw ConfigError("influence_matrix: one density value per grid point required");
  }
  const InfluenceBuilder builder(data, known, fit, g);
  const auto n = static_cast<Eigen::Index>(data.size());
  InfluenceMatrix m(static_cast<Eigen::Index>(grid.size()), n);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    builder.fill(grid.points[k], density_on_grid[k],
                 std::span<double>(m.row(static_cast<Eigen::Index>(k)).data(),
                                   static_cast<std::size_t>(n)));
  }
  return m;
}

/// n^{-1/2} {P_n psi^2 - (P_n psi)^2}^{1/2}, n = influence.size().
inline double pointwise_se(std::span<const double> influence)
{
  const std::size_t n = influence.size();
  if (n < 2) {
    throw ConfigError("pointwise_se needs at least two influence values");
  }
  double mean = 0.0;
  for (double v : influence) {
    mean += v;
  }
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : influence) {
    ss += (v - mean) * (v - mean);
  }
  return std::sqrt(ss / static_cast<double>(n)) / std::sqrt(static_cast<double>(n));
}

/// Fills fit.se from the rows of an influence matrix.
inline void attach_pointwise_se(FunctionalFit& fit, const InfluenceMatrix& influence)
{
  fit.se.resize(fit.grid.size());
  for (std::size_t k = 0; k < fit.grid.size(); ++k) {
    const auto row = influence.row(static_cast<Eigen::Index>(k));
    fit.se[k] = pointwise_se(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())));
  }
}

} // namespace mixreg
