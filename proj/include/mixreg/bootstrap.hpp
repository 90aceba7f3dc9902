#pragma once

#include "mixreg/density.hpp"
#include "mixreg/errors.hpp"
#include "mixreg/euclidean.hpp"
#include "mixreg/functional.hpp"
#include "mixreg/parallel.hpp"
#include "mixreg/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace mixreg {

/// Multiplier bootstrap settings. Multipliers are standard normal.
struct BootstrapConfig
{
  std::size_t replicates = 1000;
  double level = 0.05;
  std::uint64_t seed = 1;
  /// Worker cap; 0 uses every hardware thread. Results do not depend on it.
  std::size_t threads = 1;
};

struct BandResult
{
  double halfwidth = 0.0;
  std::vector<double> sup_stats;
  std::vector<double> band_lo;
  std::vector<double> band_hi;
  std::vector<double> band_lo_raw;
  std::vector<double> band_hi_raw;
};

/// Replicates per GEMM block; fixed, independent of the thread count.
inline constexpr std::size_t kBootstrapBlock = 32;

inline void validate(const BootstrapConfig& cfg)
{
  if (cfg.replicates < 1) {
    throw ConfigError("bootstrap: at least one replicate is required");
  }
  if (!(cfg.level > 0.0 && cfg.level < 1.0)) {
    throw ConfigError("bootstrap: level p must lie in (0, 1)");
  }
}

/// n^{-1/2} sum_i (xi_i - mean xi) psi_{t,i} for every row t of `influence`.
inline std::vector<double> multiplier_process(const InfluenceMatrix& influence,
                                              std::span<const double> xi)
{
  const auto n = static_cast<std::size_t>(influence.cols());
  if (xi.size() != n) {
    throw ConfigError("multiplier_process: one multiplier per observation required");
  }
  double mean = 0.0;
  for (double v : xi) {
    mean += v;
  }
  mean /= static_cast<double>(n);
  const double root_n = std::sqrt(static_cast<double>(n));
  std::vector<double> out(static_cast<std::size_t>(influence.rows()));
  for (Eigen::Index t = 0; t < influence.rows(); ++t) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      s += (xi[i] - mean) * influence(t, static_cast<Eigen::Index>(i));
    }
    out[static_cast<std::size_t>(t)] = s / root_n;
  }
  return out;
}

/// Standard normal multipliers of replicate j: stream j of the seed.
inline std::vector<double> replicate_multipliers(std::uint64_t seed, std::size_t j, std::size_t n)
{
  Rng rng(seed, j);
  std::vector<double> xi(n);
  for (double& v : xi) {
    v = rng.normal();
  }
  return xi;
}

/// sup_t |G'^{(j)} psi_t| for j = 0..N-1, computed in blocks of replicates
/// as one matrix product per block.
inline std::vector<double> sup_statistics(const InfluenceMatrix& influence,
                                          const BootstrapConfig& cfg)
{
  validate(cfg);
  const Eigen::Index n = influence.cols();
  const double root_n = std::sqrt(static_cast<double>(n));
  const std::size_t replicates = cfg.replicates;
  const std::size_t blocks = (replicates + kBootstrapBlock - 1) / kBootstrapBlock;
  std::vector<double> sup(replicates, 0.0);
  parallel_for(blocks, cfg.threads, [&](std::size_t b) {
    const std::size_t first = b * kBootstrapBlock;
    const std::size_t width = std::min(kBootstrapBlock, replicates - first);
    Eigen::MatrixXd xi(n, static_cast<Eigen::Index>(width));
    for (std::size_t c = 0; c < width; ++c) {
      Rng rng(cfg.seed, first + c);
      auto col = xi.col(static_cast<Eigen::Index>(c));
      double mean = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        col(i) = rng.normal();
        mean += col(i);
      }
      mean /= static_cast<double>(n);
      col.array() -= mean;
    }
    const Eigen::MatrixXd g = influence * xi;
    for (std::size_t c = 0; c < width; ++c) {
      sup[first + c] = g.col(static_cast<Eigen::Index>(c)).cwiseAbs().maxCoeff() / root_n;
    }
  });
  return sup;
}

/// 1-based rank ceil(N (1 - p)) of the generalized-inverse quantile.
inline std::size_t quantile_rank(std::size_t replicates, double level)
{
  const double r = std::ceil(static_cast<double>(replicates) * (1.0 - level) - 1e-9);
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(r, 1.0)), 1, replicates);
}

/// G^{-1}_{n,N}(1 - p): smallest x with G_{n,N}(x) >= 1 - p.
inline double sup_quantile(std::span<const double> sup_stats, double level)
{
  std::vector<double> s(sup_stats.begin(), sup_stats.end());
  const std::size_t k = quantile_rank(s.size(), level);
  std::nth_element(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(k - 1), s.end());
  return s[k - 1];
}

/// Band F_n -/+ halfwidth from precomputed sup statistics.
inline BandResult band_from_sup(std::vector<double> sup_stats, std::size_t n,
                                const FunctionalFit& functional, double level)
{
  BandResult out;
  out.halfwidth = sup_quantile(sup_stats, level) / std::sqrt(static_cast<double>(n));
  out.sup_stats = std::move(sup_stats);
  const std::size_t m = functional.f_raw.size();
  out.band_lo.resize(m);
  out.band_hi.resize(m);
  out.band_lo_raw.resize(m);
  out.band_hi_raw.resize(m);
  for (std::size_t k = 0; k < m; ++k) {
    out.band_lo_raw[k] = functional.f_raw[k] - out.halfwidth;
    out.band_hi_raw[k] = functional.f_raw[k] + out.halfwidth;
    out.band_lo[k] = std::clamp(out.band_lo_raw[k], 0.0, 1.0);
    out.band_hi[k] = std::clamp(out.band_hi_raw[k], 0.0, 1.0);
  }
  return out;
}

/// Band from an already built influence matrix.
inline BandResult band(const InfluenceMatrix& influence, const FunctionalFit& functional,
                       const BootstrapConfig& cfg)
{
  auto sup = sup_statistics(influence, cfg);
  return band_from_sup(std::move(sup), static_cast<std::size_t>(influence.cols()), functional,
                       cfg.level);
}

/// Full path: f_n on the grid, the influence matrix, then the bootstrap band.
inline BandResult band(const Dataset& data, const KnownComponent& known, const EuclideanFit& fit,
                       const GammaEstimate& g, const EvaluationGrid& grid,
                       const FunctionalFit& functional, const BootstrapConfig& cfg,
                       const DensityConfig& density = {})
{
  validate(cfg);
  detail::require_nonzero_pi(fit.params.pi);
  const DensityEstimator f(data, known, fit.params, density);
  const std::vector<double> dens = f.raw_on(grid.points);
  const InfluenceMatrix psi = influence_matrix(data, known, fit, g, grid, dens);
  return band(psi, functional, cfg);
}

} // namespace mixreg
