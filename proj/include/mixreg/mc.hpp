#pragma once

#include "mixreg/bootstrap.hpp"
#include "mixreg/density.hpp"
#include "mixreg/errors.hpp"
#include "mixreg/euclidean.hpp"
#include "mixreg/functional.hpp"
#include "mixreg/parallel.hpp"
#include "mixreg/rng.hpp"
#include "mixreg/simulator.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace mixreg {

/// Probabilities p at which F_n{F^{-1}(p)} is tracked.
inline constexpr std::array<double, 3> kTrackedLevels{ 0.1, 0.5, 0.9 };

/// Estimator columns: alpha, beta, pi, then F_n at the three tracked quantiles.
inline constexpr std::size_t kMcColumns = 6;
inline constexpr std::array<const char*, kMcColumns> kMcColumnNames{
  "alpha", "beta", "pi", "F(q0.1)", "F(q0.5)", "F(q0.9)"
};

enum class McStudy
{
  Bias,
  StandardError,
  Coverage,
};

struct McConfig
{
  std::string scenario = "WOn";
  double pi0 = 0.7;
  std::size_t n = 1000;
  std::size_t replicates = 1000;
  std::uint64_t seed = 1;
  McStudy study = McStudy::Bias;
  /// Bootstrap replicates per sample (coverage study only).
  std::size_t bootstrap_replicates = 500;
  double level = 0.05;
  std::size_t grid_points = 100;
  std::size_t threads = 1;
  /// Every replicate uses the same data seed (degenerate configuration for tests).
  bool reuse_seed = false;
  DensityConfig density{};
};

/// What one replicate produced.
struct McOutcome
{
  bool valid = false;
  std::array<double, kMcColumns> estimate{};
  std::array<double, kMcColumns> se{};
  bool miss = false;
  double sup_deviation = 0.0;
  double halfwidth = 0.0;
};

struct McColumn
{
  std::optional<double> bias;
  std::optional<double> sd;
  std::optional<double> sqrt_n_sd;
  std::optional<double> sqrt_n_mean_se;
};

struct McReport
{
  McConfig config;
  std::size_t invalid = 0;
  std::array<double, kMcColumns> truth{};
  std::array<McColumn, kMcColumns> columns{};
  std::optional<double> miss_rate;
  std::vector<McOutcome> outcomes;
};

inline std::uint64_t replicate_data_seed(const McConfig& cfg, std::size_t j)
{
  return derive_seed(cfg.seed, cfg.reuse_seed ? 0 : 2 * j);
}

inline std::uint64_t replicate_bootstrap_seed(const McConfig& cfg, std::size_t j)
{
  return derive_seed(cfg.seed, cfg.reuse_seed ? 1 : 2 * j + 1);
}

/// True values of the six tracked quantities for a scenario.
inline std::array<double, kMcColumns> mc_truth(const ScenarioConfig& sc)
{
  return { sc.params.alpha, sc.params.beta, sc.params.pi,
           kTrackedLevels[0], kTrackedLevels[1], kTrackedLevels[2] };
}

/// Runs replicate j of the study.
inline McOutcome run_replicate(const McConfig& cfg, std::size_t j)
{
  const ScenarioConfig sc =
    builtin_scenario(cfg.scenario, cfg.pi0, cfg.n, replicate_data_seed(cfg, j));
  const SimulatedData sim = simulate(sc);
  const Dataset& data = sim.data;
  McOutcome out;
  FitResult fit;
  try {
    fit = fit_euclidean(data);
  } catch (const DegenerateDesign&) {
    return out;
  } catch (const OutsideDomain&) {
    return out;
  }
  if (!fit.euclidean.pi_valid) {
    return out;
  }
  out.valid = true;
  const EuclideanParams& p = fit.euclidean.params;
  out.estimate[0] = p.alpha;
  out.estimate[1] = p.beta;
  out.estimate[2] = p.pi;

  EvaluationGrid quantiles;
  for (double level : kTrackedLevels) {
    quantiles.points.push_back(sc.eps_law.quantile(level));
  }
  const FunctionalFit at_q = f_n_cdf(data, sc.known, p, quantiles);
  for (std::size_t k = 0; k < 3; ++k) {
    out.estimate[3 + k] = at_q.f_raw[k];
  }

  if (cfg.study == McStudy::StandardError) {
    for (std::size_t k = 0; k < 3; ++k) {
      out.se[k] = fit.euclidean.std_errors[static_cast<Eigen::Index>(k)];
    }
    const DensityEstimator dens(data, sc.known, p, cfg.density);
    const auto f_q = dens.raw_on(quantiles.points);
    const InfluenceMatrix psi = influence_matrix(data, sc.known, fit.euclidean, fit.gamma,
                                                 quantiles, f_q);
    for (std::size_t k = 0; k < 3; ++k) {
      const auto row = psi.row(static_cast<Eigen::Index>(k));
      out.se[3 + k] = pointwise_se(std::span<const double>(row.data(), data.size()));
    }
  }

  if (cfg.study == McStudy::Coverage) {
    const EvaluationGrid grid = residual_grid(data, eta_of(p), cfg.grid_points);
    const FunctionalFit fn = f_n_cdf(data, sc.known, p, grid);
    BootstrapConfig bc;
    bc.replicates = cfg.bootstrap_replicates;
    bc.level = cfg.level;
    bc.seed = replicate_bootstrap_seed(cfg, j);
    bc.threads = 1;
    const BandResult b = band(data, sc.known, fit.euclidean, fit.gamma, grid, fn, bc, cfg.density);
    double dev = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      dev = std::max(dev, std::abs(fn.f_raw[k] - sc.eps_law.cdf(grid.points[k])));
    }
    out.sup_deviation = dev;
    out.halfwidth = b.halfwidth;
    out.miss = dev > b.halfwidth;
  }
  return out;
}

/// Aggregates replicate outcomes; only replicates with mask[j] set enter the moments.
inline McReport summarize(const McConfig& cfg, std::vector<McOutcome> outcomes,
                          const std::vector<bool>& mask)
{
  McReport r;
  r.config = cfg;
  r.truth = mc_truth(builtin_scenario(cfg.scenario, cfg.pi0, cfg.n, cfg.seed));
  std::size_t valid = 0;
  for (std::size_t j = 0; j < outcomes.size(); ++j) {
    valid += mask[j] ? 1 : 0;
  }
  r.invalid = outcomes.size() - valid;
  const double root_n = std::sqrt(static_cast<double>(cfg.n));
  for (std::size_t c = 0; c < kMcColumns; ++c) {
    if (valid == 0) {
      break;
    }
    double mean = 0.0;
    double mean_se = 0.0;
    for (std::size_t j = 0; j < outcomes.size(); ++j) {
      if (mask[j]) {
        mean += outcomes[j].estimate[c];
        mean_se += outcomes[j].se[c];
      }
    }
    mean /= static_cast<double>(valid);
    mean_se /= static_cast<double>(valid);
    McColumn& col = r.columns[c];
    col.bias = mean - r.truth[c];
    if (valid >= 2) {
      double ss = 0.0;
      for (std::size_t j = 0; j < outcomes.size(); ++j) {
        if (mask[j]) {
          const double d = outcomes[j].estimate[c] - mean;
          ss += d * d;
        }
      }
      col.sd = std::sqrt(ss / static_cast<double>(valid - 1));
      col.sqrt_n_sd = root_n * *col.sd;
    }
    if (cfg.study == McStudy::StandardError) {
      col.sqrt_n_mean_se = root_n * mean_se;
    }
  }
  if (cfg.study == McStudy::Coverage && valid > 0) {
    std::size_t misses = 0;
    for (std::size_t j = 0; j < outcomes.size(); ++j) {
      if (mask[j] && outcomes[j].miss) {
        ++misses;
      }
    }
    r.miss_rate = static_cast<double>(misses) / static_cast<double>(valid);
  }
  r.outcomes = std::move(outcomes);
  return r;
}

inline McReport run_study(const McConfig& cfg)
{
  if (cfg.replicates < 2) {
    throw ConfigError("Monte Carlo study needs M >= 2");
  }
  if (cfg.study == McStudy::Coverage && cfg.bootstrap_replicates < 20) {
    throw ConfigError("coverage study needs N >= 20");
  }
  builtin_scenario(cfg.scenario, cfg.pi0, cfg.n, cfg.seed);
  std::vector<McOutcome> outcomes(cfg.replicates);
  parallel_for(cfg.replicates, cfg.threads, [&](std::size_t j) { outcomes[j] = run_replicate(cfg, j); });
  std::vector<bool> mask(outcomes.size());
  for (std::size_t j = 0; j < outcomes.size(); ++j) {
    mask[j] = outcomes[j].valid;
  }
  return summarize(cfg, std::move(outcomes), mask);
}

inline McReport run_bias_study(McConfig cfg)
{
  cfg.study = McStudy::Bias;
  return run_study(cfg);
}

inline McReport run_se_study(McConfig cfg)
{
  cfg.study = McStudy::StandardError;
  return run_study(cfg);
}

inline McReport run_coverage_study(McConfig cfg)
{
  cfg.study = McStudy::Coverage;
  return run_study(cfg);
}

/// One row per estimator: name, bias, sd, sqrt(n) sd, sqrt(n) mean se. Empty cells are "NA".
inline void write_report_tsv(std::ostream& os, const McReport& r)
{
  auto cell = [&os](const std::optional<double>& v) {
    if (v) {
      os << *v;
    } else {
      os << "NA";
    }
  };
  const auto old_precision = os.precision(10);
  os << "# scenario=" << r.config.scenario << "\tpi0=" << r.config.pi0 << "\tn=" << r.config.n
     << "\tM=" << r.config.replicates << "\tm=" << r.invalid;
  if (r.miss_rate) {
    os << "\tmiss_rate=" << *r.miss_rate;
  }
  os << "\n";
  os << "estimator\tbias\tsd\tsqrt_n_sd\tsqrt_n_mean_se\n";
  for (std::size_t c = 0; c < kMcColumns; ++c) {
    os << kMcColumnNames[c] << '\t';
    cell(r.columns[c].bias);
    os << '\t';
    cell(r.columns[c].sd);
    os << '\t';
    cell(r.columns[c].sqrt_n_sd);
    os << '\t';
    cell(r.columns[c].sqrt_n_mean_se);
    os << '\n';
  }
  os.precision(old_precision);
}

} // namespace mixreg
