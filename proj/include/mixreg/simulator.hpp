#pragma once

#include "mixreg/distributions.hpp"
#include "mixreg/errors.hpp"
#include "mixreg/model.hpp"
#include "mixreg/parallel.hpp"
#include "mixreg/rng.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace mixreg {

/// Data-generating process of the canonical model.
struct ScenarioConfig
{
  std::string name = "custom";
  KnownComponent known{};
  EuclideanParams params{};
  double x_mean = 0.0;
  double x_sd = 1.0;
  ErrorDistribution eps_law{};
  std::size_t n = 0;
  std::uint64_t seed = 0;
};

struct SimulatedData
{
  Dataset data;
  /// z_i = 1 when row i came from the unknown component. Test-only side channel.
  std::vector<unsigned char> latent;
};

inline void validate(const ScenarioConfig& cfg)
{
  if (!(cfg.params.pi > 0.0 && cfg.params.pi <= 1.0)) {
    throw ConfigError("scenario: pi0 must lie in (0, 1]");
  }
  if (cfg.params.beta == 0.0) {
    throw ConfigError("scenario: beta0 must be nonzero");
  }
  if (!(cfg.x_sd > 0.0)) {
    throw ConfigError("scenario: sd of X must be positive");
  }
  if (cfg.n == 0) {
    throw ConfigError("scenario: n must be at least 1");
  }
}

namespace detail {

enum SimStream : std::uint64_t
{
  kStreamX = 0,
  kStreamZ = 1,
  kStreamEps = 2,
  kStreamEpsStar = 3,
};

inline constexpr std::size_t kSimChunk = 4096;

} // namespace detail

/// Draws n rows. Each variable of each row has its own counter-based stream,
/// The output is independent of chunking; growing n only appends rows.
inline SimulatedData simulate(const ScenarioConfig& cfg, std::size_t threads = 1)
{
  validate(cfg);
  const std::array<std::uint64_t, 4> keys{ derive_seed(cfg.seed, detail::kStreamX),
                                           derive_seed(cfg.seed, detail::kStreamZ),
                                           derive_seed(cfg.seed, detail::kStreamEps),
                                           derive_seed(cfg.seed, detail::kStreamEpsStar) };
  std::vector<Observation> rows(cfg.n);
  std::vector<unsigned char> z(cfg.n);
  const ErrorDistribution& eps_star = cfg.known.f_star;
  const std::size_t chunks = (cfg.n + detail::kSimChunk - 1) / detail::kSimChunk;
  parallel_for(chunks, threads, [&](std::size_t c) {
    const std::size_t end = std::min(cfg.n, (c + 1) * detail::kSimChunk);
    for (std::size_t i = c * detail::kSimChunk; i < end; ++i) {
      Rng rx(keys[0], i);
      Rng rz(keys[1], i);
      Rng re(keys[2], i);
      Rng rs(keys[3], i);
      const double x = cfg.x_mean + cfg.x_sd * rx.normal();
      const bool unknown = rz.uniform() < cfg.params.pi;
      const double eps = cfg.eps_law.sample(re);
      const double star = eps_star.sample(rs);
      rows[i] = { x, unknown ? cfg.params.alpha + cfg.params.beta * x + eps : star };
      z[i] = unknown ? 1 : 0;
    }
  });
  return { Dataset(std::move(rows)), std::move(z) };
}

/// The nine built-in names: {WO, MO, SO} x {n, g, e}.
inline constexpr std::array<std::string_view, 9> kBuiltinScenarios{
  "WOn", "WOg", "WOe", "MOn", "MOg", "MOe", "SOn", "SOg", "SOe"
};

/// Error law with the given variance for the family letter n, g or e.
inline ErrorDistribution error_family(char family, double variance)
{
  switch (family) {
    case 'n':
      return NormalError{ std::sqrt(variance) };
    case 'g':
      return ShiftedGammaError{ 2.0, 0.5, variance };
    case 'e':
      return ShiftedExponentialError{ variance };
    default:
      throw ConfigError(std::string("unknown error family '") + family + "'");
  }
}

/// Configuration of a built-in scenario. The known component is N(0, 1) on the zero line.
inline ScenarioConfig builtin_scenario(std::string_view name, double pi0, std::size_t n,
                                       std::uint64_t seed)
{
  if (name.size() != 3) {
    throw ConfigError("unknown scenario '" + std::string(name) + "'");
  }
  const std::string_view geometry = name.substr(0, 2);
  ScenarioConfig cfg;
  double variance = 0.0;
  if (geometry == "WO") {
    cfg.params = { 2.0, 1.0, pi0 };
    cfg.x_mean = 2.0;
    cfg.x_sd = 3.0;
    variance = 1.0;
  } else if (geometry == "MO") {
    cfg.params = { 2.0, 1.0, pi0 };
    cfg.x_mean = 2.0;
    cfg.x_sd = 3.0;
    variance = 4.0;
  } else if (geometry == "SO") {
    cfg.params = { 1.0, 0.5, pi0 };
    cfg.x_mean = 1.0;
    cfg.x_sd = 2.0;
    variance = 4.0;
  } else {
    throw ConfigError("unknown scenario '" + std::string(name) + "'");
  }
  const char family = name[2];
  if (family != 'n' && family != 'g' && family != 'e') {
    throw ConfigError("unknown scenario '" + std::string(name) + "'");
  }
  cfg.name = std::string(name);
  cfg.eps_law = error_family(family, variance);
  cfg.known = KnownComponent{ 0.0, 0.0, NormalError{ 1.0 } };
  cfg.n = n;
  cfg.seed = seed;
  validate(cfg);
  return cfg;
}

} // namespace mixreg
