#pragma once

#include "mixreg.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

namespace mixreg::testing {

/// The four-point fixture on the line y = x + 2.
inline Dataset fixture_d0()
{
  return Dataset({ { -1.0, 1.0 }, { 0.0, 2.0 }, { 1.0, 3.0 }, { 2.0, 4.0 } });
}

inline KnownComponent standard_known()
{
  return KnownComponent{ 0.0, 0.0, NormalError{ 1.0 } };
}

/// Random mixture-shaped dataset of size n: x ~ N(mu, sd), y from a random
/// two-component mixture with random coefficients.
inline Dataset random_dataset(Rng& rng, std::size_t n)
{
  const double mu = 4.0 * rng.uniform() - 2.0;
  const double sd = 0.5 + 2.5 * rng.uniform();
  const double a = 4.0 * rng.uniform() - 2.0;
  const double b = (rng.uniform() < 0.5 ? -1.0 : 1.0) * (0.3 + 1.5 * rng.uniform());
  const double pi = 0.2 + 0.8 * rng.uniform();
  std::vector<Observation> rows(n);
  for (auto& o : rows) {
    o.x = mu + sd * rng.normal();
    o.y = rng.uniform() < pi ? a + b * o.x + 0.7 * rng.normal() : rng.normal();
  }
  return Dataset(std::move(rows));
}

/// Random point of the parameter-map domain: a gamma vector built from
/// plausible moments of X and random regression coefficients.
inline Vec8 random_gamma(Rng& rng)
{
  const double mu = 3.0 * rng.uniform() - 1.5;
  const double s2 = 0.3 + 3.0 * rng.uniform();
  // raw moments of N(mu, s2)
  const double m1 = mu;
  const double m2 = mu * mu + s2;
  const double m3 = mu * mu * mu + 3.0 * mu * s2;
  const double m4 = mu * mu * mu * mu + 6.0 * mu * mu * s2 + 3.0 * s2 * s2;
  Vec8 g;
  g << 3.0 * rng.uniform() - 1.5, 0.3 + 2.0 * rng.uniform(), 2.0 * rng.uniform(),
    0.3 + 2.0 * rng.uniform(), m1, m2, m3, m4;
  return g;
}

/// Plain O(n) OLS of v on (1, r) with long double accumulators.
inline std::array<double, 2> oracle_ols(const std::vector<double>& r, const std::vector<double>& v)
{
  long double sr = 0, sv = 0;
  const auto n = static_cast<long double>(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    sr += r[i];
    sv += v[i];
  }
  const long double mr = sr / n;
  const long double mv = sv / n;
  long double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    sxy += (r[i] - mr) * (v[i] - mv);
    sxx += (r[i] - mr) * (r[i] - mr);
  }
  const long double slope = sxy / sxx;
  return { static_cast<double>(mv - slope * mr), static_cast<double>(slope) };
}

inline double rel_err(double got, double want)
{
  return std::fabs(got - want) / std::max(1.0, std::fabs(want));
}

} // namespace mixreg::testing
