#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

using namespace mixreg;
using namespace mixreg::testing;

namespace {

std::vector<double> normal_draws(std::size_t n, std::uint64_t seed)
{
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) {
    x = rng.normal();
  }
  return v;
}

} // namespace

TEST(Bandwidth, ScaleRule)
{
  const auto r = normal_draws(1000, 1);
  const double h = select_bandwidth(r, { BandwidthRule::ScaleRule });
  EXPECT_NEAR(h, 1.06 * std::pow(1000.0, -0.2), 0.02 * 0.266 + 0.266 * 0.05);
  EXPECT_NEAR(h / (1.06 * detail::sample_sd(r) * std::pow(1000.0, -0.2)), 1.0, 1e-14);
}

TEST(Bandwidth, FixedPassthrough)
{
  const auto r = normal_draws(10, 2);
  DensityConfig cfg;
  cfg.rule = BandwidthRule::Fixed;
  cfg.fixed_h = 0.5;
  EXPECT_EQ(select_bandwidth(r, cfg), 0.5);
  cfg.fixed_h = -1.0;
  EXPECT_THROW((void)select_bandwidth(r, cfg), ConfigError);
}

TEST(Bandwidth, PlugInCloseToScaleRuleOnNormalData)
{
  const auto r = normal_draws(10000, 3);
  const double pi = select_bandwidth(r, {});
  const double sr = select_bandwidth(r, { BandwidthRule::ScaleRule });
  EXPECT_GE(pi / sr, 0.8);
  EXPECT_LE(pi / sr, 1.2);
}

TEST(Bandwidth, BinnedAgreesWithExactFunctionals)
{
  for (std::uint64_t seed : { 4u, 5u, 6u }) {
    const auto r = normal_draws(800, seed);
    const double binned = plug_in_bandwidth(r);
    const double exact = plug_in_bandwidth(r, true);
    EXPECT_NEAR(binned / exact, 1.0, 0.01);
  }
}

TEST(Bandwidth, ExactFunctionalMatchesExpectation)
{
  // E of the double sum for N(0, 1) data: diagonal term plus phi_s^(4)(0) with s^2 = 2 + g^2
  const double g = 0.3;
  const double n = 2000.0;
  const double s = std::sqrt(2.0 + g * g);
  const double want = 3.0 * normal_pdf(0.0) / (n * std::pow(g, 5)) +
                      (1.0 - 1.0 / n) * 3.0 * normal_pdf(0.0) / std::pow(s, 5);
  double mean = 0.0;
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    mean += kernel_functional_exact(normal_draws(2000, 100 + seed), 4, g) / 12.0;
  }
  EXPECT_NEAR(mean, want, 0.04);
}

TEST(Bandwidth, ZeroVarianceIsDegenerate)
{
  const std::vector<double> r(20, 1.5);
  EXPECT_THROW((void)select_bandwidth(r, {}), DegenerateDesign);
  const std::vector<double> few{ 1.0, 2.0, 3.0 };
  EXPECT_THROW((void)select_bandwidth(few, {}), ConfigError);
}

TEST(FnPdf, PiOneIsKernelDensity)
{
  Rng rng(8);
  const Dataset d = random_dataset(rng, 100);
  const EuclideanParams p{ 0.2, 0.5, 1.0 };
  DensityConfig cfg;
  cfg.rule = BandwidthRule::Fixed;
  cfg.fixed_h = 0.4;
  const auto r = residuals(d, eta_of(p));
  for (double t : { -1.0, 0.0, 0.8 }) {
    double s = 0.0;
    for (double v : r) {
      s += std::exp(-0.5 * std::pow((t - v) / 0.4, 2)) / std::sqrt(2.0 * M_PI);
    }
    EXPECT_NEAR(f_n_pdf(d, standard_known(), p, t, cfg), s / (100 * 0.4), 1e-14);
  }
}

TEST(FnPdf, SingleObservationKernelPeak)
{
  const Dataset d({ { 1.0, 3.0 } });
  const EuclideanParams p{ 1.0, 2.0, 1.0 };
  DensityConfig cfg;
  cfg.rule = BandwidthRule::Fixed;
  cfg.fixed_h = 1.0;
  EXPECT_NEAR(f_n_pdf(d, standard_known(), p, 0.0, cfg), 0.3989422804014327, 1e-15);
}

TEST(FnPdf, DisplayedFormulaWithCorrection)
{
  Rng rng(9);
  const Dataset d = random_dataset(rng, 60);
  const EuclideanParams p{ 0.4, -0.7, 0.6 };
  DensityConfig cfg;
  cfg.rule = BandwidthRule::Fixed;
  cfg.fixed_h = 0.3;
  const double t = 0.25;
  double ker = 0.0;
  double corr = 0.0;
  for (const auto& o : d) {
    ker += normal_pdf((t - o.y + p.alpha + p.beta * o.x) / 0.3);
    corr += normal_pdf(t + p.alpha + p.beta * o.x);
  }
  const double want = (ker / (60 * 0.3) - (1 - p.pi) * corr / 60) / p.pi;
  const DensityEstimator est(d, standard_known(), p, cfg);
  EXPECT_NEAR(est.raw(t), want, 1e-14);
  cfg.clamp = true;
  const DensityEstimator clamped(d, standard_known(), p, cfg);
  EXPECT_EQ(clamped(t), std::max(want, 0.0));
}

TEST(FnPdf, ZeroPiThrows)
{
  EXPECT_THROW(DensityEstimator(fixture_d0(), standard_known(), EuclideanParams{ 2, 1, 0.0 }),
               OutsideDomain);
}

TEST(FnPdf, KernelPartIntegratesToOne)
{
  Rng rng(10);
  const Dataset d = random_dataset(rng, 200);
  const EuclideanParams p{ 0.1, 0.3, 0.5 };
  const DensityEstimator est(d, standard_known(), p);
  const auto r = residuals(d, eta_of(p));
  const double lo = *std::min_element(r.begin(), r.end()) - 12.0 * est.bandwidth();
  const double hi = *std::max_element(r.begin(), r.end()) + 12.0 * est.bandwidth();
  const int m = 20000;
  double s = 0.0;
  for (int k = 0; k <= m; ++k) {
    const double t = lo + (hi - lo) * k / m;
    s += (k == 0 || k == m ? 0.5 : 1.0) * est.kernel_part(t);
  }
  EXPECT_NEAR(s * (hi - lo) / m, 1.0, 1e-6);
}

TEST(FnPdf, ClampedIntegralNearOneOnScenarios)
{
  for (const char* name : { "WOn", "MOg", "SOe" }) {
    const auto sc = builtin_scenario(name, 0.7, 1000, 21);
    const auto sim = simulate(sc);
    const auto fit = fit_euclidean(sim.data);
    ASSERT_TRUE(fit.euclidean.pi_valid) << name;
    const auto grid = residual_grid(sim.data, eta_of(fit.euclidean.params), 400);
    const DensityEstimator est(sim.data, sc.known, fit.euclidean.params);
    const auto f = est.raw_on(grid.points);
    EXPECT_NEAR(integrate_positive_part(grid.points, f), 1.0, 0.15) << name;
  }
}

TEST(FnPdf, InvariantUnderCovariateTranslation)
{
  Rng rng(11);
  const Dataset d = random_dataset(rng, 150);
  const EuclideanParams p{ 0.3, 0.8, 0.7 };
  const double c = 1.7;
  std::vector<Observation> shifted(d.begin(), d.end());
  for (auto& o : shifted) {
    o.x += c;
  }
  const DensityEstimator a(d, standard_known(), p);
  const DensityEstimator b(Dataset(shifted), standard_known(),
                           EuclideanParams{ p.alpha - p.beta * c, p.beta, p.pi });
  EXPECT_NEAR(a.bandwidth(), b.bandwidth(), 1e-12);
  for (double t : { -2.0, -0.5, 0.0, 1.0, 2.5 }) {
    EXPECT_NEAR(a.raw(t), b.raw(t), 1e-12);
  }
}

TEST(FnPdf, UniformConsistency)
{
  int good = 0;
  for (std::uint64_t rep = 0; rep < 20; ++rep) {
    const auto sc = builtin_scenario("WOn", 0.7, 100000, 900 + rep);
    const auto sim = simulate(sc);
    const auto fit = fit_euclidean(sim.data);
    const DensityEstimator est(sim.data, sc.known, fit.euclidean.params);
    double worst = 0.0;
    for (int k = 0; k < 200; ++k) {
      const double t = -3.0 + 6.0 * k / 199.0;
      worst = std::max(worst, std::fabs(est.raw(t) - sc.eps_law.pdf(t)));
    }
    good += worst < 0.05 ? 1 : 0;
  }
  EXPECT_GE(good, 19);
}

TEST(DifferenceDensity, LinearCdf)
{
  const std::vector<double> t{ 0.0, 1.0, 2.0, 3.0 };
  const std::vector<double> f{ 0.0, 0.25, 0.5, 0.75 };
  for (double v : difference_density(t, f)) {
    EXPECT_DOUBLE_EQ(v, 0.25);
  }
}
