#include "mixreg/distributions.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

using namespace mixreg;

namespace {

std::vector<ErrorDistribution> parametric_laws()
{
  return { NormalError{ 1.0 },           NormalError{ 2.0 },
           ShiftedGammaError{ 2.0, 0.5, 1.0 }, ShiftedGammaError{ 2.0, 0.5, 4.0 },
           ShiftedExponentialError{ 1.0 }, ShiftedExponentialError{ 4.0 } };
}

/// Integral of t^k f(t) over the support, by adaptive Gauss-Kronrod.
double moment(const ErrorDistribution& d, int k)
{
  using boost::math::quadrature::gauss_kronrod;
  const double lo = d.quantile(1e-15);
  auto f = [&](double t) { return std::pow(t, k) * d.pdf(t); };
  const double left = std::isfinite(lo) ? lo : -std::numeric_limits<double>::infinity();
  // split at zero: the kink of the shifted laws sits on an endpoint
  double a = gauss_kronrod<double, 61>::integrate(f, left, 0.0, 15, 1e-13);
  double b = gauss_kronrod<double, 61>::integrate(f, 0.0, std::numeric_limits<double>::infinity(),
                                                  15, 1e-13);
  return a + b;
}

} // namespace

TEST(ErrorDistribution, SamplingMeanAndVariance)
{
  for (const auto& d : parametric_laws()) {
    Rng rng(17);
    const int n = 1000000;
    double s = 0.0;
    double s2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double v = d.sample(rng);
      s += v;
      s2 += v * v;
    }
    const double mean = s / n;
    const double var = s2 / n - mean * mean;
    const double sigma = std::sqrt(d.variance());
    EXPECT_LT(std::fabs(mean), 5.0 * sigma / 1e3) << d.describe();
    EXPECT_NEAR(var / d.variance(), 1.0, 0.02) << d.describe();
  }
}

TEST(ErrorDistribution, CdfDerivativeMatchesPdf)
{
  for (const auto& d : parametric_laws()) {
    const double lo = d.quantile(1e-3);
    const double hi = d.quantile(1.0 - 1e-3);
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
      const double t = lo + (hi - lo) * k / 999.0;
      const double h = 1e-5;
      const double num = (d.cdf(t + h) - d.cdf(t - h)) / (2.0 * h);
      worst = std::max(worst, std::fabs(num - d.pdf(t)));
    }
    EXPECT_LT(worst, 1e-4) << d.describe();
  }
}

TEST(ErrorDistribution, MeanZeroAndDeclaredVarianceByQuadrature)
{
  for (const auto& d : parametric_laws()) {
    EXPECT_NEAR(moment(d, 0), 1.0, 1e-10) << d.describe();
    EXPECT_NEAR(moment(d, 1), 0.0, 1e-10) << d.describe();
    EXPECT_NEAR(moment(d, 2), d.variance(), 1e-10 * d.variance()) << d.describe();
  }
}

TEST(ErrorDistribution, CdfLimitsAndMonotone)
{
  for (const auto& d : parametric_laws()) {
    EXPECT_EQ(d.cdf(-std::numeric_limits<double>::infinity()), 0.0) << d.describe();
    EXPECT_EQ(d.cdf(std::numeric_limits<double>::infinity()), 1.0) << d.describe();
    double prev = 0.0;
    for (int k = -400; k <= 400; ++k) {
      const double c = d.cdf(k * 0.05);
      ASSERT_GE(c, prev) << d.describe();
      prev = c;
    }
  }
}

TEST(ErrorDistribution, QuantileInvertsCdf)
{
  for (const auto& d : parametric_laws()) {
    for (double p : { 0.001, 0.1, 0.25, 0.5, 0.75, 0.9, 0.999 }) {
      EXPECT_NEAR(d.cdf(d.quantile(p)), p, 1e-9) << d.describe() << " p=" << p;
    }
  }
}

TEST(ErrorDistribution, GammaScalingFactor)
{
  // shape 2, rate 1/2 has variance 8; rescaling to variance 4 multiplies by sqrt(4/8)
  const ErrorDistribution d = ShiftedGammaError{ 2.0, 0.5, 4.0 };
  const double s = std::sqrt(4.0 / 8.0);
  const double t = 1.3;
  EXPECT_NEAR(d.cdf(t), boost::math::gamma_p(2.0, 0.5 * (t / s + 4.0)), 1e-15);
}

TEST(ErrorDistribution, ExponentialClosedForm)
{
  const ErrorDistribution d = ShiftedExponentialError{ 4.0 };
  EXPECT_NEAR(d.quantile(0.5), 2.0 * (std::log(2.0) - 1.0), 1e-14);
  EXPECT_EQ(d.cdf(-2.0), 0.0);
  EXPECT_EQ(d.cdf(-2.5), 0.0);
}

TEST(ErrorDistribution, RejectsBadParameters)
{
  EXPECT_THROW(ErrorDistribution(NormalError{ 0.0 }), ConfigError);
  EXPECT_THROW(ErrorDistribution(NormalError{ -1.0 }), ConfigError);
  EXPECT_THROW(ErrorDistribution(ShiftedGammaError{ 0.0, 1.0, 1.0 }), ConfigError);
  EXPECT_THROW(ErrorDistribution(ShiftedExponentialError{ 0.0 }), ConfigError);
  EXPECT_THROW(ErrorDistribution(TabulatedCdfError{ { 0.0, 1.0 }, { 0.0, 1.0 } }), ConfigError);
  EXPECT_THROW(ErrorDistribution(TabulatedCdfError{ { 0.0, 1.0, 0.5 }, { 0.0, 0.5, 1.0 } }),
               ConfigError);
  EXPECT_THROW(ErrorDistribution(TabulatedCdfError{ { 0.0, 1.0, 2.0 }, { 0.0, 0.7, 0.5 } }),
               ConfigError);
}

TEST(TabulatedCdf, UniformTable)
{
  const ErrorDistribution d = TabulatedCdfError{ { -1.0, 0.0, 1.0 }, { 0.0, 0.5, 1.0 } };
  EXPECT_DOUBLE_EQ(d.cdf(-2.0), 0.0);
  EXPECT_DOUBLE_EQ(d.cdf(-0.5), 0.25);
  EXPECT_DOUBLE_EQ(d.cdf(0.5), 0.75);
  EXPECT_DOUBLE_EQ(d.cdf(3.0), 1.0);
  EXPECT_DOUBLE_EQ(d.pdf(0.25), 0.5);
  EXPECT_DOUBLE_EQ(d.pdf(2.0), 0.0);
  EXPECT_DOUBLE_EQ(d.quantile(0.25), -0.5);
  EXPECT_NEAR(d.variance(), 1.0 / 3.0, 1e-15);
}

TEST(TabulatedCdf, CenteredDifferencePdf)
{
  const ErrorDistribution d = TabulatedCdfError{ { 0.0, 1.0, 3.0, 4.0 }, { 0.0, 0.2, 0.8, 1.0 } };
  // knot 1: (0.8 - 0.0) / (3 - 0); knot 2: (1.0 - 0.2) / (4 - 1)
  EXPECT_DOUBLE_EQ(d.pdf(1.0), 0.8 / 3.0);
  EXPECT_DOUBLE_EQ(d.pdf(3.0), 0.8 / 3.0);
  EXPECT_DOUBLE_EQ(d.pdf(2.0), 0.8 / 3.0);
}

TEST(TabulatedCdf, SamplingFollowsTable)
{
  const ErrorDistribution d = TabulatedCdfError{ { -1.0, 0.0, 1.0 }, { 0.0, 0.5, 1.0 } };
  Rng rng(5);
  int below = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    below += d.sample(rng) <= -0.5 ? 1 : 0;
  }
  EXPECT_NEAR(static_cast<double>(below) / n, 0.25, 0.01);
}

TEST(NormalHelpers, QuantileRoundTrip)
{
  EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-12);
  EXPECT_NEAR(normal_cdf(normal_quantile(0.3)), 0.3, 1e-15);
  EXPECT_THROW(normal_quantile(0.0), ConfigError);
}
