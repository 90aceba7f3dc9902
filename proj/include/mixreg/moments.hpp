#pragma once

#include "mixreg/errors.hpp"
#include "mixreg/model.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

namespace mixreg {

using Vec3 = Eigen::Matrix<double, 3, 1>;
using Vec5 = Eigen::Matrix<double, 5, 1>;
using Vec8 = Eigen::Matrix<double, 8, 1>;
using Mat3 = Eigen::Matrix<double, 3, 3>;
using Mat5 = Eigen::Matrix<double, 5, 5>;
using Mat8 = Eigen::Matrix<double, 8, 8>;
using Mat38 = Eigen::Matrix<double, 3, 8>;

/// Neumaier's variant of Kahan summation.
class CompensatedSum
{
public:
  void add(double v) noexcept
  {
    const double t = sum_ + v;
    if (std::fabs(sum_) >= std::fabs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }

  double value() const noexcept { return sum_ + comp_; }

private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Default condition-number ceiling for the least-squares designs.
inline constexpr double kDefaultConditionLimit = 1e12;

/// Sample means of the monomials X^p Y^q used by the estimators.
struct MomentSummary
{
  /// Tracked (p, q) exponent pairs, in storage order.
  static constexpr std::array<std::array<int, 2>, 19> monomials{ {
    { 1, 0 }, { 2, 0 }, { 3, 0 }, { 4, 0 }, { 5, 0 }, { 6, 0 }, { 7, 0 }, { 8, 0 },
    { 0, 1 }, { 0, 2 }, { 0, 3 },
    { 1, 1 }, { 1, 2 }, { 1, 3 },
    { 2, 1 }, { 2, 2 }, { 2, 3 },
    { 3, 2 }, { 3, 3 },
  } };

  std::size_t n = 0;
  std::array<double, monomials.size()> means{};

  /// Mean of X^p Y^q; (0, 0) is 1. Throws for untracked monomials.
  double moment(int p, int q) const
  {
    if (p == 0 && q == 0) {
      return 1.0;
    }
    for (std::size_t k = 0; k < monomials.size(); ++k) {
      if (monomials[k][0] == p && monomials[k][1] == q) {
        return means[k];
      }
    }
    throw Error("moment X^" + std::to_string(p) + " Y^" + std::to_string(q) +
                " is not tracked");
  }

  double x(int p) const { return moment(p, 0); }

  static std::string monomial_name(std::size_t k)
  {
    const auto [p, q] = monomials[k];
    std::string s;
    if (p > 0) {
      s += p == 1 ? "X" : "X^" + std::to_string(p);
    }
    if (q > 0) {
      s += q == 1 ? "Y" : "Y^" + std::to_string(q);
    }
    return s;
  }
};

/// One pass over the data with compensated sums for every tracked monomial.
inline MomentSummary accumulate_moments(const Dataset& data)
{
  std::array<CompensatedSum, MomentSummary::monomials.size()> sums{};
  for (const Observation& o : data) {
    const double x = o.x;
    const double y = o.y;
    const double x2 = x * x;
    const double x3 = x2 * x;
    const double x4 = x2 * x2;
    const double y2 = y * y;
    const double y3 = y2 * y;
    sums[0].add(x);
    sums[1].add(x2);
    sums[2].add(x3);
    sums[3].add(x4);
    sums[4].add(x4 * x);
    sums[5].add(x4 * x2);
    sums[6].add(x4 * x3);
    sums[7].add(x4 * x4);
    sums[8].add(y);
    sums[9].add(y2);
    sums[10].add(y3);
    sums[11].add(x * y);
    sums[12].add(x * y2);
    sums[13].add(x * y3);
    sums[14].add(x2 * y);
    sums[15].add(x2 * y2);
    sums[16].add(x2 * y3);
    sums[17].add(x3 * y2);
    sums[18].add(x3 * y3);
  }
  MomentSummary m;
  m.n = data.size();
  const double inv_n = 1.0 / static_cast<double>(data.size());
  for (std::size_t k = 0; k < sums.size(); ++k) {
    m.means[k] = sums[k].value() * inv_n;
    if (!std::isfinite(m.means[k])) {
      throw NumericError("moment accumulation overflowed for monomial " +
                         MomentSummary::monomial_name(k));
    }
  }
  return m;
}

/// Solution of the 8-dimensional least-squares system Gamma_n gamma = theta_n.
struct GammaEstimate
{
  Vec8 gamma = Vec8::Zero();
  Mat8 gamma_matrix = Mat8::Zero();
  Vec8 theta = Vec8::Zero();
};

/// Solution of the 5-dimensional system Lambda_n lambda = Upsilon_n.
struct LambdaEstimate
{
  Vec5 lambda = Vec5::Zero();
  Mat5 lambda_matrix = Mat5::Zero();
  Vec5 upsilon = Vec5::Zero();
  double condition = 0.0;
};

namespace detail {

/// Condition number of the symmetric 2x2 moment matrix [[1, a], [a, b]].
inline double condition_2x2(double a, double b)
{
  const double tr = 1.0 + b;
  const double det = b - a * a;
  if (!(det > 0.0)) {
    return std::numeric_limits<double>::infinity();
  }
  const double disc = std::sqrt(std::max(0.0, tr * tr - 4.0 * det));
  const double hi = 0.5 * (tr + disc);
  const double lo = det / hi;
  return hi / lo;
}

template <int N>
double symmetric_condition(const Eigen::Matrix<double, N, N>& m)
{
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, N, N>> es(m, Eigen::EigenvaluesOnly);
  const auto ev = es.eigenvalues().cwiseAbs();
  const double lo = ev.minCoeff();
  return lo > 0.0 ? ev.maxCoeff() / lo : std::numeric_limits<double>::infinity();
}

/// OLS of a response on (1, r) from raw moments: returns (intercept, slope).
/// mean_r, mean_rr = E r, E r^2; mean_v, mean_rv = E v, E r v.
inline std::array<double, 2> ols_simple(double mean_r, double mean_rr, double mean_v,
                                        double mean_rv, const char* what,
                                        double condition_limit)
{
  const double cond = condition_2x2(mean_r, mean_rr);
  if (!(cond < condition_limit)) {
    throw DegenerateDesign(std::string("degenerate design in regression ") + what +
                             " (sample variance of the regressor is zero or the "
                             "design is ill-conditioned)",
                           cond);
  }
  const double slope = (mean_rv - mean_r * mean_v) / (mean_rr - mean_r * mean_r);
  return { mean_v - slope * mean_r, slope };
}

/// Closed-form solve of the symmetric 3x3 normal equations with Hankel matrix
/// [[1, m1, m2], [m1, m2, m3], [m2, m3, m4]] by cofactor expansion.
inline std::array<double, 3> solve_hankel3(double m1, double m2, double m3, double m4,
                                           const std::array<double, 3>& rhs)
{
  const double c00 = m2 * m4 - m3 * m3;
  const double c01 = -(m1 * m4 - m3 * m2);
  const double c02 = m1 * m3 - m2 * m2;
  const double c11 = m4 - m2 * m2;
  const double c12 = -(m3 - m1 * m2);
  const double c22 = m2 - m1 * m1;
  const double det = c00 + m1 * c01 + m2 * c02;
  return { (c00 * rhs[0] + c01 * rhs[1] + c02 * rhs[2]) / det,
           (c01 * rhs[0] + c11 * rhs[1] + c12 * rhs[2]) / det,
           (c02 * rhs[0] + c12 * rhs[1] + c22 * rhs[2]) / det };
}

} // namespace detail

/// Gamma_n and theta_n exactly as displayed (including the factor 2).
inline void build_gamma_system(const MomentSummary& m, Mat8& gamma_matrix, Vec8& theta)
{
  gamma_matrix.setZero();
  gamma_matrix(0, 0) = 1.0;
  gamma_matrix(0, 1) = gamma_matrix(1, 0) = m.x(1);
  gamma_matrix(1, 1) = m.x(2);
  gamma_matrix(2, 2) = 1.0;
  gamma_matrix(2, 3) = gamma_matrix(3, 2) = m.x(2);
  gamma_matrix(3, 3) = m.x(4);
  for (int k = 4; k < 8; ++k) {
    gamma_matrix(k, k) = 1.0;
  }
  gamma_matrix *= 2.0;
  theta << m.moment(0, 1), m.moment(1, 1), m.moment(0, 2), m.moment(2, 2), m.x(1), m.x(2),
    m.x(3), m.x(4);
  theta *= 2.0;
}

/// Lambda_n and Upsilon_n exactly as displayed (including the factor 2).
inline void build_lambda_system(const MomentSummary& m, Mat5& lambda_matrix, Vec5& upsilon)
{
  lambda_matrix.setZero();
  lambda_matrix(0, 0) = 1.0;
  lambda_matrix(0, 1) = lambda_matrix(1, 0) = m.x(1);
  lambda_matrix(1, 1) = m.x(2);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      lambda_matrix(2 + r, 2 + c) = m.x(r + c);
    }
  }
  lambda_matrix *= 2.0;
  upsilon << m.moment(0, 1), m.moment(1, 1), m.moment(0, 2), m.moment(1, 2), m.moment(2, 2);
  upsilon *= 2.0;
}

/// gamma_n: OLS of Y on X, OLS of Y^2 on X^2, and the raw moments of X.
inline GammaEstimate fit_gamma(const MomentSummary& m,
                               double condition_limit = kDefaultConditionLimit)
{
  GammaEstimate g;
  build_gamma_system(m, g.gamma_matrix, g.theta);
  const auto [g1, g2] =
    detail::ols_simple(m.x(1), m.x(2), m.moment(0, 1), m.moment(1, 1), "Y ~ X", condition_limit);
  const auto [g3, g4] = detail::ols_simple(m.x(2), m.x(4), m.moment(0, 2), m.moment(2, 2),
                                           "Y^2 ~ X^2", condition_limit);
  g.gamma << g1, g2, g3, g4, m.x(1), m.x(2), m.x(3), m.x(4);
  return g;
}

/// lambda_n: OLS of Y on (1, X) and of Y^2 on (1, X, X^2).
inline LambdaEstimate fit_lambda(const MomentSummary& m,
                                 double condition_limit = kDefaultConditionLimit)
{
  LambdaEstimate l;
  build_lambda_system(m, l.lambda_matrix, l.upsilon);
  l.condition = detail::symmetric_condition<5>(l.lambda_matrix);
  if (!(l.condition < condition_limit)) {
    throw DegenerateDesign("Lambda_n is singular or ill-conditioned (condition number " +
                             std::to_string(l.condition) + ")",
                           l.condition);
  }
  const auto [l1, l2] = detail::ols_simple(m.x(1), m.x(2), m.moment(0, 1), m.moment(1, 1),
                                           "Y ~ X", condition_limit);
  const auto q = detail::solve_hankel3(m.x(1), m.x(2), m.x(3), m.x(4),
                                       { m.moment(0, 2), m.moment(1, 2), m.moment(2, 2) });
  l.lambda << l1, l2, q[0], q[1], q[2];
  return l;
}

/// Cross-check path: gamma from a pivoted LU solve of the full 8x8 system.
inline Vec8 solve_gamma_full(const MomentSummary& m)
{
  Mat8 a;
  Vec8 b;
  build_gamma_system(m, a, b);
  return a.fullPivLu().solve(b);
}

/// Cross-check path: lambda from a pivoted LU solve of the full 5x5 system.
inline Vec5 solve_lambda_full(const MomentSummary& m)
{
  Mat5 a;
  Vec5 b;
  build_lambda_system(m, a, b);
  return a.fullPivLu().solve(b);
}

/// Least-squares criterion for gamma at one observation.
inline double phi_gamma(const Vec8& g, const Observation& o)
{
  const double x = o.x;
  const double y = o.y;
  const double x2 = x * x;
  const double r1 = y - g[0] - g[1] * x;
  const double r2 = y * y - g[2] - g[3] * x2;
  const double r5 = x - g[4];
  const double r6 = x2 - g[5];
  const double r7 = x2 * x - g[6];
  const double r8 = x2 * x2 - g[7];
  return r1 * r1 + r2 * r2 + r5 * r5 + r6 * r6 + r7 * r7 + r8 * r8;
}

/// Gradient of phi_gamma with respect to gamma.
inline Vec8 grad_phi_gamma(const Vec8& g, const Observation& o)
{
  const double x = o.x;
  const double y = o.y;
  const double x2 = x * x;
  const double r1 = y - g[0] - g[1] * x;
  const double r2 = y * y - g[2] - g[3] * x2;
  Vec8 d;
  d << r1, x * r1, r2, x2 * r2, x - g[4], x2 - g[5], x2 * x - g[6], x2 * x2 - g[7];
  return -2.0 * d;
}

inline double phi_lambda(const Vec5& l, const Observation& o)
{
  const double x = o.x;
  const double y = o.y;
  const double r1 = y - l[0] - l[1] * x;
  const double r2 = y * y - l[2] - l[3] * x - l[4] * x * x;
  return r1 * r1 + r2 * r2;
}

inline Vec5 grad_phi_lambda(const Vec5& l, const Observation& o)
{
  const double x = o.x;
  const double y = o.y;
  const double r1 = y - l[0] - l[1] * x;
  const double r2 = y * y - l[2] - l[3] * x - l[4] * x * x;
  Vec5 d;
  d << r1, x * r1, r2, x * r2, x * x * r2;
  return -2.0 * d;
}

} // namespace mixreg
