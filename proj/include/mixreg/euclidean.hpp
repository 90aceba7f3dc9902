#pragma once

#include "mixreg/errors.hpp"
#include "mixreg/model.hpp"
#include "mixreg/moments.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace mixreg {

/// Guard for the denominators of the parameter maps, relative to max(1, |gamma|_inf).
inline constexpr double kDomainTolerance = 1e-12;

/// (alpha_n, beta_n, pi_n) with the sandwich covariance and standard errors.
struct EuclideanFit
{
  EuclideanParams params;
  Mat3 sigma = Mat3::Zero();
  Vec3 std_errors = Vec3::Zero();
  bool pi_valid = false;
  Mat38 jacobian = Mat38::Zero();
};

namespace detail {

struct GammaMapTerms
{
  double a;     // gamma7 - gamma5 gamma6   (sample cov(X, X^2))
  double b;     // gamma8 - gamma6^2        (sample var(X^2))
  double denom; // gamma2 + 2 gamma1 a / b
};

inline GammaMapTerms gamma_map_terms(const Vec8& g)
{
  const double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
  const double tol = kDomainTolerance * scale;
  GammaMapTerms t{};
  t.a = g[6] - g[4] * g[5];
  t.b = g[7] - g[5] * g[5];
  if (!(std::fabs(t.b) > tol)) {
    throw DegenerateDesign("gamma_8 - gamma_6^2 vanishes: X^2 has no sample variance");
  }
  t.denom = g[1] + 2.0 * g[0] * t.a / t.b;
  if (!(std::fabs(t.denom) > tol)) {
    throw OutsideDomain("gamma_n outside the domain of the parameter maps: the beta "
                        "denominator vanishes");
  }
  if (!(std::fabs(g[3]) > tol)) {
    throw OutsideDomain("gamma_n outside the domain of the parameter maps: gamma_4 = 0 "
                        "gives beta_n = 0");
  }
  if (!(std::fabs(g[1]) > tol)) {
    throw OutsideDomain("gamma_n outside the domain of the parameter maps: gamma_2 = 0 "
                        "gives pi_n = 0");
  }
  return t;
}

} // namespace detail

/// beta = g4 / (g2 + 2 g1 (g7 - g5 g6) / (g8 - g6^2)), pi = g2 / beta,
/// alpha = g1 / pi, evaluated in that order.
inline EuclideanParams map_gamma_to_params(const Vec8& g)
{
  const auto t = detail::gamma_map_terms(g);
  EuclideanParams p;
  p.beta = g[3] / t.denom;
  p.pi = g[1] / p.beta;
  p.alpha = g[0] / p.pi;
  return p;
}

inline EuclideanParams map_gamma_to_params(const GammaEstimate& g)
{
  return map_gamma_to_params(g.gamma);
}

/// Analytic 3x8 Jacobian of (g^alpha, g^beta, g^pi) with respect to gamma.
inline Mat38 jacobian_psi(const Vec8& g)
{
  const auto t = detail::gamma_map_terms(g);
  const double g1 = g[0];
  const double g2 = g[1];
  const double g4 = g[3];
  const double g5 = g[4];
  const double g6 = g[5];
  const double d = t.denom;

  // partial derivatives of the beta denominator
  Vec8 dd = Vec8::Zero();
  dd[0] = 2.0 * t.a / t.b;
  dd[1] = 1.0;
  dd[4] = -2.0 * g1 * g6 / t.b;
  dd[5] = 2.0 * g1 * (2.0 * g6 * t.a - g5 * t.b) / (t.b * t.b);
  dd[6] = 2.0 * g1 / t.b;
  dd[7] = -2.0 * g1 * t.a / (t.b * t.b);

  Mat38 j = Mat38::Zero();
  // beta = g4 / d
  j.row(1) = (-g4 / (d * d)) * dd.transpose();
  j(1, 3) = 1.0 / d;
  // pi = g2 d / g4
  j.row(2) = (g2 / g4) * dd.transpose();
  j(2, 1) = (d + g2) / g4;
  j(2, 3) = -g2 * d / (g4 * g4);
  // alpha = g1 g4 / (g2 d)
  j.row(0) = (-g1 * g4 / (g2 * d * d)) * dd.transpose();
  j(0, 0) += g4 / (g2 * d);
  j(0, 1) -= g1 * g4 / (g2 * g2 * d);
  j(0, 3) = g1 / (g2 * d);
  return j;
}

/// Per-observation influence of the Euclidean estimator,
/// -Psi Gamma_n^{-1} phi_dot(x_i, y_i), as an n x 3 matrix.
inline Eigen::Matrix<double, Eigen::Dynamic, 3> euclidean_influence(const Dataset& data,
                                                                    const GammaEstimate& g,
                                                                    const Mat38& psi)
{
  const auto lu = g.gamma_matrix.fullPivLu();
  if (!lu.isInvertible()) {
    throw DegenerateDesign("Gamma_n is singular");
  }
  const Mat38 a = -psi * lu.inverse();
  Eigen::Matrix<double, Eigen::Dynamic, 3> out(static_cast<Eigen::Index>(data.size()), 3);
  for (std::size_t i = 0; i < data.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = (a * grad_phi_gamma(g.gamma, data[i])).transpose();
  }
  return out;
}

struct SandwichResult
{
  Mat3 sigma = Mat3::Zero();
  Vec3 std_errors = Vec3::Zero();
};

/// Sigma_n = Psi Gamma_n^{-1} P_n(phi_dot phi_dot^T) Gamma_n^{-1} Psi^T and the
/// standard errors sqrt(diag(Sigma_n) / n).
inline SandwichResult sandwich_covariance(const Dataset& data, const GammaEstimate& g,
                                          const Mat38& psi)
{
  const auto lu = g.gamma_matrix.fullPivLu();
  if (!lu.isInvertible()) {
    throw DegenerateDesign("Gamma_n is singular");
  }
  Mat8 outer = Mat8::Zero();
  for (const Observation& o : data) {
    const Vec8 d = grad_phi_gamma(g.gamma, o);
    outer.selfadjointView<Eigen::Lower>().rankUpdate(d);
  }
  outer = outer.selfadjointView<Eigen::Lower>();
  outer /= static_cast<double>(data.size());
  const Mat38 a = psi * lu.inverse();
  SandwichResult r;
  r.sigma = a * outer * a.transpose();
  r.sigma = 0.5 * (r.sigma + r.sigma.transpose()).eval();
  const double n = static_cast<double>(data.size());
  for (int k = 0; k < 3; ++k) {
    r.std_errors[k] = std::sqrt(std::max(0.0, r.sigma(k, k)) / n);
  }
  return r;
}

/// Everything the downstream estimators need from one fit.
struct FitResult
{
  MomentSummary moments;
  GammaEstimate gamma;
  EuclideanFit euclidean;
};

/// Moments, gamma_n, (alpha_n, beta_n, pi_n), Psi and Sigma_n in one call.
/// pi_n outside (0, 1] is reported through pi_valid, not thrown.
inline FitResult fit_euclidean(const Dataset& data,
                               double condition_limit = kDefaultConditionLimit)
{
  FitResult f;
  f.moments = accumulate_moments(data);
  f.gamma = fit_gamma(f.moments, condition_limit);
  f.euclidean.params = map_gamma_to_params(f.gamma);
  f.euclidean.pi_valid = f.euclidean.params.pi_valid();
  f.euclidean.jacobian = jacobian_psi(f.gamma.gamma);
  const auto s = sandwich_covariance(data, f.gamma, f.euclidean.jacobian);
  f.euclidean.sigma = s.sigma;
  f.euclidean.std_errors = s.std_errors;
  return f;
}

/// The nine closed-form variants obtainable from lambda; unusable ones are empty.
struct LambdaParamFamily
{
  std::array<std::optional<double>, 3> alpha_variants;
  std::array<std::optional<double>, 3> beta_variants;
  std::array<std::optional<double>, 3> pi_variants;

  /// Combination (alpha^{(i)}, beta^{(j)}, pi^{(k)}), indices 0-based.
  std::optional<EuclideanParams> combination(int i, int j, int k) const
  {
    const auto& a = alpha_variants.at(static_cast<std::size_t>(i));
    const auto& b = beta_variants.at(static_cast<std::size_t>(j));
    const auto& p = pi_variants.at(static_cast<std::size_t>(k));
    if (!a || !b || !p) {
      return std::nullopt;
    }
    return EuclideanParams{ *a, *b, *p };
  }
};

/// alpha^{(1..3)}, beta^{(1..3)}, pi^{(1..3)}. A variant is empty when one of
/// its denominators is at most 1e-12 in magnitude; a pi variant is also empty
/// when it evaluates to zero.
inline LambdaParamFamily lambda_param_family(const Vec5& l)
{
  constexpr double tol = kDomainTolerance;
  const double l1 = l[0];
  const double l2 = l[1];
  const double l4 = l[3];
  const double l5 = l[4];
  auto ratio = [](double num, double den) -> std::optional<double> {
    if (!(std::fabs(den) > tol)) {
      return std::nullopt;
    }
    return num / den;
  };
  auto nonzero = [](std::optional<double> v) -> std::optional<double> {
    if (v && !(std::fabs(*v) > tol)) {
      return std::nullopt;
    }
    return v;
  };
  LambdaParamFamily f;
  f.alpha_variants = { ratio(l1 * l5, l2 * l2), ratio(l4, 2.0 * l2),
                       ratio(l4 * l4, 4.0 * l1 * l5) };
  f.beta_variants = { ratio(l5, l2), ratio(l4, 2.0 * l1),
                      ratio(l2 * l4 * l4, 4.0 * l5 * l1 * l1) };
  f.pi_variants = { nonzero(ratio(l2 * l2, l5)), nonzero(ratio(2.0 * l1 * l2, l4)),
                    nonzero(ratio(4.0 * l1 * l1 * l5, l4 * l4)) };
  return f;
}

inline LambdaParamFamily lambda_param_family(const LambdaEstimate& l)
{
  return lambda_param_family(l.lambda);
}

/// Moment estimate of the known component's error variance. Unreliable in
/// practice: it is the difference of two positive estimates and often
/// negative, in which case `value` is empty and `reason` says why.
struct SigmaStarDiagnostic
{
  std::optional<double> value;
  double raw = std::numeric_limits<double>::quiet_NaN();
  std::string reason;
};

/// (sigma*)^2 = (l3 l5 - l7 l2) / (l5 - l2^2) with l7 = pi beta (alpha^2 + sigma^2),
/// i.e. one third of the X coefficient of E(Y^3 | X).
inline SigmaStarDiagnostic sigma_star_from_lambdas(double l2, double l3, double l5, double l7)
{
  SigmaStarDiagnostic d;
  const double denom = l5 - l2 * l2;
  const double scale = std::max({ 1.0, std::fabs(l5), l2 * l2 });
  if (!(std::fabs(denom) > kDomainTolerance * scale)) {
    d.reason = "lambda_5 - lambda_2^2 vanishes (pi = 1 or beta = 0)";
    return d;
  }
  d.raw = (l3 * l5 - l7 * l2) / denom;
  if (d.raw < 0.0) {
    d.reason = "moment estimate of (sigma*)^2 is negative";
    return d;
  }
  d.value = d.raw;
  return d;
}

/// Plug-in version from the sample moments: lambda_2 from Y ~ X, lambda_3 and
/// lambda_5 from Y^2 ~ (1, X, X^2), lambda_7 from Y^3 ~ (1, X, X^2, X^3).
inline SigmaStarDiagnostic sigma_star_diagnostic(const MomentSummary& m,
                                                 double condition_limit = kDefaultConditionLimit)
{
  const LambdaEstimate l = fit_lambda(m, condition_limit);
  Eigen::Matrix4d design;
  Eigen::Vector4d rhs;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      design(r, c) = m.x(r + c);
    }
    rhs[r] = m.moment(r, 3);
  }
  const double cond = detail::symmetric_condition<4>(design);
  if (!(cond < condition_limit)) {
    throw DegenerateDesign("design of Y^3 ~ (1, X, X^2, X^3) is singular or ill-conditioned",
                           cond);
  }
  const Eigen::Vector4d c = design.ldlt().solve(rhs);
  return sigma_star_from_lambdas(l.lambda[1], l.lambda[2], l.lambda[4], c[1] / 3.0);
}

} // namespace mixreg
