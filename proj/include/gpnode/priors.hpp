#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <string>

#include "gpnode/dual.hpp"

namespace gpnode {

inline constexpr double kLogSqrt2Pi = 0.9189385332046727;

// Scalar overloads so the templated densities below accept plain doubles as
// well as duals.
inline double log(double x) { return std::log(x); }
inline double log1p(double x) { return std::log1p(x); }
inline double exp(double x) { return std::exp(x); }
inline double sqrt(double x) { return std::sqrt(x); }

// ---------------------------------------------------------------------------
// Density helpers, templated so gradients come from the same dual machinery
// used for the model Jacobians.

template <typename T>
T std_normal_logpdf(const T& x) {
  return -0.5 * x * x - kLogSqrt2Pi;
}

template <typename T>
T normal_logpdf(const T& x, const T& sd) {
  const T z = x / sd;
  return -0.5 * z * z - log(sd) - kLogSqrt2Pi;
}

// support x > 0
template <typename T>
T half_cauchy_logpdf(const T& x, double scale) {
  const T z = x / scale;
  return std::log(2.0 / std::numbers::pi) - std::log(scale) - log1p(z * z);
}

template <typename T>
T inv_gamma_logpdf(const T& x, double shape, double scale) {
  return shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * log(x) - scale / x;
}

// Median of InvGamma(shape, scale) / Gamma(shape, rate), for initialization.
double inv_gamma_median(double shape, double scale);
double gamma_median(double shape, double rate);

// ---------------------------------------------------------------------------
// User-facing prior families with their unconstrained reparameterizations.

enum class PriorFamily { Lognormal, Gamma, Uniform };

struct PriorSpec {
  PriorFamily family = PriorFamily::Lognormal;
  double p1 = 0.0;  // mu | shape alpha | lower a
  double p2 = 1.0;  // sigma | rate beta | upper b

  void validate() const;
  std::string describe() const;

  static PriorSpec lognormal(double mu, double sigma) { return {PriorFamily::Lognormal, mu, sigma}; }
  static PriorSpec gamma(double alpha, double beta) { return {PriorFamily::Gamma, alpha, beta}; }
  static PriorSpec uniform(double a, double b) { return {PriorFamily::Uniform, a, b}; }
};

// log/exp for the positive families, scaled logit for Uniform with
// saturation clamped at |u| <= 35.
double transform_scalar(double u, const PriorSpec& spec);
double inverse_transform_scalar(double x, const PriorSpec& spec);  // throws outside domain
double transform_deriv(double u, const PriorSpec& spec);

// Log-density in constrained space (no change-of-variables term).
double log_density_constrained(double x, const PriorSpec& spec);
// Log-density of the pushforward in unconstrained space (Jacobian included),
// and its derivative via a one-slot dual sweep.
double log_density_unconstrained(double u, const PriorSpec& spec);
double log_density_unconstrained_grad(double u, const PriorSpec& spec);
// Family median expressed in unconstrained coordinates.
double prior_median_unconstrained(const PriorSpec& spec);

// ---------------------------------------------------------------------------
// Finnish (regularized) Horseshoe over a group of dictionary coefficients.

struct FHConfig {
  int m = 0;          // group size M = D * K
  double m0 = 0.0;    // anticipated non-zeros; defaults to M - 1
  double nu = 1.0;
  double s = 1.0;
  double n_obs = 0.0; // total observation count

  double tau0() const;
  void validate() const;
};

struct FHLatents {
  double tau = 1.0;
  double c2 = 1.0;
  Eigen::VectorXd lambda;        // local scales, positive
  Eigen::VectorXd lambda_tilde;  // regularized local scales
  Eigen::VectorXd coef;          // resulting coefficients
};

// lambda_tilde = c lambda / sqrt(c^2 + tau^2 lambda^2)
double fh_lambda_tilde(double lambda, double tau, double c2);

// Materialize latents from unconstrained coordinates laid out as
// [eta (M), log tau, log c2, log lambda (M)]; coef_m = tau lt_m eta_m.
FHLatents fh_materialize(const Eigen::VectorXd& u_block, const FHConfig& cfg);

// Log-prior of the group in unconstrained coordinates, written as the sum of
// the centered-form densities plus the log-Jacobians of the log transforms
// and of the non-centered coefficient map.
double fh_log_prior(const FHLatents& latents, const FHConfig& cfg);

}  // namespace gpnode
