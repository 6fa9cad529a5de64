#include "gpnode/priors.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <stdexcept>

namespace gpnode {

namespace {

constexpr double kLogitClamp = 35.0;

template <typename T>
T uniform_transform(const T& u, double a, double b) {
  // logistic with saturation guard
  T uc = u;
  if (uc > kLogitClamp) uc = T(kLogitClamp);
  if (T(-kLogitClamp) > uc) uc = T(-kLogitClamp);
  const T sig = 1.0 / (1.0 + exp(-uc));
  return a + (b - a) * sig;
}

template <typename T>
T family_transform(const T& u, const PriorSpec& spec) {
  switch (spec.family) {
    case PriorFamily::Lognormal:
    case PriorFamily::Gamma:
      return exp(u);
    case PriorFamily::Uniform:
      return uniform_transform(u, spec.p1, spec.p2);
  }
  return u;
}

template <typename T>
T family_logpdf_unconstrained(const T& u, const PriorSpec& spec) {
  switch (spec.family) {
    case PriorFamily::Lognormal: {
      // collapses to a normal density on u = log x
      const T z = (u - spec.p1) / spec.p2;
      return -0.5 * z * z - std::log(spec.p2) - kLogSqrt2Pi;
    }
    case PriorFamily::Gamma: {
      // x = e^u; alpha log beta - lgamma(alpha) + (alpha-1) log x - beta x + u
      const T x = exp(u);
      return spec.p1 * std::log(spec.p2) - std::lgamma(spec.p1) + (spec.p1 - 1.0) * u -
             spec.p2 * x + u;
    }
    case PriorFamily::Uniform: {
      // density 1/(b-a) times Jacobian (b-a) sig (1-sig)
      T uc = u;
      if (uc > kLogitClamp) uc = T(kLogitClamp);
      if (T(-kLogitClamp) > uc) uc = T(-kLogitClamp);
      const T sig = 1.0 / (1.0 + exp(-uc));
      return log(sig) + log(1.0 - sig);
    }
  }
  return T(0.0);
}

}  // namespace

double inv_gamma_median(double shape, double scale) {
  // P(X <= m) = Q(shape, scale / m) for X ~ InvGamma(shape, scale)
  return scale / boost::math::gamma_q_inv(shape, 0.5);
}

double gamma_median(double shape, double rate) {
  return boost::math::gamma_p_inv(shape, 0.5) / rate;
}

void PriorSpec::validate() const {
  switch (family) {
    case PriorFamily::Lognormal:
      if (!(p2 > 0.0)) throw std::invalid_argument("lognormal: sigma must be positive");
      break;
    case PriorFamily::Gamma:
      if (!(p1 > 0.0) || !(p2 > 0.0)) throw std::invalid_argument("gamma: shape and rate must be positive");
      break;
    case PriorFamily::Uniform:
      if (!(p1 < p2)) throw std::invalid_argument("uniform: requires a < b");
      break;
  }
}

std::string PriorSpec::describe() const {
  char buf[96];
  switch (family) {
    case PriorFamily::Lognormal:
      std::snprintf(buf, sizeof(buf), "lognormal(%g,%g)", p1, p2);
      break;
    case PriorFamily::Gamma:
      std::snprintf(buf, sizeof(buf), "gamma(%g,%g)", p1, p2);
      break;
    case PriorFamily::Uniform:
      std::snprintf(buf, sizeof(buf), "uniform(%g,%g)", p1, p2);
      break;
  }
  return buf;
}

double transform_scalar(double u, const PriorSpec& spec) { return family_transform(u, spec); }

double inverse_transform_scalar(double x, const PriorSpec& spec) {
  switch (spec.family) {
    case PriorFamily::Lognormal:
    case PriorFamily::Gamma:
      if (!(x > 0.0)) throw std::invalid_argument("inverse_transform: value must be positive");
      return std::log(x);
    case PriorFamily::Uniform: {
      if (!(x > spec.p1) || !(x < spec.p2))
        throw std::invalid_argument("inverse_transform: value outside uniform bounds");
      const double p = (x - spec.p1) / (spec.p2 - spec.p1);
      return std::log(p / (1.0 - p));
    }
  }
  throw std::logic_error("inverse_transform: unknown family");
}

double transform_deriv(double u, const PriorSpec& spec) {
  const DualN<1> du = family_transform(DualN<1>::seed(u, 1, 0), spec);
  return du.d[0];
}

double log_density_constrained(double x, const PriorSpec& spec) {
  switch (spec.family) {
    case PriorFamily::Lognormal: {
      const double z = (std::log(x) - spec.p1) / spec.p2;
      return -std::log(x) - std::log(spec.p2) - kLogSqrt2Pi - 0.5 * z * z;
    }
    case PriorFamily::Gamma:
      return spec.p1 * std::log(spec.p2) - std::lgamma(spec.p1) + (spec.p1 - 1.0) * std::log(x) -
             spec.p2 * x;
    case PriorFamily::Uniform:
      if (x < spec.p1 || x > spec.p2) return -std::numeric_limits<double>::infinity();
      return -std::log(spec.p2 - spec.p1);
  }
  return 0.0;
}

double log_density_unconstrained(double u, const PriorSpec& spec) {
  return family_logpdf_unconstrained(u, spec);
}

double log_density_unconstrained_grad(double u, const PriorSpec& spec) {
  const DualN<1> g = family_logpdf_unconstrained(DualN<1>::seed(u, 1, 0), spec);
  return g.d[0];
}

double prior_median_unconstrained(const PriorSpec& spec) {
  switch (spec.family) {
    case PriorFamily::Lognormal:
      return spec.p1;  // median e^mu
    case PriorFamily::Gamma:
      return std::log(gamma_median(spec.p1, spec.p2));
    case PriorFamily::Uniform:
      return 0.0;  // midpoint
  }
  return 0.0;
}

double FHConfig::tau0() const {
  return (m0 / (static_cast<double>(m) - m0)) / std::sqrt(n_obs);
}

void FHConfig::validate() const {
  if (m <= 0) throw std::invalid_argument("finnish horseshoe: empty group");
  if (!(m0 > 0.0) || !(m0 < static_cast<double>(m)))
    throw std::invalid_argument("finnish horseshoe: requires 0 < m0 < M");
  if (!(nu > 0.0) || !(s > 0.0)) throw std::invalid_argument("finnish horseshoe: nu, s must be positive");
  if (!(n_obs > 0.0)) throw std::invalid_argument("finnish horseshoe: observation count must be positive");
}

double fh_lambda_tilde(double lambda, double tau, double c2) {
  const double c = std::sqrt(c2);
  return c * lambda / std::sqrt(c2 + tau * tau * lambda * lambda);
}

FHLatents fh_materialize(const Eigen::VectorXd& u_block, const FHConfig& cfg) {
  const int m = cfg.m;
  if (u_block.size() != 2 * m + 2) throw std::invalid_argument("fh_materialize: block size mismatch");
  FHLatents out;
  out.tau = std::exp(u_block[m]);
  out.c2 = std::exp(u_block[m + 1]);
  out.lambda.resize(m);
  out.lambda_tilde.resize(m);
  out.coef.resize(m);
  for (int i = 0; i < m; ++i) {
    out.lambda[i] = std::exp(u_block[m + 2 + i]);
    out.lambda_tilde[i] = fh_lambda_tilde(out.lambda[i], out.tau, out.c2);
    out.coef[i] = out.tau * out.lambda_tilde[i] * u_block[i];
  }
  return out;
}

double fh_log_prior(const FHLatents& latents, const FHConfig& cfg) {
  cfg.validate();
  double acc = 0.0;
  acc += half_cauchy_logpdf(latents.tau, cfg.tau0()) + std::log(latents.tau);
  acc += inv_gamma_logpdf(latents.c2, 0.5 * cfg.nu, 0.5 * cfg.nu * cfg.s * cfg.s) +
         std::log(latents.c2);
  for (int i = 0; i < cfg.m; ++i) {
    acc += half_cauchy_logpdf(latents.lambda[i], 1.0) + std::log(latents.lambda[i]);
    const double sd = latents.tau * latents.lambda_tilde[i];
    acc += normal_logpdf(latents.coef[i], sd) + std::log(sd);
  }
  return acc;
}

}  // namespace gpnode
