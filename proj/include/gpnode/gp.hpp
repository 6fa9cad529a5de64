#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <span>
#include <vector>

namespace gpnode {

// Squared-exponential covariance w * exp(-(t - t')^2 / l^2). The exponent
// carries no factor 2 in the denominator, so this lengthscale is 1/sqrt(2)
// of the textbook convention.
double kernel_eval(double w, double l, double t, double tp);

struct KernelComponent {
  double w = 1.0;
  double l = 1.0;
};

// Hyperparameters of one observed variable: a sum of kernel components plus
// an independent noise variance. A single component is used throughout; the
// vector keeps the multi-component seam open.
struct VariableHyper {
  std::vector<KernelComponent> components;
  double eps = 0.0;

  double prior_variance() const {
    double acc = 0.0;
    for (const auto& c : components) acc += c.w;
    return acc;
  }
};

Eigen::MatrixXd gram(const VariableHyper& hyper, std::span<const double> ta,
                     std::span<const double> tb);

struct CovarianceBlock {
  int offset = 0;
  int n = 0;
  Eigen::MatrixXd cov;       // kernel + noise (without stabilizing jitter)
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;       // stabilizer actually applied to the diagonal
  bool ok = false;
};

struct CovarianceAssembly {
  std::vector<CovarianceBlock> blocks;
  int total = 0;
  bool ok = false;  // every block factorized
};

// Block-diagonal covariance over per-variable time grids; cross-variable
// blocks are exactly zero and never materialized. Blocks that fail to
// factorize after the jitter ladder leave ok == false, which the sampler
// reads as a log-density of -inf.
CovarianceAssembly assemble_covariance(const std::vector<std::vector<double>>& grids,
                                       const std::vector<VariableHyper>& hypers);

// Log N(y | mean, K + K_eps), summed over the independent blocks; -inf when
// the assembly is not factorizable.
double mvn_logpdf(const Eigen::VectorXd& y, const Eigen::VectorXd& mean,
                  const CovarianceAssembly& cov);

struct GpConditional {
  Eigen::VectorXd mean_correction;  // K(t*,t) (K + eps I)^-1 residuals
  Eigen::MatrixXd cov;              // symmetrized, diagonal clipped at zero
};

// Per-variable posterior conditioning of the GP on residuals about the ODE
// mean. Throws std::runtime_error if the training covariance cannot be
// factorized.
GpConditional gp_condition(const VariableHyper& hyper, std::span<const double> train_times,
                           const Eigen::VectorXd& residuals, std::span<const double> query_times);

}  // namespace gpnode
