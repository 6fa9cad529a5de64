#include "gpnode/gp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace gpnode {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;  // log(2 pi)

// Jitter ladder, as a multiple of the mean diagonal magnitude.
constexpr double kJitterLadder[] = {0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6};

bool factorize_with_jitter(const Eigen::MatrixXd& cov, Eigen::LLT<Eigen::MatrixXd>& llt,
                           double& jitter_out) {
  const double scale = cov.diagonal().mean();
  for (double mult : kJitterLadder) {
    const double jitter = mult * scale;
    Eigen::MatrixXd work = cov;
    work.diagonal().array() += jitter;
    llt.compute(work);
    if (llt.info() == Eigen::Success) {
      jitter_out = jitter;
      return true;
    }
  }
  return false;
}

}  // namespace

double kernel_eval(double w, double l, double t, double tp) {
  const double d = t - tp;
  return w * std::exp(-(d * d) / (l * l));
}

Eigen::MatrixXd gram(const VariableHyper& hyper, std::span<const double> ta,
                     std::span<const double> tb) {
  Eigen::MatrixXd out(ta.size(), tb.size());
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
      double acc = 0.0;
      for (const auto& c : hyper.components)
        acc += kernel_eval(c.w, c.l, ta[static_cast<std::size_t>(i)], tb[static_cast<std::size_t>(j)]);
      out(i, j) = acc;
    }
  return out;
}

CovarianceAssembly assemble_covariance(const std::vector<std::vector<double>>& grids,
                                       const std::vector<VariableHyper>& hypers) {
  if (grids.size() != hypers.size())
    throw std::invalid_argument("assemble_covariance: grids/hypers size mismatch");
  CovarianceAssembly out;
  out.ok = true;
  int offset = 0;
  for (std::size_t d = 0; d < grids.size(); ++d) {
    CovarianceBlock block;
    block.offset = offset;
    block.n = static_cast<int>(grids[d].size());
    block.cov = gram(hypers[d], grids[d], grids[d]);
    block.cov.diagonal().array() += hypers[d].eps;
    block.ok = factorize_with_jitter(block.cov, block.llt, block.jitter);
    out.ok = out.ok && block.ok;
    offset += block.n;
    out.blocks.push_back(std::move(block));
  }
  out.total = offset;
  return out;
}

double mvn_logpdf(const Eigen::VectorXd& y, const Eigen::VectorXd& mean,
                  const CovarianceAssembly& cov) {
  if (y.size() != cov.total || mean.size() != cov.total)
    throw std::invalid_argument("mvn_logpdf: dimension mismatch");
  if (!cov.ok) return -std::numeric_limits<double>::infinity();
  double acc = 0.0;
  for (const auto& block : cov.blocks) {
    const Eigen::VectorXd r = y.segment(block.offset, block.n) - mean.segment(block.offset, block.n);
    const Eigen::VectorXd w = block.llt.matrixL().solve(r);
    double log_det_half = 0.0;
    for (int i = 0; i < block.n; ++i) log_det_half += std::log(block.llt.matrixL()(i, i));
    acc += -0.5 * w.squaredNorm() - log_det_half - 0.5 * block.n * kLog2Pi;
  }
  return acc;
}

GpConditional gp_condition(const VariableHyper& hyper, std::span<const double> train_times,
                           const Eigen::VectorXd& residuals, std::span<const double> query_times) {
  if (residuals.size() != static_cast<Eigen::Index>(train_times.size()))
    throw std::invalid_argument("gp_condition: residual size mismatch");
  Eigen::MatrixXd ktt = gram(hyper, train_times, train_times);
  ktt.diagonal().array() += hyper.eps;
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;
  if (!factorize_with_jitter(ktt, llt, jitter))
    throw std::runtime_error("gp_condition: training covariance not positive definite");

  const Eigen::MatrixXd kqt = gram(hyper, query_times, train_times);
  const Eigen::MatrixXd kqq = gram(hyper, query_times, query_times);

  GpConditional out;
  out.mean_correction = kqt * llt.solve(residuals);
  Eigen::MatrixXd cross = llt.solve(kqt.transpose());
  out.cov = kqq - kqt * cross;
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  for (Eigen::Index i = 0; i < out.cov.rows(); ++i)
    if (out.cov(i, i) < 0.0) out.cov(i, i) = 0.0;
  return out;
}

}  // namespace gpnode
