#include "gpnode/integrate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace gpnode {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using RowMajorMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstRowMajorMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

void check_grid(std::span<const double> t_out) {
  if (t_out.empty()) throw std::invalid_argument("solve: empty output grid");
  for (std::size_t i = 1; i < t_out.size(); ++i)
    if (!(t_out[i] > t_out[i - 1])) throw std::invalid_argument("solve: output grid not ascending");
}

// Augmented right-hand side: primal state in the first D entries, the
// variational state S (D x P, row-major) behind it when P > 0.
struct AugmentedRhs {
  const DynamicsModel& model;
  const VectorXd& theta;
  int dim;
  int n_params;  // 0 => plain solve
  mutable MatrixXd jx, jtheta;

  int size() const { return dim + dim * n_params; }

  void operator()(const VectorXd& y, double t, VectorXd& dy) const {
    const std::span<const double> x(y.data(), static_cast<std::size_t>(dim));
    const std::span<const double> th(theta.data(), static_cast<std::size_t>(theta.size()));
    model.rhs(x, t, th, std::span<double>(dy.data(), static_cast<std::size_t>(dim)));
    if (n_params == 0) return;
    model.rhs_jacobians(x, t, th, jx, jtheta);
    ConstRowMajorMap s(y.data() + dim, dim, n_params);
    RowMajorMap ds(dy.data() + dim, dim, n_params);
    ds.noalias() = jx * s;
    ds += jtheta;
  }
};

struct Rk4Workspace {
  VectorXd k1, k2, k3, k4, tmp;
  explicit Rk4Workspace(int n) : k1(n), k2(n), k3(n), k4(n), tmp(n) {}
};

void rk4_step(const AugmentedRhs& f, VectorXd& y, double t, double h, Rk4Workspace& w) {
  f(y, t, w.k1);
  w.tmp = y + (0.5 * h) * w.k1;
  f(w.tmp, t + 0.5 * h, w.k2);
  w.tmp = y + (0.5 * h) * w.k2;
  f(w.tmp, t + 0.5 * h, w.k3);
  w.tmp = y + h * w.k3;
  f(w.tmp, t + h, w.k4);
  y += (h / 6.0) * (w.k1 + 2.0 * w.k2 + 2.0 * w.k3 + w.k4);
}

// Dormand-Prince 5(4) coefficients.
constexpr double kC[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
constexpr double kA[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
constexpr double kB5[7] = {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84, 0.0};
constexpr double kB4[7] = {5179.0 / 57600,    0.0,         7571.0 / 16695, 393.0 / 640,
                           -92097.0 / 339200, 187.0 / 2100, 1.0 / 40};

struct DopriWorkspace {
  std::array<VectorXd, 7> k;
  VectorXd tmp, ynew, yerr;
  explicit DopriWorkspace(int n) : tmp(n), ynew(n), yerr(n) {
    for (auto& v : k) v.resize(n);
  }
};

// One attempted step; returns the scaled error norm over the first
// `err_dim` entries (primal state when integrating sensitivities).
double dopri_attempt(const AugmentedRhs& f, const VectorXd& y, double t, double h,
                     int err_dim, double rtol, double atol, DopriWorkspace& w) {
  f(y, t, w.k[0]);
  for (int s = 1; s < 7; ++s) {
    w.tmp = y;
    for (int j = 0; j < s; ++j)
      if (kA[s][j] != 0.0) w.tmp += (h * kA[s][j]) * w.k[j];
    f(w.tmp, t + kC[s] * h, w.k[s]);
  }
  w.ynew = y;
  w.yerr.setZero();
  for (int s = 0; s < 7; ++s) {
    if (kB5[s] != 0.0) w.ynew += (h * kB5[s]) * w.k[s];
    const double db = kB5[s] - kB4[s];
    if (db != 0.0) w.yerr += (h * db) * w.k[s];
  }
  double acc = 0.0;
  for (int i = 0; i < err_dim; ++i) {
    const double scale = atol + rtol * std::max(std::abs(y[i]), std::abs(w.ynew[i]));
    const double r = w.yerr[i] / scale;
    acc += r * r;
  }
  return std::sqrt(acc / err_dim);
}

SolveResult run_solve(const DynamicsModel& model, const VectorXd& z0, std::span<const double> t_out,
                      const VectorXd& theta_f, const SolverConfig& cfg, bool with_sens) {
  cfg.validate();
  check_grid(t_out);
  const int dim = model.state_dim();
  const int n_params = with_sens ? model.param_count() : 0;
  if (z0.size() != dim) throw std::invalid_argument("solve: z0 size mismatch");
  if (theta_f.size() != model.param_count()) throw std::invalid_argument("solve: theta_f size mismatch");

  SolveResult res;
  res.grid.assign(t_out.begin(), t_out.end());
  const int n_times = static_cast<int>(t_out.size());
  res.states.resize(n_times, dim);
  res.has_sensitivities = with_sens;
  if (with_sens) res.sensitivities.resize(n_times, dim * n_params);

  AugmentedRhs f{model, theta_f, dim, n_params, {}, {}};
  VectorXd y = VectorXd::Zero(f.size());
  y.head(dim) = z0;
  if (with_sens) {
    RowMajorMap s(y.data() + dim, dim, n_params);
    const auto& ic_states = model.inferred_ic_states();
    const int p0 = model.rhs_param_count();
    for (std::size_t i = 0; i < ic_states.size(); ++i)
      s(ic_states[i], p0 + static_cast<int>(i)) = 1.0;
  }

  auto record = [&](int row) {
    res.states.row(row) = y.head(dim);
    if (with_sens) res.sensitivities.row(row) = y.tail(dim * n_params);
  };
  record(0);

  long steps_used = 0;
  const double fixed_h = cfg.h;

  if (cfg.scheme == Scheme::Rk4Fixed) {
    Rk4Workspace w(f.size());
    for (int i = 1; i < n_times; ++i) {
      const double gap = t_out[static_cast<std::size_t>(i)] - t_out[static_cast<std::size_t>(i - 1)];
      const long n_sub = std::max<long>(1, static_cast<long>(std::ceil(gap / fixed_h - 1e-9)));
      const double hh = gap / static_cast<double>(n_sub);
      double t = t_out[static_cast<std::size_t>(i - 1)];
      for (long s = 0; s < n_sub; ++s) {
        if (++steps_used > cfg.max_steps || !y.allFinite()) {
          res.ok = false;
          res.failed_at = t;
          return res;
        }
        rk4_step(f, y, t, hh, w);
        t += hh;
      }
      if (!y.allFinite()) {
        res.ok = false;
        res.failed_at = t_out[static_cast<std::size_t>(i - 1)];
        return res;
      }
      record(i);
    }
  } else {
    DopriWorkspace w(f.size());
    const double t_span = t_out.back() - t_out.front();
    double h = std::min(0.01 * t_span, t_out[1] - t_out[0]);
    for (int i = 1; i < n_times; ++i) {
      double t = t_out[static_cast<std::size_t>(i - 1)];
      const double t_end = t_out[static_cast<std::size_t>(i)];
      while (t < t_end) {
        if (++steps_used > cfg.max_steps || !y.allFinite()) {
          res.ok = false;
          res.failed_at = t;
          return res;
        }
        const double h_try = std::min(h, t_end - t);
        const double err = dopri_attempt(f, y, t, h_try, dim, cfg.rtol, cfg.atol, w);
        if (!std::isfinite(err)) {
          res.ok = false;
          res.failed_at = t;
          return res;
        }
        if (err <= 1.0) {
          y = w.ynew;
          t += h_try;
          const double grow = err == 0.0 ? 10.0 : 0.9 * std::pow(err, -0.2);
          h = h_try * std::clamp(grow, 0.2, 10.0);
        } else {
          h = h_try * std::max(0.2, 0.9 * std::pow(err, -0.2));
        }
      }
      if (!y.allFinite()) {
        res.ok = false;
        res.failed_at = t_out[static_cast<std::size_t>(i - 1)];
        return res;
      }
      record(i);
    }
  }
  res.ok = true;
  return res;
}

}  // namespace

void SolverConfig::validate() const {
  if (!(h > 0.0)) throw std::invalid_argument("solver: h must be positive");
  if (!(rtol > 0.0) || !(atol > 0.0)) throw std::invalid_argument("solver: tolerances must be positive");
  if (max_steps < 1) throw std::invalid_argument("solver: max_steps must be >= 1");
}

double default_fixed_step(std::span<const double> t_out) {
  check_grid(t_out);
  if (t_out.size() < 2) return 0.01;
  double min_gap = t_out[1] - t_out[0];
  for (std::size_t i = 2; i < t_out.size(); ++i)
    min_gap = std::min(min_gap, t_out[i] - t_out[i - 1]);
  return std::min(min_gap / 10.0, 0.01 * t_out.back());
}

SolveResult solve(const DynamicsModel& model, const Eigen::VectorXd& z0,
                  std::span<const double> t_out, const Eigen::VectorXd& theta_f,
                  const SolverConfig& cfg) {
  return run_solve(model, z0, t_out, theta_f, cfg, false);
}

SolveResult solve_with_sensitivities(const DynamicsModel& model, const Eigen::VectorXd& z0,
                                     std::span<const double> t_out,
                                     const Eigen::VectorXd& theta_f, const SolverConfig& cfg) {
  return run_solve(model, z0, t_out, theta_f, cfg, true);
}

Eigen::VectorXd adjoint_gradient(const DynamicsModel& model, const Eigen::VectorXd& z0,
                                 std::span<const double> t_out, const Eigen::VectorXd& theta_f,
                                 const SolverConfig& cfg, const Eigen::MatrixXd& cotangents) {
  const int dim = model.state_dim();
  const int n_params = model.param_count();
  if (cotangents.rows() != static_cast<Eigen::Index>(t_out.size()) || cotangents.cols() != dim)
    throw std::invalid_argument("adjoint_gradient: cotangent shape mismatch");

  SolveResult forward = solve(model, z0, t_out, theta_f, cfg);
  if (!forward.ok) throw std::runtime_error("adjoint_gradient: forward solve failed");

  // Backward state [x, a, g]: x' = f, a' = -Jx^T a, g' = -Jtheta^T a,
  // integrated with negative steps from each output time to the previous one.
  const int total = dim + dim + n_params;
  VectorXd y(total);

  struct BackwardRhs {
    const DynamicsModel& model;
    const VectorXd& theta;
    int dim, n_params;
    mutable MatrixXd jx, jtheta;
    int size() const { return dim + dim + n_params; }
    void operator()(const VectorXd& y, double t, VectorXd& dy) const {
      const std::span<const double> x(y.data(), static_cast<std::size_t>(dim));
      const std::span<const double> th(theta.data(), static_cast<std::size_t>(theta.size()));
      model.rhs(x, t, th, std::span<double>(dy.data(), static_cast<std::size_t>(dim)));
      model.rhs_jacobians(x, t, th, jx, jtheta);
      const auto a = y.segment(dim, dim);
      dy.segment(dim, dim).noalias() = -jx.transpose() * a;
      dy.tail(n_params).noalias() = -jtheta.transpose() * a;
    }
  };

  const double h = cfg.scheme == Scheme::Rk4Fixed ? cfg.h : default_fixed_step(t_out);
  const int n_times = static_cast<int>(t_out.size());
  VectorXd a = VectorXd::Zero(dim);
  VectorXd g = VectorXd::Zero(n_params);

  // Generic RK4 over the backward system, reusing the forward states as
  // anchors at every interval boundary.
  auto rk4_generic = [&](auto& f, VectorXd& state, double t, double step, auto& w) {
    f(state, t, w.k1);
    w.tmp = state + (0.5 * step) * w.k1;
    f(w.tmp, t + 0.5 * step, w.k2);
    w.tmp = state + (0.5 * step) * w.k2;
    f(w.tmp, t + 0.5 * step, w.k3);
    w.tmp = state + step * w.k3;
    f(w.tmp, t + step, w.k4);
    state += (step / 6.0) * (w.k1 + 2.0 * w.k2 + 2.0 * w.k3 + w.k4);
  };

  BackwardRhs back{model, theta_f, dim, n_params, {}, {}};
  Rk4Workspace w(total);
  for (int i = n_times - 1; i >= 1; --i) {
    a += cotangents.row(i).transpose();
    const double t_hi = t_out[static_cast<std::size_t>(i)];
    const double t_lo = t_out[static_cast<std::size_t>(i - 1)];
    const double gap = t_hi - t_lo;
    const long n_sub = std::max<long>(1, static_cast<long>(std::ceil(gap / h - 1e-9)));
    const double hh = -gap / static_cast<double>(n_sub);
    y.head(dim) = forward.states.row(i);
    y.segment(dim, dim) = a;
    y.tail(n_params) = g;
    double t = t_hi;
    for (long s = 0; s < n_sub; ++s) {
      rk4_generic(back, y, t, hh, w);
      t += hh;
    }
    if (!y.allFinite()) throw std::runtime_error("adjoint_gradient: backward solve failed");
    a = y.segment(dim, dim);
    g = y.tail(n_params);
  }
  a += cotangents.row(0).transpose();

  const auto& ic_states = model.inferred_ic_states();
  const int p0 = model.rhs_param_count();
  for (std::size_t i = 0; i < ic_states.size(); ++i)
    g[p0 + static_cast<Eigen::Index>(i)] += a[ic_states[i]];
  return g;
}

}  // namespace gpnode
