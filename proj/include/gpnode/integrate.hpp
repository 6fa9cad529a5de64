#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "gpnode/dynamics.hpp"

namespace gpnode {

enum class Scheme { Rk4Fixed, DormandPrince };

struct SolverConfig {
  Scheme scheme = Scheme::Rk4Fixed;
  double h = 0.01;       // internal step of the fixed scheme
  double rtol = 1e-6;    // adaptive scheme tolerances
  double atol = 1e-9;
  long max_steps = 4'000'000;

  void validate() const;
};

// Step the fixed scheme so that it lands exactly on each requested output
// time; choose h as a tenth of the smallest observation gap, capped at 0.01
// once time is rescaled to [0, 1].
double default_fixed_step(std::span<const double> t_out);

struct SolveResult {
  bool ok = false;
  double failed_at = 0.0;  // last valid time when !ok
  std::vector<double> grid;
  Eigen::MatrixXd states;  // |grid| x D
  // sensitivities(i, d * P + p) = d states(i, d) / d theta_f[p]
  Eigen::MatrixXd sensitivities;
  bool has_sensitivities = false;
};

// States at exactly the requested times. t_out must be sorted ascending and
// start at the initial time; z0 already contains any inferred initial
// conditions (substituted from theta_f by the caller).
SolveResult solve(const DynamicsModel& model, const Eigen::VectorXd& z0,
                  std::span<const double> t_out, const Eigen::VectorXd& theta_f,
                  const SolverConfig& cfg);

// Same trajectory plus d z / d theta_f obtained by integrating the variational
// system with the same discrete scheme, which makes the sensitivities the
// exact derivative of the fixed-step solver map. Columns of inferred initial
// conditions start from the corresponding unit vector.
SolveResult solve_with_sensitivities(const DynamicsModel& model, const Eigen::VectorXd& z0,
                                     std::span<const double> t_out,
                                     const Eigen::VectorXd& theta_f, const SolverConfig& cfg);

// Gradient of sum_i cotangents.row(i) . z(t_i) with respect to theta_f via
// backward integration of the adjoint state with jump updates at output
// times. Throws std::runtime_error if the underlying solve fails.
Eigen::VectorXd adjoint_gradient(const DynamicsModel& model, const Eigen::VectorXd& z0,
                                 std::span<const double> t_out, const Eigen::VectorXd& theta_f,
                                 const SolverConfig& cfg, const Eigen::MatrixXd& cotangents);

}  // namespace gpnode
