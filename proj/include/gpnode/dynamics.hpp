#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

namespace gpnode {

// Polynomial feature library over the state vector. Each term is a
// multi-index of exponents, one entry per state variable; the all-zero
// multi-index is the constant term.
struct DictionarySpec {
  int state_dim = 0;
  std::vector<std::vector<int>> terms;

  int size() const { return static_cast<int>(terms.size()); }
  void validate() const;                 // throws std::invalid_argument
  std::string term_label(int k) const;   // e.g. "x1*x2^2", "1"
};

// All monomials with total degree <= degree; `cross_terms` keeps mixed
// monomials, otherwise only pure powers of single variables are included.
DictionarySpec poly_dictionary(int state_dim, int degree, bool cross_terms, bool constant);

void eval_dictionary(const DictionarySpec& spec, std::span<const double> x, std::span<double> phi);
// dphi(k, j) = d phi_k / d x_j
void eval_dictionary_jacobian(const DictionarySpec& spec, std::span<const double> x, Eigen::MatrixXd& dphi);

enum class ModelKind { Dictionary, LotkaVolterra, Glycolysis };

// Right-hand side of the ODE system together with its parameter binding.
// theta_f is laid out as [rhs parameters..., inferred initial conditions...];
// initial-condition entries never enter the rhs itself.
class DynamicsModel {
 public:
  static DynamicsModel dictionary(DictionarySpec spec);
  static DynamicsModel lotka_volterra();
  static DynamicsModel glycolysis();
  // Named presets: lv-dict7, lv-known, glycolysis, mocap-dict-a, mocap-dict-b,
  // poly(degree=..,cross=..,constant=..). `state_dim` is required for poly().
  static DynamicsModel preset(const std::string& name, int state_dim = 0);

  ModelKind kind() const { return kind_; }
  int state_dim() const { return state_dim_; }
  int rhs_param_count() const { return static_cast<int>(rhs_param_names_.size()); }
  int param_count() const { return rhs_param_count() + static_cast<int>(ic_states_.size()); }
  const std::vector<std::string>& param_names() const { return param_names_; }
  const std::vector<int>& inferred_ic_states() const { return ic_states_; }
  const DictionarySpec& dictionary_spec() const { return dict_; }

  void add_inferred_initial_condition(int state_index, const std::string& name);

  // dx = f(x, t; theta_f). Requires theta_f.size() == param_count().
  void rhs(std::span<const double> x, double t, std::span<const double> theta_f,
           std::span<double> dx) const;
  Eigen::VectorXd rhs(const Eigen::VectorXd& x, double t, const Eigen::VectorXd& theta_f) const;

  // dfdx is D x D, dfdtheta is D x param_count(); initial-condition columns
  // of dfdtheta are structurally zero.
  void rhs_jacobians(std::span<const double> x, double t, std::span<const double> theta_f,
                     Eigen::MatrixXd& dfdx, Eigen::MatrixXd& dfdtheta) const;

  std::vector<std::string> state_names;

 private:
  DynamicsModel() = default;

  ModelKind kind_ = ModelKind::Dictionary;
  int state_dim_ = 0;
  DictionarySpec dict_;
  std::vector<std::string> rhs_param_names_;
  std::vector<std::string> param_names_;  // rhs params then inferred ICs
  std::vector<int> ic_states_;
};

}  // namespace gpnode
