#include "gpnode/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <stdexcept>

#include "gpnode/dual.hpp"

namespace gpnode {

void DictionarySpec::validate() const {
  if (state_dim <= 0) throw std::invalid_argument("dictionary: state_dim must be positive");
  if (terms.empty()) throw std::invalid_argument("dictionary: no terms");
  std::set<std::vector<int>> seen;
  for (const auto& t : terms) {
    if (static_cast<int>(t.size()) != state_dim)
      throw std::invalid_argument("dictionary: term multi-index length != state_dim");
    for (int e : t)
      if (e < 0) throw std::invalid_argument("dictionary: negative exponent");
    if (!seen.insert(t).second) throw std::invalid_argument("dictionary: duplicate term");
  }
}

std::string DictionarySpec::term_label(int k) const {
  const auto& t = terms.at(static_cast<std::size_t>(k));
  std::string out;
  for (int j = 0; j < state_dim; ++j) {
    if (t[j] == 0) continue;
    if (!out.empty()) out += "*";
    out += "x" + std::to_string(j + 1);
    if (t[j] > 1) out += "^" + std::to_string(t[j]);
  }
  return out.empty() ? "1" : out;
}

DictionarySpec poly_dictionary(int state_dim, int degree, bool cross_terms, bool constant) {
  if (state_dim <= 0 || degree < 1) throw std::invalid_argument("poly_dictionary: bad arguments");
  DictionarySpec spec;
  spec.state_dim = state_dim;
  if (constant) spec.terms.push_back(std::vector<int>(state_dim, 0));
  // ascending total degree, lexicographic within a degree
  for (int deg = 1; deg <= degree; ++deg) {
    std::vector<int> idx(state_dim, 0);
    // enumerate all multi-indices with sum == deg
    std::function<void(int, int)> rec = [&](int pos, int remaining) {
      if (pos == state_dim - 1) {
        idx[pos] = remaining;
        int nonzero = 0;
        for (int e : idx) nonzero += (e > 0);
        if (cross_terms || nonzero <= 1) spec.terms.push_back(idx);
        return;
      }
      for (int e = remaining; e >= 0; --e) {
        idx[pos] = e;
        rec(pos + 1, remaining - e);
      }
    };
    rec(0, deg);
  }
  spec.validate();
  return spec;
}

void eval_dictionary(const DictionarySpec& spec, std::span<const double> x, std::span<double> phi) {
  if (static_cast<int>(x.size()) != spec.state_dim)
    throw std::invalid_argument("eval_dictionary: state size mismatch");
  if (static_cast<int>(phi.size()) != spec.size())
    throw std::invalid_argument("eval_dictionary: output size mismatch");
  for (int k = 0; k < spec.size(); ++k) {
    double p = 1.0;
    const auto& t = spec.terms[static_cast<std::size_t>(k)];
    for (int j = 0; j < spec.state_dim; ++j)
      for (int e = 0; e < t[j]; ++e) p *= x[static_cast<std::size_t>(j)];
    phi[static_cast<std::size_t>(k)] = p;
  }
}

void eval_dictionary_jacobian(const DictionarySpec& spec, std::span<const double> x,
                              Eigen::MatrixXd& dphi) {
  if (static_cast<int>(x.size()) != spec.state_dim)
    throw std::invalid_argument("eval_dictionary_jacobian: state size mismatch");
  dphi.setZero(spec.size(), spec.state_dim);
  for (int k = 0; k < spec.size(); ++k) {
    const auto& t = spec.terms[static_cast<std::size_t>(k)];
    for (int j = 0; j < spec.state_dim; ++j) {
      if (t[j] == 0) continue;
      double p = static_cast<double>(t[j]);
      for (int e = 0; e < t[j] - 1; ++e) p *= x[static_cast<std::size_t>(j)];
      for (int j2 = 0; j2 < spec.state_dim; ++j2) {
        if (j2 == j) continue;
        for (int e = 0; e < t[j2]; ++e) p *= x[static_cast<std::size_t>(j2)];
      }
      dphi(k, j) = p;
    }
  }
}

namespace {

// Real-exponent power as exp(q log x); NaN outside x > 0 so that a state
// excursion out of the admissible domain surfaces as a failed solve rather
// than an exception mid-integration.
inline double rpow(double x, double q) {
  if (!(x > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return std::exp(q * std::log(x));
}
template <int Cap>
inline DualN<Cap> rpow(const DualN<Cap>& x, const DualN<Cap>& q) {
  return pow(x, q);
}

// x1' = alpha x1 + beta x1 x2 ; x2' = delta x1 x2 + gamma x2
template <typename T>
void lv_rhs_impl(const T* x, const T* p, T* out) {
  out[0] = p[0] * x[0] + p[1] * x[0] * x[1];
  out[1] = p[3] * x[0] * x[1] + p[2] * x[1];
}

// Seven-species yeast glycolysis with conserved pools N1 + N2 and A2 + A3;
// the inter-compartment flux is kappa * (S4 - S4ex).
// p: J0 k1 k2 k3 k4 k5 k6 k kappa q K_I phi N A
template <typename T>
void glycolysis_rhs_impl(const T* x, const T* p, T* out) {
  const T& s1 = x[0];
  const T& s2 = x[1];
  const T& s3 = x[2];
  const T& s4 = x[3];
  const T& n2 = x[4];
  const T& a3 = x[5];
  const T& s4ex = x[6];

  const T n1 = p[12] - n2;
  const T a2 = p[13] - a3;
  const T inhibition = 1.0 + rpow(a3 / p[10], p[9]);
  const T v1 = p[1] * s1 * a3 / inhibition;
  const T v2 = p[2] * s2 * n1;
  const T v3 = p[3] * s3 * a2;
  const T v4 = p[4] * s4 * n2;
  const T v5 = p[5] * a3;
  const T v6 = p[6] * s2 * n2;
  const T v7 = p[7] * s4ex;
  const T flux = p[8] * (s4 - s4ex);

  out[0] = p[0] - v1;
  out[1] = 2.0 * v1 - v2 - v6;
  out[2] = v2 - v3;
  out[3] = v3 - v4 - flux;
  out[4] = v2 - v4 - v6;
  out[5] = -2.0 * v1 + 2.0 * v3 - v5;
  out[6] = p[11] * flux - v7;
}

template <typename Fn>
void builtin_jacobians(Fn&& rhs_impl, int dim, int n_rhs_params, std::span<const double> x,
                       std::span<const double> theta, Eigen::MatrixXd& dfdx,
                       Eigen::MatrixXd& dfdtheta, int n_total_params) {
  const int seeds = dim + n_rhs_params;
  std::array<Dual, 16> xs;
  std::array<Dual, 16> ps;
  std::array<Dual, 16> out;
  for (int i = 0; i < dim; ++i) xs[static_cast<std::size_t>(i)] = Dual::seed(x[static_cast<std::size_t>(i)], seeds, i);
  for (int j = 0; j < n_rhs_params; ++j)
    ps[static_cast<std::size_t>(j)] = Dual::seed(theta[static_cast<std::size_t>(j)], seeds, dim + j);
  rhs_impl(xs.data(), ps.data(), out.data());
  dfdx.resize(dim, dim);
  dfdtheta.setZero(dim, n_total_params);
  for (int d = 0; d < dim; ++d) {
    for (int i = 0; i < dim; ++i) dfdx(d, i) = out[static_cast<std::size_t>(d)].deriv(i);
    for (int j = 0; j < n_rhs_params; ++j) dfdtheta(d, j) = out[static_cast<std::size_t>(d)].deriv(dim + j);
  }
}

DictionarySpec named_terms(int state_dim, const std::vector<std::vector<int>>& terms) {
  DictionarySpec spec;
  spec.state_dim = state_dim;
  spec.terms = terms;
  spec.validate();
  return spec;
}

}  // namespace

DynamicsModel DynamicsModel::dictionary(DictionarySpec spec) {
  spec.validate();
  DynamicsModel m;
  m.kind_ = ModelKind::Dictionary;
  m.state_dim_ = spec.state_dim;
  m.dict_ = std::move(spec);
  for (int d = 0; d < m.state_dim_; ++d)
    for (int k = 0; k < m.dict_.size(); ++k)
      m.rhs_param_names_.push_back("a" + std::to_string(d + 1) + std::to_string(k + 1));
  m.param_names_ = m.rhs_param_names_;
  for (int d = 0; d < m.state_dim_; ++d) m.state_names.push_back("x" + std::to_string(d + 1));
  return m;
}

DynamicsModel DynamicsModel::lotka_volterra() {
  DynamicsModel m;
  m.kind_ = ModelKind::LotkaVolterra;
  m.state_dim_ = 2;
  m.rhs_param_names_ = {"alpha", "beta", "gamma", "delta"};
  m.param_names_ = m.rhs_param_names_;
  m.state_names = {"x1", "x2"};
  return m;
}

DynamicsModel DynamicsModel::glycolysis() {
  DynamicsModel m;
  m.kind_ = ModelKind::Glycolysis;
  m.state_dim_ = 7;
  m.rhs_param_names_ = {"J0", "k1", "k2", "k3", "k4", "k5", "k6",
                        "k",  "kappa", "q", "K_I", "phi", "N", "A"};
  m.param_names_ = m.rhs_param_names_;
  m.state_names = {"S1", "S2", "S3", "S4", "N2", "A3", "S4ex"};
  return m;
}

DynamicsModel DynamicsModel::preset(const std::string& name, int state_dim) {
  if (name == "lv-known") return lotka_volterra();
  if (name == "glycolysis") return glycolysis();
  if (name == "lv-dict7") {
    return dictionary(named_terms(2, {{1, 0}, {0, 1}, {1, 1}, {2, 0}, {0, 2}, {3, 0}, {0, 3}}));
  }
  if (name == "mocap-dict-a") {
    return dictionary(named_terms(3, {{0, 0, 0},
                                      {1, 0, 0},
                                      {0, 1, 0},
                                      {0, 0, 1},
                                      {1, 1, 0},
                                      {1, 0, 1},
                                      {0, 1, 1}}));
  }
  if (name == "mocap-dict-b") {
    return dictionary(named_terms(3, {{0, 0, 0},
                                      {1, 0, 0},
                                      {0, 1, 0},
                                      {0, 0, 1},
                                      {1, 1, 0},
                                      {1, 0, 1},
                                      {0, 1, 1},
                                      {2, 0, 0},
                                      {0, 2, 0},
                                      {0, 0, 2}}));
  }
  if (name.rfind("poly(", 0) == 0 && name.back() == ')') {
    if (state_dim <= 0)
      throw std::invalid_argument("poly(...) preset needs the data's state dimension");
    int degree = 2;
    bool cross = true, constant = true;
    std::string body = name.substr(5, name.size() - 6);
    std::size_t start = 0;
    while (start < body.size()) {
      std::size_t end = body.find(',', start);
      if (end == std::string::npos) end = body.size();
      std::string item = body.substr(start, end - start);
      item.erase(std::remove(item.begin(), item.end(), ' '), item.end());
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw std::invalid_argument("poly(): expected key=value: " + item);
      const std::string key = item.substr(0, eq);
      const std::string val = item.substr(eq + 1);
      if (key == "degree")
        degree = std::stoi(val);
      else if (key == "cross_terms" || key == "cross")
        cross = (val == "true" || val == "1");
      else if (key == "constant")
        constant = (val == "true" || val == "1");
      else
        throw std::invalid_argument("poly(): unknown key " + key);
      start = end + 1;
    }
    return dictionary(poly_dictionary(state_dim, degree, cross, constant));
  }
  throw std::invalid_argument("unknown model preset: " + name);
}

void DynamicsModel::add_inferred_initial_condition(int state_index, const std::string& name) {
  if (state_index < 0 || state_index >= state_dim_)
    throw std::invalid_argument("add_inferred_initial_condition: bad state index");
  ic_states_.push_back(state_index);
  param_names_.push_back(name);
}

void DynamicsModel::rhs(std::span<const double> x, double t, std::span<const double> theta_f,
                        std::span<double> dx) const {
  (void)t;  // all built-in systems are autonomous
  if (static_cast<int>(x.size()) != state_dim_ || static_cast<int>(dx.size()) != state_dim_)
    throw std::invalid_argument("rhs: state size mismatch");
  if (static_cast<int>(theta_f.size()) != param_count())
    throw std::invalid_argument("rhs: theta_f size mismatch");
  switch (kind_) {
    case ModelKind::Dictionary: {
      const int K = dict_.size();
      if (K > 256) throw std::invalid_argument("rhs: dictionary too large");
      double phi_buf[256];
      std::span<double> phi(phi_buf, static_cast<std::size_t>(K));
      eval_dictionary(dict_, x, phi);
      for (int d = 0; d < state_dim_; ++d) {
        double acc = 0.0;
        for (int k = 0; k < K; ++k) acc += theta_f[static_cast<std::size_t>(d * K + k)] * phi[static_cast<std::size_t>(k)];
        dx[static_cast<std::size_t>(d)] = acc;
      }
      break;
    }
    case ModelKind::LotkaVolterra:
      lv_rhs_impl(x.data(), theta_f.data(), dx.data());
      break;
    case ModelKind::Glycolysis:
      if (!(theta_f[10] > 0.0)) throw std::domain_error("glycolysis: K_I must be positive");
      glycolysis_rhs_impl(x.data(), theta_f.data(), dx.data());
      break;
  }
}

Eigen::VectorXd DynamicsModel::rhs(const Eigen::VectorXd& x, double t,
                                   const Eigen::VectorXd& theta_f) const {
  Eigen::VectorXd dx(state_dim_);
  rhs(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())), t,
      std::span<const double>(theta_f.data(), static_cast<std::size_t>(theta_f.size())),
      std::span<double>(dx.data(), static_cast<std::size_t>(dx.size())));
  return dx;
}

void DynamicsModel::rhs_jacobians(std::span<const double> x, double t,
                                  std::span<const double> theta_f, Eigen::MatrixXd& dfdx,
                                  Eigen::MatrixXd& dfdtheta) const {
  (void)t;
  if (static_cast<int>(theta_f.size()) != param_count())
    throw std::invalid_argument("rhs_jacobians: theta_f size mismatch");
  switch (kind_) {
    case ModelKind::Dictionary: {
      const int K = dict_.size();
      if (K > 256) throw std::invalid_argument("rhs_jacobians: dictionary too large");
      double phi_buf[256];
      std::span<double> phi(phi_buf, static_cast<std::size_t>(K));
      eval_dictionary(dict_, x, phi);
      Eigen::MatrixXd dphi;
      eval_dictionary_jacobian(dict_, x, dphi);
      dfdx.setZero(state_dim_, state_dim_);
      for (int d = 0; d < state_dim_; ++d)
        for (int j = 0; j < state_dim_; ++j) {
          double acc = 0.0;
          for (int k = 0; k < K; ++k) acc += theta_f[static_cast<std::size_t>(d * K + k)] * dphi(k, j);
          dfdx(d, j) = acc;
        }
      dfdtheta.setZero(state_dim_, param_count());
      for (int d = 0; d < state_dim_; ++d)
        for (int k = 0; k < K; ++k) dfdtheta(d, d * K + k) = phi[static_cast<std::size_t>(k)];
      break;
    }
    case ModelKind::LotkaVolterra:
      builtin_jacobians([](const Dual* xs, const Dual* ps, Dual* out) { lv_rhs_impl(xs, ps, out); },
                        state_dim_, rhs_param_count(), x, theta_f, dfdx, dfdtheta, param_count());
      break;
    case ModelKind::Glycolysis:
      if (!(theta_f[10] > 0.0)) throw std::domain_error("glycolysis: K_I must be positive");
      builtin_jacobians(
          [](const Dual* xs, const Dual* ps, Dual* out) { glycolysis_rhs_impl(xs, ps, out); },
          state_dim_, rhs_param_count(), x, theta_f, dfdx, dfdtheta, param_count());
      break;
  }
}

}  // namespace gpnode
