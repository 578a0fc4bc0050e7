#include "phs/ph_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "phs/errors.hpp"

namespace phs {

void PortHamiltonianSystem::check_state(const Eigen::VectorXd& x) const {
  if (x.size() != state_dim()) {
    throw std::invalid_argument("state has dimension " + std::to_string(x.size()) +
                                ", expected " + std::to_string(state_dim()));
  }
}

void PortHamiltonianSystem::check_input(const Eigen::VectorXd& u) const {
  if (u.size() != input_dim()) {
    throw std::invalid_argument("input has dimension " + std::to_string(u.size()) +
                                ", expected " + std::to_string(input_dim()));
  }
}

Eigen::VectorXd PortHamiltonianSystem::dynamics(const Eigen::VectorXd& x,
                                                const Eigen::VectorXd& u) const {
  check_state(x);
  check_input(u);
  const Eigen::VectorXd grad = hamiltonian_grad(x);
  return (interconnection(x) - dissipation(x)) * grad + port(x) * u;
}

Eigen::VectorXd PortHamiltonianSystem::output(const Eigen::VectorXd& x) const {
  check_state(x);
  return port(x).transpose() * hamiltonian_grad(x);
}

double PortHamiltonianSystem::energy_rate(const Eigen::VectorXd& x,
                                          const Eigen::VectorXd& u) const {
  check_state(x);
  check_input(u);
  const Eigen::VectorXd grad = hamiltonian_grad(x);
  const Eigen::VectorXd y = port(x).transpose() * grad;
  return -grad.dot(dissipation(x) * grad) + u.dot(y);
}

Eigen::MatrixXd canonical_interconnection(int n) {
  if (n <= 0 || n % 2 != 0) throw std::invalid_argument("canonical form needs an even dimension");
  const int l = n / 2;
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
  j.topRightCorner(l, l).setIdentity();
  j.bottomLeftCorner(l, l) = -Eigen::MatrixXd::Identity(l, l);
  return j;
}

std::string to_string(StructureMode mode) {
  switch (mode) {
    case StructureMode::kFixed: return "fixed";
    case StructureMode::kConstant: return "constant";
    case StructureMode::kStateDependent: return "state_dependent";
  }
  return "fixed";
}

StructureMode structure_mode_from_string(const std::string& name) {
  if (name == "fixed") return StructureMode::kFixed;
  if (name == "constant") return StructureMode::kConstant;
  if (name == "state_dependent") return StructureMode::kStateDependent;
  throw ConfigError("unknown structure mode: " + name);
}

EntryPattern strictly_lower_pattern(int n) {
  EntryPattern p;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j) p.emplace_back(i, j);
  return p;
}

EntryPattern lower_pattern(int n) {
  EntryPattern p;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) p.emplace_back(i, j);
  return p;
}

EntryPattern dense_pattern(int rows, int cols) {
  EntryPattern p;
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) p.emplace_back(i, j);
  return p;
}

EntryPattern diagonal_pattern(const std::vector<int>& indices) {
  EntryPattern p;
  for (int i : indices) p.emplace_back(i, i);
  return p;
}

MatrixParam MatrixParam::make_fixed(Eigen::MatrixXd m) {
  MatrixParam p;
  p.mode = StructureMode::kFixed;
  p.fixed = std::move(m);
  return p;
}

MatrixParam MatrixParam::make_constant(EntryPattern pattern, Eigen::VectorXd coeffs) {
  if (coeffs.size() != static_cast<Eigen::Index>(pattern.size())) {
    throw std::invalid_argument("coefficient count does not match the entry pattern");
  }
  MatrixParam p;
  p.mode = StructureMode::kConstant;
  p.pattern = std::move(pattern);
  p.coeffs = std::move(coeffs);
  return p;
}

MatrixParam MatrixParam::make_state_dependent(EntryPattern pattern) {
  MatrixParam p;
  p.mode = StructureMode::kStateDependent;
  p.pattern = std::move(pattern);
  return p;
}

namespace {

void validate(const MatrixParam& p, MatrixRole role, int n, int m) {
  const int rows = n;
  const int cols = role == MatrixRole::kPort ? m : n;
  const char* name = role == MatrixRole::kInterconnection ? "J"
                     : role == MatrixRole::kDissipation   ? "R"
                                                          : "G";
  if (p.mode == StructureMode::kFixed) {
    if (p.fixed.rows() != rows || p.fixed.cols() != cols) {
      throw std::invalid_argument(std::string("fixed ") + name + " has the wrong shape");
    }
    if (role == MatrixRole::kInterconnection && (p.fixed + p.fixed.transpose()).cwiseAbs().maxCoeff() != 0.0) {
      throw std::invalid_argument("fixed J must be skew-symmetric");
    }
    if (role == MatrixRole::kDissipation) {
      if ((p.fixed - p.fixed.transpose()).cwiseAbs().maxCoeff() != 0.0) {
        throw std::invalid_argument("fixed R must be symmetric");
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(p.fixed);
      if (eig.eigenvalues().minCoeff() < -1e-12) {
        throw std::invalid_argument("fixed R must be positive semidefinite");
      }
    }
    return;
  }
  for (const auto& [i, j] : p.pattern) {
    const bool in_range = i >= 0 && i < rows && j >= 0 && j < cols;
    const bool shape_ok = role == MatrixRole::kInterconnection ? i > j
                          : role == MatrixRole::kDissipation   ? i >= j
                                                               : true;
    if (!in_range || !shape_ok) {
      throw std::invalid_argument(std::string("invalid free entry for ") + name);
    }
  }
}

}  // namespace

StructureParam::StructureParam(int n, int m, MatrixParam j, MatrixParam r, MatrixParam g,
                               std::optional<Mlp> net)
    : n_(n), m_(m), j_(std::move(j)), r_(std::move(r)), g_(std::move(g)), net_(std::move(net)) {
  if (n <= 0 || m < 0) throw std::invalid_argument("invalid structure dimensions");
  validate(j_, MatrixRole::kInterconnection, n, m);
  validate(r_, MatrixRole::kDissipation, n, m);
  validate(g_, MatrixRole::kPort, n, m);
  int needed = 0;
  for (const MatrixParam* p : {&j_, &r_, &g_}) {
    if (p->mode == StructureMode::kStateDependent) {
      needed = std::max(needed, p->offset + p->free_count());
    }
  }
  if (needed > 0) {
    if (!net_) throw std::invalid_argument("state-dependent structure needs a structure network");
    if (net_->input_dim() != n || net_->output_dim() < needed ||
        net_->output_activation() != OutputActivation::kIdentity) {
      throw std::invalid_argument("structure network has the wrong shape");
    }
  }
}

StructureParam StructureParam::with_state_network(int n, int m, MatrixParam j, MatrixParam r,
                                                  MatrixParam g, int hidden,
                                                  std::mt19937_64& rng) {
  int offset = 0;
  for (MatrixParam* p : {&j, &r, &g}) {
    if (p->mode == StructureMode::kStateDependent) {
      p->offset = offset;
      offset += p->free_count();
    }
  }
  std::optional<Mlp> net;
  if (offset > 0) net = Mlp::glorot({n, hidden, offset}, OutputActivation::kIdentity, rng);
  return StructureParam(n, m, std::move(j), std::move(r), std::move(g), std::move(net));
}

Eigen::VectorXd StructureParam::entries(const MatrixParam& p, const Eigen::VectorXd& x) const {
  if (p.mode == StructureMode::kConstant) return p.coeffs;
  return net_->forward(x).segment(p.offset, p.free_count());
}

Eigen::MatrixXd StructureParam::factor_j(const Eigen::VectorXd& x) const {
  if (j_.mode == StructureMode::kFixed) throw std::logic_error("fixed J has no factor");
  const Eigen::VectorXd e = entries(j_, x);
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n_, n_);
  for (std::size_t k = 0; k < j_.pattern.size(); ++k) {
    t(j_.pattern[k].first, j_.pattern[k].second) = e[static_cast<Eigen::Index>(k)];
  }
  return t;
}

Eigen::MatrixXd StructureParam::factor_r(const Eigen::VectorXd& x) const {
  if (r_.mode == StructureMode::kFixed) throw std::logic_error("fixed R has no factor");
  const Eigen::VectorXd e = entries(r_, x);
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n_, n_);
  for (std::size_t k = 0; k < r_.pattern.size(); ++k) {
    const auto [i, j] = r_.pattern[k];
    const double v = e[static_cast<Eigen::Index>(k)];
    t(i, j) = (i == j) ? softplus(v) : v;
  }
  return t;
}

Eigen::MatrixXd StructureParam::assemble_j(const Eigen::VectorXd& x) const {
  if (j_.mode == StructureMode::kFixed) return j_.fixed;
  const Eigen::MatrixXd t = factor_j(x);
  return t - t.transpose();
}

Eigen::MatrixXd StructureParam::assemble_r(const Eigen::VectorXd& x) const {
  if (r_.mode == StructureMode::kFixed) return r_.fixed;
  const Eigen::MatrixXd t = factor_r(x);
  return t * t.transpose();
}

Eigen::MatrixXd StructureParam::assemble_g(const Eigen::VectorXd& x) const {
  if (g_.mode == StructureMode::kFixed) return g_.fixed;
  const Eigen::VectorXd e = entries(g_, x);
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n_, m_);
  for (std::size_t k = 0; k < g_.pattern.size(); ++k) {
    g(g_.pattern[k].first, g_.pattern[k].second) = e[static_cast<Eigen::Index>(k)];
  }
  return g;
}

bool StructureParam::j_is_canonical() const {
  if (j_.mode != StructureMode::kFixed || n_ % 2 != 0) return false;
  return j_.fixed == canonical_interconnection(n_);
}

PHModel::PHModel(StructureParam structure, NeuralHamiltonian hamiltonian)
    : structure_(std::move(structure)), hamiltonian_(std::move(hamiltonian)) {
  if (hamiltonian_.dim() != structure_.state_dim()) {
    throw std::invalid_argument("Hamiltonian and structure dimensions differ");
  }
}

double PHModel::hamiltonian(const Eigen::VectorXd& x) const {
  check_state(x);
  return hamiltonian_.value(x);
}

Eigen::VectorXd PHModel::hamiltonian_grad(const Eigen::VectorXd& x) const {
  check_state(x);
  return hamiltonian_.grad(x);
}

Eigen::MatrixXd PHModel::interconnection(const Eigen::VectorXd& x) const {
  return structure_.assemble_j(x);
}

Eigen::MatrixXd PHModel::dissipation(const Eigen::VectorXd& x) const {
  return structure_.assemble_r(x);
}

Eigen::MatrixXd PHModel::port(const Eigen::VectorXd& x) const {
  return structure_.assemble_g(x);
}

bool positive_definite(const Eigen::MatrixXd& m, double threshold) {
  const Eigen::Index n = m.rows();
  if (m.cols() != n) return false;
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    double pivot = m(k, k) - l.row(k).head(k).squaredNorm();
    if (!(pivot > threshold)) return false;
    l(k, k) = std::sqrt(pivot);
    for (Eigen::Index i = k + 1; i < n; ++i) {
      l(i, k) = (m(i, k) - l.row(i).head(k).dot(l.row(k).head(k))) / l(k, k);
    }
  }
  return true;
}

}  // namespace phs
