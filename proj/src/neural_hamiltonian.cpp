#include "phs/neural_hamiltonian.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace phs {

EquilibriumSet::EquilibriumSet(std::vector<Equilibrium> equilibria)
    : equilibria_(std::move(equilibria)) {
  if (equilibria_.empty()) throw std::invalid_argument("at least one equilibrium is required");
  const auto n = equilibria_.front().point.size();
  for (const auto& eq : equilibria_) {
    if (eq.point.size() != n || n == 0) {
      throw std::invalid_argument("equilibria must share a nonzero dimension");
    }
    if (!(eq.radius > 0.0)) throw std::invalid_argument("equilibrium radius must be positive");
    if (!eq.point.allFinite()) throw std::invalid_argument("equilibrium must be finite");
  }
  for (std::size_t i = 0; i < equilibria_.size(); ++i) {
    for (std::size_t j = i + 1; j < equilibria_.size(); ++j) {
      const double gap = (equilibria_[i].point - equilibria_[j].point).norm();
      if (!(gap > equilibria_[i].radius + equilibria_[j].radius)) {
        throw std::invalid_argument("activation balls of equilibria " + std::to_string(i) +
                                    " and " + std::to_string(j) + " overlap");
      }
    }
  }
}

EquilibriumSet EquilibriumSet::without(std::size_t i) const {
  if (size() < 2 || i >= size()) throw std::invalid_argument("cannot remove equilibrium");
  std::vector<Equilibrium> rest;
  for (std::size_t k = 0; k < size(); ++k) {
    if (k != i) rest.push_back(equilibria_[k]);
  }
  return EquilibriumSet(std::move(rest));
}

NeuralHamiltonian::NeuralHamiltonian(Mlp net, EquilibriumSet equilibria, int order,
                                     double delta, std::optional<Mlp> relaxation, bool gated)
    : net_(std::move(net)),
      equilibria_(std::move(equilibria)),
      order_(order),
      delta_(delta),
      relaxation_(std::move(relaxation)),
      gated_(gated) {
  if (net_.output_dim() != 1 || net_.output_activation() != OutputActivation::kSoftplus) {
    throw std::invalid_argument("Hamiltonian network must have a scalar softplus output");
  }
  if (equilibria_.dim() != net_.input_dim()) {
    throw std::invalid_argument("equilibrium dimension does not match the network input");
  }
  if (relaxation_) {
    if (!gated_) throw std::invalid_argument("relaxation requires a gated Hamiltonian");
    if (relaxation_->input_dim() != net_.input_dim() || relaxation_->output_dim() != 1 ||
        relaxation_->output_activation() != OutputActivation::kSoftplus) {
      throw std::invalid_argument("relaxation network must map the state to a positive scalar");
    }
  }
  steps_.reserve(equilibria_.size());
  for (const auto& eq : equilibria_.items()) steps_.emplace_back(order, eq.radius, delta);
}

Mlp& NeuralHamiltonian::relaxation_net() {
  if (!relaxation_) throw std::logic_error("relaxation is disabled");
  return *relaxation_;
}

const Mlp& NeuralHamiltonian::relaxation_net() const {
  if (!relaxation_) throw std::logic_error("relaxation is disabled");
  return *relaxation_;
}

std::optional<std::size_t> NeuralHamiltonian::active_equilibrium(const Eigen::VectorXd& x) const {
  for (std::size_t i = 0; i < equilibria_.size(); ++i) {
    const double r = (x - equilibria_[i].point).norm();
    if (sigma(r, steps_[i]) < steps_[i].sigma_b()) return i;
  }
  return std::nullopt;
}

std::optional<NeuralHamiltonian::Local> NeuralHamiltonian::local(const Eigen::VectorXd& x) const {
  if (!gated_) return std::nullopt;
  if (x.size() != dim()) throw std::invalid_argument("state has the wrong dimension");
  for (std::size_t i = 0; i < equilibria_.size(); ++i) {
    Eigen::VectorXd offset = x - equilibria_[i].point;
    const double r2 = offset.squaredNorm();
    const double s = std::sqrt(r2 + delta_ * delta_);
    const double sig = s - delta_;
    if (sig < steps_[i].sigma_b()) {
      return Local{i, sig, s, step(sig, steps_[i]), step_prime(sig, steps_[i]), std::move(offset)};
    }
  }
  return std::nullopt;
}

GateValue NeuralHamiltonian::gate(const Eigen::VectorXd& x) const {
  if (x.size() != dim()) throw std::invalid_argument("state has the wrong dimension");
  const auto loc = local(x);
  if (!loc) return GateValue{1.0, Eigen::VectorXd::Zero(dim())};
  return GateValue{loc->h, loc->offset * (loc->h_prime / loc->s)};
}

double NeuralHamiltonian::relaxation_factor(const std::optional<Local>& loc,
                                            Eigen::VectorXd* grad) const {
  if (!loc) {
    if (grad) *grad = Eigen::VectorXd::Zero(dim());
    return 0.0;
  }
  // S = (1 - h) sigma^2, grad S = [2 (1 - h) sigma - h' sigma^2] (x - x_eq) / s
  const double one_minus_h = 1.0 - loc->h;
  if (grad) {
    *grad = loc->offset *
            ((2.0 * one_minus_h * loc->sigma - loc->h_prime * loc->sigma * loc->sigma) / loc->s);
  }
  return one_minus_h * loc->sigma * loc->sigma;
}

double NeuralHamiltonian::relaxation_w(const Eigen::VectorXd& x, Eigen::VectorXd* grad) const {
  if (!relaxation_) throw std::logic_error("relaxation_w called with relaxation disabled");
  const auto loc = local(x);
  Eigen::VectorXd factor_grad;
  const double factor = relaxation_factor(loc, grad ? &factor_grad : nullptr);
  if (!grad) return relaxation_->value(x) * factor;
  Eigen::VectorXd net_grad;
  const double net_value = relaxation_->value_and_grad(x, net_grad);
  *grad = net_grad * factor + factor_grad * net_value;
  return net_value * factor;
}

double NeuralHamiltonian::value(const Eigen::VectorXd& x) const {
  const auto loc = local(x);
  if (!loc) return net_.value(x);
  double result = net_.value(x) * loc->h;
  if (relaxation_) {
    result += relaxation_->value(x) * relaxation_factor(loc, nullptr) * (1.0 - loc->h);
  }
  return result;
}

Eigen::VectorXd NeuralHamiltonian::grad(const Eigen::VectorXd& x) const {
  Eigen::VectorXd g;
  value_and_grad(x, g);
  return g;
}

double NeuralHamiltonian::value_and_grad(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const {
  const auto loc = local(x);
  Eigen::VectorXd nn_grad;
  const double nn = net_.value_and_grad(x, nn_grad);
  if (!loc) {
    grad = std::move(nn_grad);
    return nn;
  }
  const double gate_scale = loc->h_prime / loc->s;
  grad = nn_grad * loc->h + loc->offset * (nn * gate_scale);
  double result = nn * loc->h;
  if (relaxation_) {
    Eigen::VectorXd factor_grad;
    const double factor = relaxation_factor(loc, &factor_grad);
    Eigen::VectorXd w_net_grad;
    const double w_net = relaxation_->value_and_grad(x, w_net_grad);
    const double w = w_net * factor;
    const double one_minus_h = 1.0 - loc->h;
    grad += (w_net_grad * factor + factor_grad * w_net) * one_minus_h -
            loc->offset * (w * gate_scale);
    result += w * one_minus_h;
  }
  return result;
}

NeuralHamiltonian NeuralHamiltonian::without_equilibrium(std::size_t i) const {
  return NeuralHamiltonian(net_, equilibria_.without(i), order_, delta_, relaxation_, gated_);
}

}  // namespace phs
