#include "phs/mlp.hpp"

#include <cmath>
#include <stdexcept>

#include "phs/errors.hpp"

namespace phs {

std::string to_string(OutputActivation activation) {
  switch (activation) {
    case OutputActivation::kSoftplus: return "softplus";
    case OutputActivation::kIdentity: return "identity";
  }
  return "identity";
}

OutputActivation output_activation_from_string(const std::string& name) {
  if (name == "softplus") return OutputActivation::kSoftplus;
  if (name == "identity") return OutputActivation::kIdentity;
  throw ConfigError("unknown output activation: " + name);
}

double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Mlp::Mlp(std::vector<int> widths, OutputActivation output)
    : widths_(std::move(widths)), output_(output) {
  if (widths_.size() < 2) throw std::invalid_argument("mlp needs at least two widths");
  for (int w : widths_) {
    if (w <= 0) throw std::invalid_argument("mlp widths must be positive");
  }
  if (output_ == OutputActivation::kSoftplus && widths_.back() != 1) {
    throw std::invalid_argument("softplus output is only supported for scalar networks");
  }
  for (std::size_t k = 0; k + 1 < widths_.size(); ++k) {
    weights_.emplace_back(Eigen::MatrixXd::Zero(widths_[k + 1], widths_[k]));
    biases_.emplace_back(Eigen::VectorXd::Zero(widths_[k + 1]));
  }
}

Mlp Mlp::glorot(std::vector<int> widths, OutputActivation output, std::mt19937_64& rng) {
  Mlp net(std::move(widths), output);
  for (auto& w : net.weights_) {
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = dist(rng);
    }
  }
  return net;
}

std::size_t Mlp::parameter_count() const {
  std::size_t count = 0;
  for (std::size_t k = 0; k < weights_.size(); ++k) {
    count += static_cast<std::size_t>(weights_[k].size() + biases_[k].size());
  }
  return count;
}

void Mlp::check_input(const Eigen::VectorXd& x) const {
  if (x.size() != input_dim()) {
    throw std::invalid_argument("mlp input has dimension " + std::to_string(x.size()) +
                                ", expected " + std::to_string(input_dim()));
  }
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& x) const {
  check_input(x);
  Eigen::VectorXd a = x;
  const std::size_t last = weights_.size() - 1;
  for (std::size_t k = 0; k < last; ++k) {
    a = (weights_[k] * a + biases_[k]).array().tanh().matrix();
  }
  Eigen::VectorXd z = weights_[last] * a + biases_[last];
  if (output_ == OutputActivation::kSoftplus) {
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = softplus(z[i]) + kPositiveFloor;
  }
  return z;
}

double Mlp::value(const Eigen::VectorXd& x) const {
  if (output_dim() != 1) throw std::logic_error("mlp value() needs a scalar output");
  return forward(x)[0];
}

Eigen::VectorXd Mlp::grad_x(const Eigen::VectorXd& x) const {
  Eigen::VectorXd grad;
  value_and_grad(x, grad);
  return grad;
}

double Mlp::value_and_grad(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const {
  check_input(x);
  if (output_dim() != 1) throw std::logic_error("mlp gradient needs a scalar output");
  const std::size_t last = weights_.size() - 1;
  std::vector<Eigen::VectorXd> activations;
  activations.reserve(last);
  Eigen::VectorXd a = x;
  for (std::size_t k = 0; k < last; ++k) {
    a = (weights_[k] * a + biases_[k]).array().tanh().matrix();
    activations.push_back(a);
  }
  const double z = weights_[last].row(0).dot(a) + biases_[last][0];
  double out = z;
  double dout = 1.0;
  if (output_ == OutputActivation::kSoftplus) {
    out = softplus(z) + kPositiveFloor;
    dout = logistic(z);
  }
  Eigen::VectorXd back = weights_[last].row(0).transpose() * dout;
  for (std::size_t k = last; k-- > 0;) {
    back.array() *= 1.0 - activations[k].array().square();
    back = weights_[k].transpose() * back;
  }
  grad = std::move(back);
  return out;
}

}  // namespace phs
