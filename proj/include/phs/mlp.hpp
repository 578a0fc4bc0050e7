#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace phs {

enum class OutputActivation {
  kSoftplus,  // softplus(z) + kPositiveFloor, strictly positive
  kIdentity,
};

std::string to_string(OutputActivation activation);
OutputActivation output_activation_from_string(const std::string& name);

/// Smallest value a softplus-output network can return.
inline constexpr double kPositiveFloor = 1e-6;

/// Numerically stable softplus log(1 + e^z) and its derivative.
double softplus(double z);
double logistic(double z);

/// Fully connected network with tanh hidden layers.
///
/// widths = {input, hidden..., output}. Layer k maps widths[k] to
/// widths[k+1] as W_k a + b_k.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::vector<int> widths, OutputActivation output);

  /// Uniform Glorot initialization, zero biases.
  static Mlp glorot(std::vector<int> widths, OutputActivation output,
                    std::mt19937_64& rng);

  int input_dim() const { return widths_.front(); }
  int output_dim() const { return widths_.back(); }
  std::size_t layer_count() const { return weights_.size(); }
  const std::vector<int>& widths() const { return widths_; }
  OutputActivation output_activation() const { return output_; }

  std::vector<Eigen::MatrixXd>& weights() { return weights_; }
  const std::vector<Eigen::MatrixXd>& weights() const { return weights_; }
  std::vector<Eigen::VectorXd>& biases() { return biases_; }
  const std::vector<Eigen::VectorXd>& biases() const { return biases_; }

  std::size_t parameter_count() const;

  /// Full network output. Throws std::invalid_argument on dimension mismatch.
  Eigen::VectorXd forward(const Eigen::VectorXd& x) const;

  /// Scalar output, for networks with output width 1.
  double value(const Eigen::VectorXd& x) const;

  /// Gradient of value() with respect to the input.
  Eigen::VectorXd grad_x(const Eigen::VectorXd& x) const;

  /// value() and grad_x() from one forward pass.
  double value_and_grad(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const;

 private:
  void check_input(const Eigen::VectorXd& x) const;

  std::vector<int> widths_;
  OutputActivation output_ = OutputActivation::kIdentity;
  std::vector<Eigen::MatrixXd> weights_;
  std::vector<Eigen::VectorXd> biases_;
};

}  // namespace phs
