#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "phs/mlp.hpp"
#include "phs/smoothstep.hpp"

namespace phs {

struct Equilibrium {
  Eigen::VectorXd point;
  double radius = 1.0;  // activation radius b_i
};

/// Declared equilibria with pairwise disjoint activation balls.
class EquilibriumSet {
 public:
  EquilibriumSet() = default;
  /// Throws std::invalid_argument if empty, dimensions differ, a radius is
  /// not positive, or two balls overlap (||x_i - x_j|| <= b_i + b_j).
  explicit EquilibriumSet(std::vector<Equilibrium> equilibria);

  std::size_t size() const { return equilibria_.size(); }
  int dim() const { return static_cast<int>(equilibria_.front().point.size()); }
  const Equilibrium& operator[](std::size_t i) const { return equilibria_[i]; }
  const std::vector<Equilibrium>& items() const { return equilibria_; }

  /// EquilibriumSet without entry i (requires size() > 1).
  EquilibriumSet without(std::size_t i) const;

 private:
  std::vector<Equilibrium> equilibria_;
};

struct GateValue {
  double value = 1.0;    // h_Sigma(x)
  Eigen::VectorXd grad;  // grad_x h_Sigma(x)
};

/// Gated neural Hamiltonian
///
///   H(x) = NN_H(x) h_Sigma(x) [+ w(x) (1 - h_Sigma(x))],
///   h_Sigma = sum_i h_i(sigma_i) - n_eq + 1,
///
/// with optional relaxation w(x) = NN_w(x) sum_i (1 - h_i) sigma_i^2.
/// Because the activation balls are disjoint at most one h_i differs from 1
/// at any x, so only that term is evaluated; this keeps evaluation inside a
/// ball bitwise independent of the other equilibria.
///
/// An ungated instance (gated() == false) is the plain positive network used
/// by the penalty baseline; its equilibria are only consulted by the penalty.
class NeuralHamiltonian {
 public:
  NeuralHamiltonian(Mlp net, EquilibriumSet equilibria, int order, double delta,
                    std::optional<Mlp> relaxation = std::nullopt, bool gated = true);

  int dim() const { return net_.input_dim(); }
  bool gated() const { return gated_; }
  bool relaxed() const { return relaxation_.has_value(); }
  int order() const { return order_; }
  double delta() const { return delta_; }

  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }
  Mlp& relaxation_net();
  const Mlp& relaxation_net() const;
  const EquilibriumSet& equilibria() const { return equilibria_; }
  const StepParams& step_params(std::size_t i) const { return steps_[i]; }

  double nn_value(const Eigen::VectorXd& x) const { return net_.value(x); }
  Eigen::VectorXd nn_grad(const Eigen::VectorXd& x) const { return net_.grad_x(x); }

  /// h_Sigma and its gradient. Equals 1 (zero gradient) for ungated models.
  GateValue gate(const Eigen::VectorXd& x) const;

  double value(const Eigen::VectorXd& x) const;
  Eigen::VectorXd grad(const Eigen::VectorXd& x) const;
  double value_and_grad(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const;

  /// w(x) and its gradient. Throws std::logic_error when relaxation is off.
  double relaxation_w(const Eigen::VectorXd& x, Eigen::VectorXd* grad = nullptr) const;

  /// Index of the equilibrium whose ball contains x, if any.
  std::optional<std::size_t> active_equilibrium(const Eigen::VectorXd& x) const;

  /// Same model with equilibrium i removed (used by the locality checks).
  NeuralHamiltonian without_equilibrium(std::size_t i) const;

 private:
  struct Local {
    std::size_t index;
    double sigma;
    double s;          // sqrt(r^2 + delta^2)
    double h;
    double h_prime;
    Eigen::VectorXd offset;  // x - x_eq
  };
  std::optional<Local> local(const Eigen::VectorXd& x) const;
  double relaxation_factor(const std::optional<Local>& loc, Eigen::VectorXd* grad) const;

  Mlp net_;
  EquilibriumSet equilibria_;
  int order_;
  double delta_;
  std::vector<StepParams> steps_;
  std::optional<Mlp> relaxation_;
  bool gated_;
};

}  // namespace phs
