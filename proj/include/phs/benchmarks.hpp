#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "phs/neural_hamiltonian.hpp"
#include "phs/ph_model.hpp"
#include "phs/training.hpp"

namespace phs {

// ------------------------------------------------------------ Toda lattice

struct TodaConfig {
  int particles = 5;
  std::vector<double> damping;  // one per particle; empty means 0.5 each
  double pinning = 0.5;         // epsilon
  double dt = 0.1;
  double horizon = 1000.0;
  double input_amplitude = 1.0;

  void validate() const;
  std::vector<double> resolved_damping() const;
};

/// H = sum p_i^2 / 2 + sum_{i<l} e^(q_i - q_{i+1}) + e^(q_l) - q_1 - l
///     + eps (1 - cos q_1), with x = (q, p).
double toda_hamiltonian(const Eigen::VectorXd& x, const TodaConfig& cfg);
Eigen::VectorXd toda_grad(const Eigen::VectorXd& x, const TodaConfig& cfg);

/// Ground truth: canonical J, R = blkdiag(0, diag(gamma)), G = [0; e_1].
class TodaSystem final : public PortHamiltonianSystem {
 public:
  explicit TodaSystem(TodaConfig cfg);

  int state_dim() const override { return 2 * cfg_.particles; }
  int input_dim() const override { return 1; }
  double hamiltonian(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd hamiltonian_grad(const Eigen::VectorXd& x) const override;
  Eigen::MatrixXd interconnection(const Eigen::VectorXd& x) const override;
  Eigen::MatrixXd dissipation(const Eigen::VectorXd& x) const override;
  Eigen::MatrixXd port(const Eigen::VectorXd& x) const override;
  bool canonical() const override { return true; }

  const TodaConfig& config() const { return cfg_; }

 private:
  TodaConfig cfg_;
  Eigen::MatrixXd j_;
  Eigen::MatrixXd r_;
  Eigen::MatrixXd g_;
};

/// Euler simulation from x0 = 0 with piecewise-constant inputs drawn
/// uniformly from [-amplitude, amplitude].
Dataset gen_toda_data(const TodaConfig& cfg, std::uint64_t seed);

// ---------------------------------------------------------- double pendulum

struct PendulumConfig {
  double m1 = 2.0, m2 = 2.0;
  double l1 = 0.5, l2 = 0.5;
  double gamma1 = 0.5, gamma2 = 0.5;
  double gravity = 9.81;
  double p1_min = -10.0, p1_max = 10.0;
  double p2_min = -2.0, p2_max = 2.0;
  int mesh = 10;  // points per axis, endpoints included
  double horizon = 10.0;
  double dt = 0.05;

  void validate() const;
};

Eigen::Matrix2d pendulum_mass_matrix(const Eigen::Vector2d& q, const PendulumConfig& cfg);
double pendulum_potential(const Eigen::Vector2d& q, const PendulumConfig& cfg);
double pendulum_hamiltonian(const Eigen::VectorXd& x, const PendulumConfig& cfg);
Eigen::VectorXd pendulum_grad(const Eigen::VectorXd& x, const PendulumConfig& cfg);

/// Autonomous ground truth (no input ports).
class PendulumSystem final : public PortHamiltonianSystem {
 public:
  explicit PendulumSystem(PendulumConfig cfg);

  int state_dim() const override { return 4; }
  int input_dim() const override { return 0; }
  double hamiltonian(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd hamiltonian_grad(const Eigen::VectorXd& x) const override;
  Eigen::MatrixXd interconnection(const Eigen::VectorXd& x) const override;
  Eigen::MatrixXd dissipation(const Eigen::VectorXd& x) const override;
  Eigen::MatrixXd port(const Eigen::VectorXd& x) const override;
  bool canonical() const override { return true; }

  const PendulumConfig& config() const { return cfg_; }

 private:
  PendulumConfig cfg_;
};

/// One RK4 trajectory per mesh point p0, q0 = 0, in row-major mesh order
/// (p1 outer, p2 inner). Each trajectory is its own segment.
Dataset gen_pendulum_data(const PendulumConfig& cfg, std::uint64_t seed);

/// The nine stable equilibria {-2pi, 0, 2pi}^2 x {0}^2, theta_1 outer.
std::vector<Equilibrium> pendulum_equilibria(double radius);

// -------------------------------------------------------------- test inputs

enum class SignalKind { kPulse, kSinusoid };

SignalKind signal_kind_from_string(const std::string& name);

/// pulse: 0.5 on [5, 20) s, else 0. sinusoid: 0.5 sin(2 pi t / 10).
double test_signal(SignalKind kind, double t);

}  // namespace phs
