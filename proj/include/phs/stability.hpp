#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "phs/neural_hamiltonian.hpp"
#include "phs/ph_model.hpp"

namespace phs {

struct EquilibriumCertificate {
  bool pass = false;
  double grad_norm = 0.0;       // ||grad H(x_eq)||
  double field_residual = 0.0;  // ||(J - R) grad H(x_eq)||
  bool asymptotic = false;      // R(x_eq) positive definite
};

EquilibriumCertificate check_equilibrium(const PortHamiltonianSystem& system,
                                         const Eigen::VectorXd& x_eq, double tol);

struct ProbeReport {
  std::size_t checks = 0;
  std::size_t value_failures = 0;     // H(x) <= H(x_eq)
  std::size_t gradient_failures = 0;  // grad H(x) == 0
  bool pass = false;
  std::string note;
};

/// Samples `samples_per_shell` uniformly distributed directions on each
/// sphere ||x - x_eq|| = r and checks H(x) > H(x_eq) and grad H(x) != 0.
ProbeReport strict_minimum_probe(const PortHamiltonianSystem& system, const Eigen::VectorXd& x_eq,
                                 const std::vector<double>& radii, std::size_t samples_per_shell,
                                 std::uint64_t seed);

/// beta(dx) = c_L h'(sigma) ||dx||_inf / (h(sigma) sqrt(||dx||^2 + delta^2)),
/// evaluated through h'/h = g/sigma. Returns +inf at x_eq and throws
/// std::domain_error when x is not strictly inside the activation ball.
double beta(const NeuralHamiltonian& ham, std::size_t eq, const Eigen::VectorXd& x, double c_l);

/// The same bound from h' and h directly; used to cross-check beta().
double beta_direct(const NeuralHamiltonian& ham, std::size_t eq, const Eigen::VectorXd& x,
                   double c_l);

/// Sample locations inside an activation ball: a uniform grid with
/// `resolution` points per axis (clipped to the ball) when n <= grid_max_dim,
/// otherwise `lhs_samples` Latin-hypercube points mapped radially into the
/// ball. The centre is always included.
struct BallSampling {
  int resolution = 21;
  int grid_max_dim = 4;
  std::size_t lhs_samples = 10000;
  std::uint64_t seed = 0;
};

std::vector<Eigen::VectorXd> ball_samples(const Eigen::VectorXd& center, double radius,
                                          const BallSampling& spec);

/// 0.99 * min NN_H over ball_samples().
double estimate_cL(const NeuralHamiltonian& ham, std::size_t eq, const BallSampling& spec);

struct RoaEstimate {
  std::size_t equilibrium = 0;
  double c_l = 0.0;
  double level = 0.0;         // c
  double hhat_eq = 0.0;       // H(x_eq)
  int resolution = 0;
  std::size_t sample_count = 0;
  bool asymptotic = false;    // R(x_eq) positive definite
  bool degenerate = false;    // no usable level above H(x_eq)
  std::vector<Eigen::VectorXd> members;
  std::vector<Eigen::VectorXd> non_members;
};

/// Marks every sample of the ball as inside or outside the gradient-bound
/// set and returns the largest level c such that every sample with
/// H <= c is a member. Points on the ball's boundary sphere are added as
/// non-members so the level set cannot leak out of the ball.
RoaEstimate roa_level_set(const PHModel& model, std::size_t eq, const BallSampling& spec);

/// Re-evaluates the membership inequality at every recorded member.
bool verify_membership(const PHModel& model, const RoaEstimate& estimate);

/// `count` random states in {H <= level} within the ball, found by scanning
/// rays from x_eq. Deterministic for a given seed.
std::vector<Eigen::VectorXd> sample_inside_level_set(const PHModel& model,
                                                     const RoaEstimate& estimate,
                                                     std::size_t count, std::uint64_t seed);

struct StartOutcome {
  Eigen::VectorXd x0;
  bool converged = false;
  double final_distance = 0.0;    // ||x_end - x_eq||
  double max_level_excess = 0.0;  // max_k H(x_k) - level, over the whole run
  double time = 0.0;              // simulated time until convergence or horizon
};

/// Autonomous RK4 run from x0 that stops once ||x - x_eq|| < tol or the
/// horizon is reached.
StartOutcome run_start(const PHModel& model, const RoaEstimate& estimate,
                       const Eigen::VectorXd& x0, double dt, double horizon, double tol);

}  // namespace phs
