#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "phs/ph_model.hpp"

namespace phs {

enum class Method { kEuler, kSymplecticEuler, kRk4 };

std::string to_string(Method method);
Method method_from_string(const std::string& name);

/// Symplectic Euler for canonical systems, RK4 otherwise.
Method default_training_method(const PortHamiltonianSystem& system);

using VectorField =
    std::function<Eigen::VectorXd(const Eigen::VectorXd& x, const Eigen::VectorXd& u)>;

Eigen::VectorXd euler_step(const VectorField& f, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& u, double dt);

/// Classical RK4 with u held constant over the step.
Eigen::VectorXd rk4_step(const VectorField& f, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& u, double dt);

/// Semi-implicit Euler on x = (q, p): the momentum rows of the vector field
/// are applied at (q, p), then the position rows at (q, p_new). Dissipation
/// and input enter through the momentum update. Throws std::invalid_argument
/// when the system has no canonical partition.
Eigen::VectorXd symplectic_euler_step(const PortHamiltonianSystem& system,
                                      const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                      double dt);

/// One step of `method` on the system's dynamics.
Eigen::VectorXd integrate_step(const PortHamiltonianSystem& system, Method method,
                               const Eigen::VectorXd& x, const Eigen::VectorXd& u, double dt);

struct TimeGrid {
  double t0 = 0.0;
  double dt = 0.1;
  std::size_t steps = 1;

  void validate() const;
  double time(std::size_t k) const { return t0 + static_cast<double>(k) * dt; }
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::VectorXd> inputs;
  std::vector<Eigen::VectorXd> outputs;
  std::vector<double> energy;

  std::size_t size() const { return times.size(); }
};

using InputSignal = std::function<Eigen::VectorXd(double t)>;

/// Input signal that is identically zero with dimension m.
InputSignal zero_input(int m);

/// Simulates over `grid` with zero-order-hold inputs u(t_k). Logs state,
/// input, output and Hamiltonian at every grid point (steps + 1 samples).
/// Throws NumericalError carrying the step index on a non-finite state.
Trajectory simulate(const PortHamiltonianSystem& system, const Eigen::VectorXd& x0,
                    const InputSignal& input, const TimeGrid& grid, Method method);

/// CSV with header t,x1..xn,u1..um,y1..ym,H and 17 significant digits.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

}  // namespace phs
