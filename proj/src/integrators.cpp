#include "phs/integrators.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>

#include "phs/errors.hpp"

namespace phs {

std::string to_string(Method method) {
  switch (method) {
    case Method::kEuler: return "euler";
    case Method::kSymplecticEuler: return "symplectic-euler";
    case Method::kRk4: return "rk4";
  }
  return "rk4";
}

Method method_from_string(const std::string& name) {
  if (name == "euler") return Method::kEuler;
  if (name == "symplectic-euler") return Method::kSymplecticEuler;
  if (name == "rk4") return Method::kRk4;
  throw ConfigError("unknown integrator: " + name);
}

Method default_training_method(const PortHamiltonianSystem& system) {
  return system.canonical() ? Method::kSymplecticEuler : Method::kRk4;
}

Eigen::VectorXd euler_step(const VectorField& f, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& u, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  return x + dt * f(x, u);
}

Eigen::VectorXd rk4_step(const VectorField& f, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& u, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  const Eigen::VectorXd k1 = f(x, u);
  const Eigen::VectorXd k2 = f(x + 0.5 * dt * k1, u);
  const Eigen::VectorXd k3 = f(x + 0.5 * dt * k2, u);
  const Eigen::VectorXd k4 = f(x + dt * k3, u);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Eigen::VectorXd symplectic_euler_step(const PortHamiltonianSystem& system,
                                      const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                      double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (!system.canonical()) {
    throw std::invalid_argument("symplectic Euler needs a canonical (q, p) partition");
  }
  const Eigen::Index l = x.size() / 2;
  Eigen::VectorXd next = x;
  next.tail(l) += dt * system.dynamics(x, u).tail(l);
  next.head(l) += dt * system.dynamics(next, u).head(l);
  return next;
}

Eigen::VectorXd integrate_step(const PortHamiltonianSystem& system, Method method,
                               const Eigen::VectorXd& x, const Eigen::VectorXd& u, double dt) {
  const VectorField f = [&system](const Eigen::VectorXd& s, const Eigen::VectorXd& in) {
    return system.dynamics(s, in);
  };
  switch (method) {
    case Method::kEuler: return euler_step(f, x, u, dt);
    case Method::kSymplecticEuler: return symplectic_euler_step(system, x, u, dt);
    case Method::kRk4: return rk4_step(f, x, u, dt);
  }
  throw std::logic_error("unreachable integrator");
}

void TimeGrid::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("time step must be positive");
  if (steps < 1) throw std::invalid_argument("time grid needs at least one step");
}

InputSignal zero_input(int m) {
  return [m](double) { return Eigen::VectorXd::Zero(m); };
}

Trajectory simulate(const PortHamiltonianSystem& system, const Eigen::VectorXd& x0,
                    const InputSignal& input, const TimeGrid& grid, Method method) {
  grid.validate();
  if (x0.size() != system.state_dim()) throw std::invalid_argument("x0 has the wrong dimension");
  if (!x0.allFinite()) throw std::invalid_argument("x0 must be finite");

  Trajectory traj;
  const std::size_t count = grid.steps + 1;
  traj.times.reserve(count);
  traj.states.reserve(count);
  traj.inputs.reserve(count);
  traj.outputs.reserve(count);
  traj.energy.reserve(count);

  Eigen::VectorXd x = x0;
  for (std::size_t k = 0; k < count; ++k) {
    const double t = grid.time(k);
    Eigen::VectorXd u = input(t);
    if (u.size() != system.input_dim()) throw std::invalid_argument("input signal has the wrong dimension");
    traj.times.push_back(t);
    traj.outputs.push_back(system.output(x));
    traj.energy.push_back(system.hamiltonian(x));
    traj.states.push_back(x);
    if (k + 1 < count) {
      x = integrate_step(system, method, x, u, grid.dt);
      if (!x.allFinite()) {
        throw NumericalError("simulation diverged at step " + std::to_string(k + 1), k + 1);
      }
    }
    traj.inputs.push_back(std::move(u));
  }
  return traj;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
  if (trajectory.size() == 0) return;
  const auto n = trajectory.states.front().size();
  const auto m = trajectory.inputs.front().size();
  const auto p = trajectory.outputs.front().size();
  out << "t";
  for (Eigen::Index i = 0; i < n; ++i) out << ",x" << i + 1;
  for (Eigen::Index i = 0; i < m; ++i) out << ",u" << i + 1;
  for (Eigen::Index i = 0; i < p; ++i) out << ",y" << i + 1;
  out << ",H\n";
  out << std::setprecision(17);
  for (std::size_t k = 0; k < trajectory.size(); ++k) {
    out << trajectory.times[k];
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << trajectory.states[k][i];
    for (Eigen::Index i = 0; i < m; ++i) out << ',' << trajectory.inputs[k][i];
    for (Eigen::Index i = 0; i < p; ++i) out << ',' << trajectory.outputs[k][i];
    out << ',' << trajectory.energy[k] << '\n';
  }
}

}  // namespace phs
