#include "phs/benchmarks.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "phs/errors.hpp"
#include "phs/integrators.hpp"
#include "phs/parallel.hpp"

namespace phs {

namespace {

void check_dim(const Eigen::VectorXd& x, Eigen::Index n) {
  if (x.size() != n) {
    throw std::invalid_argument("state has dimension " + std::to_string(x.size()) +
                                ", expected " + std::to_string(n));
  }
}

Eigen::MatrixXd blockdiag_momentum(const std::vector<double>& gamma) {
  const auto l = static_cast<Eigen::Index>(gamma.size());
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(2 * l, 2 * l);
  for (Eigen::Index i = 0; i < l; ++i) r(l + i, l + i) = gamma[static_cast<std::size_t>(i)];
  return r;
}

std::size_t step_count(double horizon, double dt) {
  const double steps = std::round(horizon / dt);
  if (!(steps >= 1.0) || std::abs(steps * dt - horizon) > 1e-9 * horizon) {
    throw ConfigError("horizon must be a positive multiple of dt");
  }
  return static_cast<std::size_t>(steps);
}

}  // namespace

// ------------------------------------------------------------------- Toda

void TodaConfig::validate() const {
  if (particles < 2) throw ConfigError("Toda lattice needs at least two particles");
  if (!damping.empty() && static_cast<int>(damping.size()) != particles) {
    throw ConfigError("Toda damping needs one value per particle");
  }
  for (double g : damping) {
    if (!(g >= 0.0)) throw ConfigError("Toda damping must be nonnegative");
  }
  if (!(pinning > 0.0)) throw ConfigError("Toda pinning strength must be positive");
  if (!(dt > 0.0) || !(horizon > 0.0)) throw ConfigError("Toda dt and horizon must be positive");
  if (!(input_amplitude >= 0.0)) throw ConfigError("input amplitude must be nonnegative");
}

std::vector<double> TodaConfig::resolved_damping() const {
  if (damping.empty()) return std::vector<double>(static_cast<std::size_t>(particles), 0.5);
  return damping;
}

double toda_hamiltonian(const Eigen::VectorXd& x, const TodaConfig& cfg) {
  const Eigen::Index l = cfg.particles;
  check_dim(x, 2 * l);
  const auto q = x.head(l);
  const auto p = x.tail(l);
  double h = 0.5 * p.squaredNorm();
  for (Eigen::Index i = 0; i + 1 < l; ++i) h += std::exp(q[i] - q[i + 1]);
  h += std::exp(q[l - 1]) - q[0] - static_cast<double>(l) + cfg.pinning * (1.0 - std::cos(q[0]));
  return h;
}

Eigen::VectorXd toda_grad(const Eigen::VectorXd& x, const TodaConfig& cfg) {
  const Eigen::Index l = cfg.particles;
  check_dim(x, 2 * l);
  Eigen::VectorXd g(2 * l);
  g.head(l).setZero();
  for (Eigen::Index i = 0; i + 1 < l; ++i) {
    const double e = std::exp(x[i] - x[i + 1]);
    g[i] += e;
    g[i + 1] -= e;
  }
  g[l - 1] += std::exp(x[l - 1]);
  g[0] += -1.0 + cfg.pinning * std::sin(x[0]);
  g.tail(l) = x.tail(l);
  return g;
}

TodaSystem::TodaSystem(TodaConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  const int n = 2 * cfg_.particles;
  j_ = canonical_interconnection(n);
  r_ = blockdiag_momentum(cfg_.resolved_damping());
  g_ = Eigen::MatrixXd::Zero(n, 1);
  g_(cfg_.particles, 0) = 1.0;
}

double TodaSystem::hamiltonian(const Eigen::VectorXd& x) const { return toda_hamiltonian(x, cfg_); }
Eigen::VectorXd TodaSystem::hamiltonian_grad(const Eigen::VectorXd& x) const {
  return toda_grad(x, cfg_);
}
Eigen::MatrixXd TodaSystem::interconnection(const Eigen::VectorXd&) const { return j_; }
Eigen::MatrixXd TodaSystem::dissipation(const Eigen::VectorXd&) const { return r_; }
Eigen::MatrixXd TodaSystem::port(const Eigen::VectorXd&) const { return g_; }

Dataset gen_toda_data(const TodaConfig& cfg, std::uint64_t seed) {
  const TodaSystem system(cfg);
  const std::size_t steps = step_count(cfg.horizon, cfg.dt);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> draw(-cfg.input_amplitude, cfg.input_amplitude);

  Dataset ds;
  ds.state_dim = system.state_dim();
  ds.input_dim = 1;
  ds.dt = cfg.dt;
  ds.source = "toda";
  ds.seed = seed;
  ds.times.reserve(steps + 1);
  ds.states.reserve(steps + 1);
  ds.inputs.reserve(steps + 1);

  Eigen::VectorXd x = Eigen::VectorXd::Zero(system.state_dim());
  for (std::size_t k = 0; k <= steps; ++k) {
    Eigen::VectorXd u(1);
    u[0] = draw(rng);
    ds.times.push_back(static_cast<double>(k) * cfg.dt);
    ds.states.push_back(x);
    ds.inputs.push_back(u);
    if (k < steps) {
      x = integrate_step(system, Method::kEuler, x, u, cfg.dt);
      if (!x.allFinite()) throw NumericalError("Toda data generation diverged", k + 1);
    }
  }
  ds.segments.emplace_back(0, ds.times.size());
  return ds;
}

// --------------------------------------------------------------- pendulum

void PendulumConfig::validate() const {
  if (!(m1 > 0.0 && m2 > 0.0 && l1 > 0.0 && l2 > 0.0)) {
    throw ConfigError("pendulum masses and lengths must be positive");
  }
  if (!(gamma1 >= 0.0 && gamma2 >= 0.0)) throw ConfigError("pendulum damping must be nonnegative");
  if (!(gravity > 0.0)) throw ConfigError("gravity must be positive");
  if (mesh < 1) throw ConfigError("pendulum mesh needs at least one point per axis");
  if (!(p1_max >= p1_min && p2_max >= p2_min)) throw ConfigError("pendulum mesh bounds are reversed");
  if (!(dt > 0.0) || !(horizon > 0.0)) throw ConfigError("pendulum dt and horizon must be positive");
}

Eigen::Matrix2d pendulum_mass_matrix(const Eigen::Vector2d& q, const PendulumConfig& cfg) {
  const double c = cfg.m2 * cfg.l1 * cfg.l2 * std::cos(q[0] - q[1]);
  Eigen::Matrix2d m;
  m << (cfg.m1 + cfg.m2) * cfg.l1 * cfg.l1, c, c, cfg.m2 * cfg.l2 * cfg.l2;
  return m;
}

double pendulum_potential(const Eigen::Vector2d& q, const PendulumConfig& cfg) {
  return -(cfg.m1 + cfg.m2) * cfg.gravity * cfg.l1 * std::cos(q[0]) -
         cfg.m2 * cfg.gravity * cfg.l2 * std::cos(q[1]);
}

namespace {

Eigen::Matrix2d inverse_mass(const Eigen::Vector2d& q, const PendulumConfig& cfg) {
  const Eigen::Matrix2d m = pendulum_mass_matrix(q, cfg);
  const double det = m.determinant();
  if (!(det > 1e-14 * m.squaredNorm())) throw std::domain_error("pendulum mass matrix is singular");
  return m.inverse();
}

}  // namespace

double pendulum_hamiltonian(const Eigen::VectorXd& x, const PendulumConfig& cfg) {
  check_dim(x, 4);
  const Eigen::Vector2d q = x.head<2>();
  const Eigen::Vector2d p = x.tail<2>();
  return 0.5 * p.dot(inverse_mass(q, cfg) * p) + pendulum_potential(q, cfg);
}

Eigen::VectorXd pendulum_grad(const Eigen::VectorXd& x, const PendulumConfig& cfg) {
  check_dim(x, 4);
  const Eigen::Vector2d q = x.head<2>();
  const Eigen::Vector2d p = x.tail<2>();
  const Eigen::Vector2d v = inverse_mass(q, cfg) * p;  // M^-1 p
  // dM/dtheta_1 = -dM/dtheta_2 = [[0, -s], [-s, 0]] with s = m2 l1 l2 sin(theta_1 - theta_2)
  const double s = cfg.m2 * cfg.l1 * cfg.l2 * std::sin(q[0] - q[1]);
  const double quad = -2.0 * s * v[0] * v[1];  // v^T dM/dtheta_1 v
  Eigen::VectorXd g(4);
  g[0] = -0.5 * quad + (cfg.m1 + cfg.m2) * cfg.gravity * cfg.l1 * std::sin(q[0]);
  g[1] = 0.5 * quad + cfg.m2 * cfg.gravity * cfg.l2 * std::sin(q[1]);
  g.tail<2>() = v;
  return g;
}

PendulumSystem::PendulumSystem(PendulumConfig cfg) : cfg_(cfg) { cfg_.validate(); }

double PendulumSystem::hamiltonian(const Eigen::VectorXd& x) const {
  return pendulum_hamiltonian(x, cfg_);
}
Eigen::VectorXd PendulumSystem::hamiltonian_grad(const Eigen::VectorXd& x) const {
  return pendulum_grad(x, cfg_);
}
Eigen::MatrixXd PendulumSystem::interconnection(const Eigen::VectorXd&) const {
  return canonical_interconnection(4);
}
Eigen::MatrixXd PendulumSystem::dissipation(const Eigen::VectorXd&) const {
  return blockdiag_momentum({cfg_.gamma1, cfg_.gamma2});
}
Eigen::MatrixXd PendulumSystem::port(const Eigen::VectorXd&) const {
  return Eigen::MatrixXd::Zero(4, 0);
}

Dataset gen_pendulum_data(const PendulumConfig& cfg, std::uint64_t seed) {
  const PendulumSystem system(cfg);
  const std::size_t steps = step_count(cfg.horizon, cfg.dt);
  const auto axis = [&](double lo, double hi, int i) {
    return cfg.mesh == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * i / (cfg.mesh - 1);
  };
  const std::size_t count = static_cast<std::size_t>(cfg.mesh) * static_cast<std::size_t>(cfg.mesh);
  std::vector<Trajectory> runs(count);
  // Autonomous and deterministic, so the seed is only recorded.
  parallel_for(count, [&](std::size_t k) {
    const int i = static_cast<int>(k) / cfg.mesh;
    const int j = static_cast<int>(k) % cfg.mesh;
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(4);
    x0[2] = axis(cfg.p1_min, cfg.p1_max, i);
    x0[3] = axis(cfg.p2_min, cfg.p2_max, j);
    runs[k] = simulate(system, x0, zero_input(0), TimeGrid{0.0, cfg.dt, steps}, Method::kRk4);
  });

  Dataset ds;
  ds.state_dim = 4;
  ds.input_dim = 0;
  ds.dt = cfg.dt;
  ds.source = "pendulum";
  ds.seed = seed;
  for (const auto& run : runs) {
    const std::size_t begin = ds.times.size();
    ds.times.insert(ds.times.end(), run.times.begin(), run.times.end());
    ds.states.insert(ds.states.end(), run.states.begin(), run.states.end());
    ds.inputs.insert(ds.inputs.end(), run.inputs.begin(), run.inputs.end());
    ds.segments.emplace_back(begin, ds.times.size());
  }
  return ds;
}

std::vector<Equilibrium> pendulum_equilibria(double radius) {
  const double two_pi = 2.0 * std::numbers::pi;
  std::vector<Equilibrium> out;
  for (double a : {-two_pi, 0.0, two_pi}) {
    for (double b : {-two_pi, 0.0, two_pi}) {
      Eigen::VectorXd x = Eigen::VectorXd::Zero(4);
      x[0] = a;
      x[1] = b;
      out.push_back(Equilibrium{x, radius});
    }
  }
  return out;
}

// ------------------------------------------------------------ test inputs

SignalKind signal_kind_from_string(const std::string& name) {
  if (name == "pulse") return SignalKind::kPulse;
  if (name == "sinusoid") return SignalKind::kSinusoid;
  throw ConfigError("unknown test signal: " + name);
}

double test_signal(SignalKind kind, double t) {
  switch (kind) {
    case SignalKind::kPulse: return (t >= 5.0 && t < 20.0) ? 0.5 : 0.0;
    case SignalKind::kSinusoid: return 0.5 * std::sin(2.0 * std::numbers::pi * t / 10.0);
  }
  throw std::logic_error("unreachable signal kind");
}

}  // namespace phs
