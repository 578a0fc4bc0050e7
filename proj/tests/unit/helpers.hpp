#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "phs/neural_hamiltonian.hpp"
#include "phs/ph_model.hpp"
#include "phs/training.hpp"

namespace phs::test {

inline Eigen::VectorXd random_vector(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

inline Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                          const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd a = x, b = x;
    a[i] += h;
    b[i] -= h;
    g[i] = (f(a) - f(b)) / (2.0 * h);
  }
  return g;
}

inline double relative_error(const Eigen::VectorXd& got, const Eigen::VectorXd& want,
                             double floor = 1e-12) {
  return (got - want).norm() / std::max(want.norm(), floor);
}

// Random biases make the networks less symmetric than a plain Glorot draw.
inline void jitter_biases(Mlp& net, std::mt19937_64& rng, double scale = 0.3) {
  std::uniform_real_distribution<double> u(-scale, scale);
  for (auto& b : net.biases()) {
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = u(rng);
  }
}

struct ModelSpec {
  int n = 2;
  int m = 1;
  std::vector<int> hidden{8, 8};
  std::vector<Equilibrium> equilibria;  // empty: origin with radius 1
  bool relaxation = false;
  bool gated = true;
  StructureMode mode = StructureMode::kConstant;
  bool canonical_j = false;
  int order = 2;
  double delta = 1e-2;
};

inline PHModel make_model(const ModelSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int n = spec.n;
  std::vector<int> widths{n};
  widths.insert(widths.end(), spec.hidden.begin(), spec.hidden.end());
  widths.push_back(1);
  Mlp net = Mlp::glorot(widths, OutputActivation::kSoftplus, rng);
  jitter_biases(net, rng);
  std::optional<Mlp> relax;
  if (spec.relaxation) {
    relax = Mlp::glorot(widths, OutputActivation::kSoftplus, rng);
    jitter_biases(*relax, rng);
  }
  auto eqs = spec.equilibria;
  if (eqs.empty()) eqs.push_back(Equilibrium{Eigen::VectorXd::Zero(n), 1.0});

  auto coeffs = [&](const EntryPattern& p) { return random_vector(static_cast<int>(p.size()), rng, 0.8); };
  MatrixParam j, r, g;
  if (spec.canonical_j) {
    j = MatrixParam::make_fixed(canonical_interconnection(n));
  } else if (spec.mode == StructureMode::kStateDependent) {
    j = MatrixParam::make_state_dependent(strictly_lower_pattern(n));
  } else {
    const auto p = strictly_lower_pattern(n);
    j = MatrixParam::make_constant(p, coeffs(p));
  }
  if (spec.mode == StructureMode::kStateDependent) {
    r = MatrixParam::make_state_dependent(lower_pattern(n));
    g = MatrixParam::make_state_dependent(dense_pattern(n, spec.m));
  } else {
    const auto pr = lower_pattern(n);
    const auto pg = dense_pattern(n, spec.m);
    r = MatrixParam::make_constant(pr, coeffs(pr));
    g = MatrixParam::make_constant(pg, coeffs(pg));
  }
  StructureParam structure =
      StructureParam::with_state_network(n, spec.m, std::move(j), std::move(r), std::move(g), 6, rng);
  if (structure.has_net()) jitter_biases(structure.net(), rng);
  NeuralHamiltonian ham(std::move(net), EquilibriumSet(std::move(eqs)), spec.order, spec.delta,
                        std::move(relax), spec.gated);
  return PHModel(std::move(structure), std::move(ham));
}

// H = (q^2 + p^2) / 2 with J canonical, R = diag(0, gamma), G = e_2 (or none).
class Oscillator final : public PortHamiltonianSystem {
 public:
  explicit Oscillator(double gamma = 0.0, int inputs = 0) : gamma_(gamma), m_(inputs) {}
  int state_dim() const override { return 2; }
  int input_dim() const override { return m_; }
  double hamiltonian(const Eigen::VectorXd& x) const override { return 0.5 * x.squaredNorm(); }
  Eigen::VectorXd hamiltonian_grad(const Eigen::VectorXd& x) const override { return x; }
  Eigen::MatrixXd interconnection(const Eigen::VectorXd&) const override {
    return canonical_interconnection(2);
  }
  Eigen::MatrixXd dissipation(const Eigen::VectorXd&) const override {
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(2, 2);
    r(1, 1) = gamma_;
    return r;
  }
  Eigen::MatrixXd port(const Eigen::VectorXd&) const override {
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(2, m_);
    if (m_ > 0) g(1, 0) = 1.0;
    return g;
  }
  bool canonical() const override { return true; }

 private:
  double gamma_;
  int m_;
};

// Several short damped-oscillator trajectories inside the unit ball.
inline Dataset oscillator_dataset(int trajectories, int steps, double dt, std::uint64_t seed,
                                  double gamma = 0.3) {
  Oscillator sys(gamma, 1);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * 3.14159265358979);
  std::uniform_real_distribution<double> radius(0.2, 0.8);
  std::uniform_real_distribution<double> input(-0.3, 0.3);
  Dataset ds;
  ds.state_dim = 2;
  ds.input_dim = 1;
  ds.dt = dt;
  ds.source = "oscillator";
  ds.seed = seed;
  for (int t = 0; t < trajectories; ++t) {
    const std::size_t begin = ds.times.size();
    const double a = angle(rng), r = radius(rng);
    Eigen::VectorXd x(2);
    x << r * std::cos(a), r * std::sin(a);
    for (int k = 0; k <= steps; ++k) {
      Eigen::VectorXd u(1);
      u << input(rng);
      ds.times.push_back(k * dt);
      ds.states.push_back(x);
      ds.inputs.push_back(u);
      // RK4 by hand keeps this helper independent of the integrator module
      auto f = [&](const Eigen::VectorXd& s) { return sys.dynamics(s, u); };
      const Eigen::VectorXd k1 = f(x), k2 = f(x + 0.5 * dt * k1), k3 = f(x + 0.5 * dt * k2),
                            k4 = f(x + dt * k3);
      x = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    ds.segments.emplace_back(begin, ds.times.size());
  }
  return ds;
}

}  // namespace phs::test
