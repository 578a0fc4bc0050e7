#include "phs/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include <boost/math/special_functions/erf.hpp>

#include "phs/errors.hpp"
#include "phs/integrators.hpp"
#include "phs/parallel.hpp"
#include "phs/smoothstep.hpp"

namespace phs {

EquilibriumCertificate check_equilibrium(const PortHamiltonianSystem& system,
                                         const Eigen::VectorXd& x_eq, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  EquilibriumCertificate cert;
  const Eigen::VectorXd grad = system.hamiltonian_grad(x_eq);
  const Eigen::MatrixXd r = system.dissipation(x_eq);
  cert.grad_norm = grad.norm();
  cert.field_residual = ((system.interconnection(x_eq) - r) * grad).norm();
  cert.pass = cert.grad_norm <= tol && cert.field_residual <= tol;
  cert.asymptotic = positive_definite(r);
  return cert;
}

namespace {

Eigen::VectorXd random_direction(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::VectorXd d(n);
  do {
    for (Eigen::Index i = 0; i < n; ++i) d[i] = normal(rng);
  } while (d.norm() == 0.0);
  return d / d.norm();
}

}  // namespace

ProbeReport strict_minimum_probe(const PortHamiltonianSystem& system, const Eigen::VectorXd& x_eq,
                                 const std::vector<double>& radii, std::size_t samples_per_shell,
                                 std::uint64_t seed) {
  ProbeReport report;
  std::mt19937_64 rng(seed);
  const double h_eq = system.hamiltonian(x_eq);
  for (double r : radii) {
    if (!(r > 0.0)) throw std::invalid_argument("probe radii must be positive");
    for (std::size_t k = 0; k < samples_per_shell; ++k) {
      const Eigen::VectorXd x = x_eq + r * random_direction(x_eq.size(), rng);
      ++report.checks;
      if (!(system.hamiltonian(x) > h_eq)) ++report.value_failures;
      if (!(system.hamiltonian_grad(x).norm() > 0.0)) ++report.gradient_failures;
    }
  }
  report.pass = report.checks > 0 && report.value_failures == 0 && report.gradient_failures == 0;
  report.note = "sampling evidence on finitely many shell points, not a proof";
  return report;
}

namespace {

struct BallPoint {
  Eigen::VectorXd offset;
  double r;
  double sigma;
  double s;
};

BallPoint ball_point(const NeuralHamiltonian& ham, std::size_t eq, const Eigen::VectorXd& x) {
  const StepParams& params = ham.step_params(eq);
  BallPoint bp;
  bp.offset = x - ham.equilibria()[eq].point;
  bp.r = bp.offset.norm();
  bp.sigma = sigma(bp.r, params);
  bp.s = std::sqrt(bp.r * bp.r + params.delta() * params.delta());
  if (bp.sigma >= params.sigma_b()) {
    throw std::domain_error("beta is only defined strictly inside the activation ball");
  }
  return bp;
}

}  // namespace

double beta(const NeuralHamiltonian& ham, std::size_t eq, const Eigen::VectorXd& x, double c_l) {
  const BallPoint bp = ball_point(ham, eq, x);
  if (bp.sigma <= 0.0) return std::numeric_limits<double>::infinity();
  const double g = g_func(bp.sigma, ham.step_params(eq));
  return c_l * (g / bp.sigma) * bp.offset.lpNorm<Eigen::Infinity>() / bp.s;
}

double beta_direct(const NeuralHamiltonian& ham, std::size_t eq, const Eigen::VectorXd& x,
                   double c_l) {
  const BallPoint bp = ball_point(ham, eq, x);
  if (bp.sigma <= 0.0) return std::numeric_limits<double>::infinity();
  const StepParams& params = ham.step_params(eq);
  return c_l * step_prime(bp.sigma, params) * bp.offset.lpNorm<Eigen::Infinity>() /
         (step(bp.sigma, params) * bp.s);
}

std::vector<Eigen::VectorXd> ball_samples(const Eigen::VectorXd& center, double radius,
                                          const BallSampling& spec) {
  const auto n = center.size();
  std::vector<Eigen::VectorXd> out;
  out.push_back(center);
  if (n <= spec.grid_max_dim) {
    if (spec.resolution < 3) throw std::invalid_argument("grid resolution must be at least 3");
    const int res = spec.resolution;
    std::vector<int> idx(static_cast<std::size_t>(n), 0);
    while (true) {
      Eigen::VectorXd offset(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        offset[i] = radius * (-1.0 + 2.0 * idx[static_cast<std::size_t>(i)] / (res - 1));
      }
      const double r = offset.norm();
      if (r <= radius && r > 0.0) out.push_back(center + offset);
      Eigen::Index d = 0;
      while (d < n && ++idx[static_cast<std::size_t>(d)] == res) idx[static_cast<std::size_t>(d++)] = 0;
      if (d == n) break;
    }
    return out;
  }

  // Latin hypercube in n + 1 dimensions: n Gaussian coordinates for the
  // direction (inverse CDF) and one uniform coordinate for the radius.
  const std::size_t count = spec.lhs_samples;
  if (count == 0) return out;
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> jitter(0.0, 1.0);
  const auto dims = static_cast<std::size_t>(n) + 1;
  std::vector<std::vector<double>> u(dims, std::vector<double>(count));
  for (std::size_t d = 0; d < dims; ++d) {
    std::vector<std::size_t> perm(count);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t k = 0; k < count; ++k) {
      double v = (static_cast<double>(perm[k]) + jitter(rng)) / static_cast<double>(count);
      if (v <= 0.0 || v >= 1.0) v = (static_cast<double>(perm[k]) + 0.5) / static_cast<double>(count);
      u[d][k] = v;
    }
  }
  for (std::size_t k = 0; k < count; ++k) {
    Eigen::VectorXd dir(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      dir[i] = std::sqrt(2.0) * boost::math::erf_inv(2.0 * u[static_cast<std::size_t>(i)][k] - 1.0);
    }
    const double norm = dir.norm();
    if (norm == 0.0) continue;
    out.push_back(center + (radius * u[dims - 1][k] / norm) * dir);
  }
  return out;
}

double estimate_cL(const NeuralHamiltonian& ham, std::size_t eq, const BallSampling& spec) {
  const auto& e = ham.equilibria()[eq];
  const auto samples = ball_samples(e.point, e.radius, spec);
  std::vector<double> values(samples.size());
  parallel_for(samples.size(), [&](std::size_t k) { values[k] = ham.nn_value(samples[k]); });
  return 0.99 * *std::min_element(values.begin(), values.end());
}

namespace {

bool is_member(const NeuralHamiltonian& ham, std::size_t eq, const Eigen::VectorXd& x,
               double c_l) {
  const auto& e = ham.equilibria()[eq];
  const Eigen::VectorXd offset = x - e.point;
  if (offset.norm() == 0.0) return true;
  if (sigma(offset.norm(), ham.step_params(eq)) >= ham.step_params(eq).sigma_b()) return false;
  return ham.nn_grad(x).lpNorm<Eigen::Infinity>() < beta(ham, eq, x, c_l);
}

}  // namespace

RoaEstimate roa_level_set(const PHModel& model, std::size_t eq, const BallSampling& spec) {
  const NeuralHamiltonian& ham = model.neural_hamiltonian();
  if (eq >= ham.equilibria().size()) throw std::out_of_range("equilibrium index out of range");
  const auto& e = ham.equilibria()[eq];

  RoaEstimate est;
  est.equilibrium = eq;
  est.resolution = e.point.size() <= spec.grid_max_dim ? spec.resolution : 0;
  est.asymptotic = positive_definite(model.dissipation(e.point));
  est.hhat_eq = model.hamiltonian(e.point);

  const auto samples = ball_samples(e.point, e.radius, spec);
  est.sample_count = samples.size();
  std::vector<double> nn(samples.size());
  parallel_for(samples.size(), [&](std::size_t k) { nn[k] = ham.nn_value(samples[k]); });
  est.c_l = 0.99 * *std::min_element(nn.begin(), nn.end());

  std::vector<char> member(samples.size());
  std::vector<double> level(samples.size());
  parallel_for(samples.size(), [&](std::size_t k) {
    member[k] = is_member(ham, eq, samples[k], est.c_l) ? 1 : 0;
    level[k] = model.hamiltonian(samples[k]);
  });

  // Boundary sphere: beta vanishes there, so these are never members.
  std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
  const std::size_t sphere = 200 * static_cast<std::size_t>(e.point.size());
  double lowest_outside = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < sphere; ++k) {
    const Eigen::VectorXd x = e.point + e.radius * random_direction(e.point.size(), rng);
    lowest_outside = std::min(lowest_outside, model.hamiltonian(x));
    est.non_members.push_back(x);
  }
  for (std::size_t k = 0; k < samples.size(); ++k) {
    if (member[k]) {
      est.members.push_back(samples[k]);
    } else {
      lowest_outside = std::min(lowest_outside, level[k]);
      est.non_members.push_back(samples[k]);
    }
  }

  est.level = std::nextafter(lowest_outside, -std::numeric_limits<double>::infinity());
  if (!(est.level > est.hhat_eq)) {
    est.level = est.hhat_eq;
    est.degenerate = true;
  }
  return est;
}

bool verify_membership(const PHModel& model, const RoaEstimate& estimate) {
  const auto& ham = model.neural_hamiltonian();
  return std::all_of(estimate.members.begin(), estimate.members.end(), [&](const auto& x) {
    return is_member(ham, estimate.equilibrium, x, estimate.c_l);
  });
}

std::vector<Eigen::VectorXd> sample_inside_level_set(const PHModel& model,
                                                     const RoaEstimate& estimate,
                                                     std::size_t count, std::uint64_t seed) {
  const auto& e = model.neural_hamiltonian().equilibria()[estimate.equilibrium];
  std::vector<Eigen::VectorXd> out;
  if (estimate.degenerate) return out;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> fraction(0.3, 0.95);
  constexpr int kScan = 400;
  std::size_t attempts = 0;
  while (out.size() < count && attempts++ < 100 * count) {
    const Eigen::VectorXd dir = random_direction(e.point.size(), rng);
    double reach = 0.0;
    for (int k = 1; k <= kScan; ++k) {
      const double t = e.radius * k / kScan;
      if (model.hamiltonian(e.point + t * dir) > estimate.level) break;
      reach = t;
    }
    if (reach <= 0.0) continue;
    const Eigen::VectorXd x = e.point + fraction(rng) * reach * dir;
    if (model.hamiltonian(x) <= estimate.level) out.push_back(x);
  }
  return out;
}

StartOutcome run_start(const PHModel& model, const RoaEstimate& estimate,
                       const Eigen::VectorXd& x0, double dt, double horizon, double tol) {
  const Eigen::VectorXd& x_eq = model.neural_hamiltonian().equilibria()[estimate.equilibrium].point;
  const Eigen::VectorXd u = Eigen::VectorXd::Zero(model.input_dim());
  StartOutcome out;
  out.x0 = x0;
  Eigen::VectorXd x = x0;
  out.max_level_excess = model.hamiltonian(x) - estimate.level;
  const auto steps = static_cast<std::size_t>(std::ceil(horizon / dt));
  std::size_t k = 0;
  while ((x - x_eq).norm() >= tol && k < steps) {
    x = integrate_step(model, Method::kRk4, x, u, dt);
    ++k;
    if (!x.allFinite()) throw NumericalError("start diverged", k);
    out.max_level_excess = std::max(out.max_level_excess, model.hamiltonian(x) - estimate.level);
  }
  out.final_distance = (x - x_eq).norm();
  out.converged = out.final_distance < tol;
  out.time = static_cast<double>(k) * dt;
  return out;
}

}  // namespace phs
