// Runs every acceptance criterion at its stated tolerance and prints one
// PASS/FAIL line per criterion, followed by indented details. Exits 1 when
// any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "phs/benchmarks.hpp"
#include "phs/cli.hpp"
#include "phs/integrators.hpp"
#include "phs/serialization.hpp"
#include "phs/smoothstep.hpp"
#include "phs/stability.hpp"
#include "phs/training.hpp"

#ifndef PHS_SOURCE_DIR
#define PHS_SOURCE_DIR "."
#endif

using namespace phs;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Verdict {
  bool pass = true;
  std::vector<std::string> details;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    details.push_back(std::string(ok ? "ok    " : "FAIL  ") + what);
  }
  void note(const std::string& what) { details.push_back("      " + what); }
};

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(4) << v;
  return s.str();
}

Eigen::VectorXd random_vector(int n, std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f,
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

Json config_file(const std::string& name) {
  return read_json_file(std::string(PHS_SOURCE_DIR) + "/configs/" + name);
}

// Random model from a model block, with jittered biases so the Hamiltonian
// network is not symmetric about the equilibria.
PHModel random_model(Json model_cfg, int n, int m, std::uint64_t seed, bool relaxation) {
  model_cfg["relaxation"] = relaxation;
  std::mt19937_64 rng(seed);
  PHModel model = build_model(model_cfg, n, m, rng);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (auto& b : model.neural_hamiltonian().net().biases()) {
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = u(rng);
  }
  return model;
}

// ------------------------------------------------------------ experiments

struct TodaRun {
  PHModel gated;
  PHModel baseline;
  double gated_initial = 0.0, gated_best = 0.0;
  double gated_seconds = 0.0, baseline_seconds = 0.0;
  int epochs = 0;
  Json pulse, sinusoid, baseline_pulse, baseline_sinusoid;
};

double best_loss(const FitResult& r) {
  return r.best_epoch == 0 ? r.initial_loss : r.history[r.best_epoch - 1];
}

TodaRun run_toda() {
  Json gen = config_file("toda_gen.json");
  Json train = config_file("toda_train.json");
  const TodaConfig tc = toda_config_from_json(gen["toda"]);
  Dataset ds = gen_toda_data(tc, gen.value("seed", std::uint64_t{0}));
  ds = ds.truncated(gen.at("max_transitions").get<std::size_t>());

  TrainConfig cfg = train_config_from_json(train["train"]);
  std::mt19937_64 rng(cfg.seed);
  Json model_cfg = train["model"];
  const PHModel initial = build_model(model_cfg, ds.state_dim, ds.input_dim, rng);

  auto t0 = Clock::now();
  const FitResult g = fit(initial, ds, cfg);
  const double gated_seconds = seconds_since(t0);

  TrainConfig base_cfg = cfg;
  base_cfg.baseline = true;
  std::mt19937_64 base_rng(cfg.seed);
  Json base_model_cfg = train["model"];
  const PHModel base_initial = build_model(base_model_cfg, ds.state_dim, ds.input_dim, base_rng, true);
  t0 = Clock::now();
  const FitResult b = fit(base_initial, ds, base_cfg);
  const double baseline_seconds = seconds_since(t0);

  TodaRun run{g.model, b.model, 0.0, 0.0, 0.0, 0.0, 0, {}, {}, {}, {}};
  run.gated_initial = g.initial_loss;
  run.gated_best = best_loss(g);
  run.gated_seconds = gated_seconds;
  run.baseline_seconds = baseline_seconds;
  run.epochs = cfg.epochs;
  auto scenario = [&](const PHModel& model, const char* name) {
    Json e{{"scenario", name}, {"toda", gen["toda"]}};
    return evaluate_scenario(model, eval_spec_from_json(e)).metrics;
  };
  run.pulse = scenario(run.gated, "toda-pulse");
  run.sinusoid = scenario(run.gated, "toda-sin");
  run.baseline_pulse = scenario(run.baseline, "toda-pulse");
  run.baseline_sinusoid = scenario(run.baseline, "toda-sin");
  return run;
}

struct PendulumRun {
  PHModel model;
  double initial = 0.0, best = 0.0, seconds = 0.0;
  std::vector<Json> scenarios;
};

PendulumRun run_pendulum() {
  Json gen = config_file("pendulum_gen.json");
  Json train = config_file("pendulum_train.json");
  const PendulumConfig pc = pendulum_config_from_json(gen["pendulum"]);
  const Dataset ds = gen_pendulum_data(pc, gen.value("seed", std::uint64_t{0}));
  TrainConfig cfg = train_config_from_json(train["train"]);
  std::mt19937_64 rng(cfg.seed);
  const PHModel initial = build_model(train["model"], ds.state_dim, ds.input_dim, rng);
  const auto t0 = Clock::now();
  const FitResult r = fit(initial, ds, cfg);
  PendulumRun run{r.model, 0.0, 0.0, 0.0, {}};
  run.seconds = seconds_since(t0);
  run.initial = r.initial_loss;
  run.best = best_loss(r);
  for (const char* name : {"pendulum-x0-1", "pendulum-x0-2", "pendulum-x0-3"}) {
    Json e{{"scenario", name}, {"pendulum", gen["pendulum"]}};
    run.scenarios.push_back(evaluate_scenario(run.model, eval_spec_from_json(e)).metrics);
  }
  return run;
}

// ------------------------------------------------------------- criteria

Verdict equilibrium_exactness(const TodaRun& toda, const PendulumRun& pend) {
  Verdict v;
  const Json toda_model = config_file("toda_train.json")["model"];
  const Json pend_model = config_file("pendulum_train.json")["model"];
  double worst_grad = 0.0, worst_value = 0.0;
  auto inspect = [&](const PHModel& model) {
    for (const auto& e : model.neural_hamiltonian().equilibria().items()) {
      worst_grad = std::max(worst_grad, model.hamiltonian_grad(e.point).norm());
      worst_value = std::max(worst_value, std::abs(model.hamiltonian(e.point)));
    }
  };
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    inspect(random_model(toda_model, 10, 1, seed, false));
    inspect(random_model(pend_model, 4, 0, seed, false));
  }
  v.require(worst_grad <= 1e-12 && worst_value <= 1e-12,
            "random models: max ||grad H(x_eq)|| = " + fmt(worst_grad) + ", max |H(x_eq)| = " + fmt(worst_value));
  worst_grad = worst_value = 0.0;
  inspect(toda.gated);
  inspect(pend.model);
  v.require(worst_grad <= 1e-12 && worst_value <= 1e-12,
            "trained models: max ||grad H(x_eq)|| = " + fmt(worst_grad) + ", max |H(x_eq)| = " + fmt(worst_value));
  return v;
}

Verdict gradient_oracles() {
  Verdict v;
  std::mt19937_64 rng(2);

  // (a) Hamiltonian gradient at 200 random points, inside and outside the balls
  const Json pend_model = config_file("pendulum_train.json")["model"];
  const PHModel model = random_model(pend_model, 4, 0, 3, true);
  const auto& ham = model.neural_hamiltonian();
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    Eigen::VectorXd x = random_vector(4, rng, i % 2 == 0 ? 0.5 : 8.0);
    if (i % 2 == 0) x += ham.equilibria()[static_cast<std::size_t>(i / 2) % 9].point;
    const Eigen::VectorXd fd = central_difference([&](const Eigen::VectorXd& z) { return ham.value(z); }, x, 1e-6);
    worst = std::max(worst, (ham.grad(x) - fd).norm() / std::max(fd.norm(), 1e-8));
  }
  v.require(worst <= 1e-5, "(a) grad H vs finite differences, worst relative error " + fmt(worst));

  // (b) loss gradient on the toy configuration: n = 2, one hidden layer of 4, 5 samples
  Dataset ds;
  ds.state_dim = 2;
  ds.input_dim = 1;
  ds.dt = 0.1;
  for (int k = 0; k < 5; ++k) {
    ds.times.push_back(0.1 * k);
    ds.states.push_back(random_vector(2, rng, 0.8));
    ds.inputs.push_back(random_vector(1, rng, 0.5));
  }
  ds.segments.emplace_back(0, 5);
  double worst_loss = 0.0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    Json cfg{{"hidden", {4}},
             {"relaxation", seed == 1},
             {"J", {{"mode", seed == 2 ? "fixed" : "state_dependent"}, {"matrix", "canonical"}}}};
    std::mt19937_64 mrng(seed + 10);
    const PHModel toy = build_model(cfg, 2, 1, mrng);
    TrainConfig tc;
    tc.lambda = 1e-3;
    tc.integrator = seed == 2 ? Method::kSymplecticEuler : Method::kRk4;
    const Eigen::VectorXd theta = ParamVector::flatten(toy).values;
    const Eigen::VectorXd g = grad_loss(toy, ds, tc);
    auto loss_at = [&](const Eigen::VectorXd& t) {
      PHModel copy = toy;
      ParamVector pv = ParamVector::flatten(toy);
      pv.values = t;
      pv.unflatten_into(copy);
      return loss(copy, ds, tc);
    };
    const Eigen::VectorXd fd = central_difference(loss_at, theta, 1e-6);
    const double scale = fd.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      const double denom = std::max({std::abs(fd[i]), 1e-3 * scale, 1e-12});
      worst_loss = std::max(worst_loss, std::abs(g[i] - fd[i]) / denom);
    }
  }
  v.require(worst_loss <= 1e-4, "(b) loss gradient vs finite differences, worst per-coordinate error " + fmt(worst_loss));

  // (c) ground-truth gradients
  const TodaConfig tc;
  const PendulumConfig pc;
  double worst_truth = 0.0;
  for (int i = 0; i < 200; ++i) {
    const Eigen::VectorXd xt = random_vector(10, rng, 1.5);
    const Eigen::VectorXd ft = central_difference([&](const Eigen::VectorXd& z) { return toda_hamiltonian(z, tc); }, xt, 1e-6);
    worst_truth = std::max(worst_truth, (toda_grad(xt, tc) - ft).norm() / ft.norm());
    const Eigen::VectorXd xp = random_vector(4, rng, 7.0);
    const Eigen::VectorXd fp =
        central_difference([&](const Eigen::VectorXd& z) { return pendulum_hamiltonian(z, pc); }, xp, 1e-6);
    worst_truth = std::max(worst_truth, (pendulum_grad(xp, pc) - fp).norm() / fp.norm());
  }
  v.require(worst_truth <= 1e-6, "(c) Toda and pendulum gradients, worst relative error " + fmt(worst_truth));
  return v;
}

Verdict structure_preservation() {
  Verdict v;
  std::mt19937_64 rng(4);
  double skew = 0.0, min_eig = std::numeric_limits<double>::infinity(), rate = 0.0;
  const char* modes[] = {"constant", "state_dependent"};
  for (int i = 0; i < 100; ++i) {
    const int n = 2 + 2 * (i % 3);
    Json cfg{{"hidden", {8}},
             {"relaxation", i % 4 == 0},
             {"structure_hidden", 6},
             {"J", {{"mode", modes[i % 2]}, {"init_scale", 1.0}}},
             {"R", {{"mode", modes[(i / 2) % 2]}, {"init_scale", 1.0}}},
             {"G", {{"mode", modes[(i / 3) % 2]}, {"init_scale", 1.0}}}};
    std::mt19937_64 mrng(static_cast<std::uint64_t>(i));
    const PHModel model = build_model(cfg, n, 2, mrng);
    for (int k = 0; k < 5; ++k) {
      const Eigen::VectorXd x = random_vector(n, rng, 2.0);
      const Eigen::MatrixXd j = model.interconnection(x);
      skew = std::max(skew, (j + j.transpose()).cwiseAbs().maxCoeff());
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(model.dissipation(x));
      min_eig = std::min(min_eig, eig.eigenvalues().minCoeff());
      const Eigen::VectorXd u = random_vector(2, rng, 1.0);
      const double chain = model.hamiltonian_grad(x).dot(model.dynamics(x, u));
      rate = std::max(rate, std::abs(model.energy_rate(x, u) - chain) / std::max(std::abs(chain), 1e-300));
    }
  }
  v.require(skew == 0.0, "max |J + J^T| = " + fmt(skew) + " over 500 states of 100 parameterizations");
  v.require(min_eig >= -1e-12, "min eig R = " + fmt(min_eig));
  v.require(rate <= 1e-10, "energy rate vs grad H . xdot at 500 (x, u), worst relative error " + fmt(rate));
  return v;
}

Verdict dissipation(const TodaRun& toda, const PendulumRun& pend) {
  Verdict v;
  std::mt19937_64 rng(5);
  auto check = [&](const PHModel& model, const Eigen::VectorXd& x0, const std::string& label) {
    const Trajectory t = simulate(model, x0, zero_input(model.input_dim()), TimeGrid{0.0, 1e-3, 10000}, Method::kRk4);
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 1 < t.size(); ++k) {
      worst = std::max(worst, t.energy[k + 1] - t.energy[k] - 1e-6 * (1.0 + std::abs(t.energy[k])));
    }
    v.require(worst <= 0.0, label + ": largest step increase beyond slack " + fmt(worst));
  };
  check(toda.gated, random_vector(10, rng, 0.5), "trained Toda model");
  check(toda.baseline, random_vector(10, rng, 0.5), "Toda penalty baseline");
  Eigen::VectorXd x0(4);
  x0 << 0.0, 0.0, 10.0, -2.0;
  check(pend.model, x0, "trained pendulum model");
  const Json model_cfg = config_file("pendulum_train.json")["model"];
  check(random_model(model_cfg, 4, 0, 7, true), random_vector(4, rng, 3.0), "random pendulum-shaped model");
  return v;
}

Verdict smoothstep_suite() {
  Verdict v;
  bool range = true, monotone = true;
  double symmetry = 0.0, identity = 0.0, limit = 0.0, low_order = 0.0, top_ratio = 0.0;
  const double h = 1e-4;
  auto difference = [](int k, double s0, double step_size, const StepParams& p) {
    double sum = 0.0, binom = 1.0;
    for (int j = 0; j <= k; ++j) {
      if (j > 0) binom = binom * (k - j + 1) / j;
      sum += (((k - j) % 2 == 0) ? 1.0 : -1.0) * binom * step(s0 + j * step_size, p);
    }
    return sum / std::pow(step_size, k);
  };
  for (int d = 1; d <= 4; ++d) {
    const StepParams p(d, 1.0, 1e-2);
    const double sb = p.sigma_b();
    double prev = -1.0;
    for (int i = 0; i <= 1000; ++i) {
      const double s = -0.1 + 1.2 * sb * i / 1000.0;
      const double val = step(s, p);
      range = range && val >= 0.0 && val <= 1.0;
      monotone = monotone && val >= prev;
      prev = val;
    }
    for (int i = 0; i <= 1000; ++i) {
      const double s = sb * i / 1000.0;
      symmetry = std::max(symmetry, std::abs(step(sb - s, p) - (1.0 - step(s, p))));
      if (i > 0 && i < 1000) {
        const double lhs = step_prime(s, p);
        identity = std::max(identity, std::abs(lhs - g_func(s, p) * step(s, p) / s) / lhs);
      }
    }
    limit = std::max(limit, std::abs(g_func(1e-8 * sb, p) - (d + 1.0)) / (d + 1.0));
    if (d <= 3) {
      for (int k = 1; k < d; ++k) {
        low_order = std::max({low_order, std::abs(difference(k, 0.0, h, p)), std::abs(difference(k, sb - k * h, h, p))});
      }
    }
    // every order scales as step^(d+1-k) at both knots, order d linearly
    const double coarse = 1e-3;
    for (int k = 1; k <= d; ++k) {
      const double want = std::ldexp(1.0, -(d + 1 - k));
      const double r0 = difference(k, 0.0, coarse / 2.0, p) / difference(k, 0.0, coarse, p);
      const double r1 = difference(k, sb - k * coarse / 2.0, coarse / 2.0, p) / difference(k, sb - k * coarse, coarse, p);
      top_ratio = std::max({top_ratio, std::abs(r0 / want - 1.0), std::abs(r1 / want - 1.0)});
    }
  }
  v.require(range, "range within [0, 1]");
  v.require(monotone, "nondecreasing on a 1000-point grid");
  v.require(symmetry <= 1e-12, "symmetry h(s_b - s) = 1 - h(s), worst " + fmt(symmetry));
  v.require(identity <= 1e-9, "h' = g h / s identity, worst relative error " + fmt(identity));
  v.require(limit <= 1e-6, "g(0+) = d + 1, worst relative error " + fmt(limit));
  v.require(low_order <= 1e-5, "divided differences of order < d at the knots (d <= 3, step 1e-4), worst " + fmt(low_order));
  v.require(top_ratio <= 0.03, "divided differences scale as step^(d+1-k) up to order d, worst relative deviation " + fmt(top_ratio));
  return v;
}

Verdict toda_criterion(const TodaRun& run) {
  Verdict v;
  const double ratio = run.gated_best / run.gated_initial;
  v.note("gated training " + fmt(run.gated_seconds) + " s, baseline " + fmt(run.baseline_seconds) + " s, " +
         std::to_string(run.epochs) + " epochs each");
  v.require(run.epochs <= 500 && run.gated_seconds <= 600.0, "budget: <= 500 epochs and <= 10 min");
  v.require(ratio <= 0.05, "(a) final loss / initial loss = " + fmt(ratio));
  const double x60 = run.pulse.at("final_norm").get<double>();
  v.require(x60 <= 0.05, "(b) pulse: ||x(60)|| = " + fmt(x60) + " (ground truth " +
                             fmt(vector_from_json(run.pulse.at("truth_final_state")).norm()) + ", baseline " +
                             fmt(run.baseline_pulse.at("final_norm").get<double>()) + ")");
  const double gated = run.sinusoid.at("rmse_state").get<double>();
  const double base = run.baseline_sinusoid.at("rmse_state").get<double>();
  v.require(gated < base, "(c) sinusoid state RMSE " + fmt(gated) + " vs baseline " + fmt(base));
  return v;
}

Verdict pendulum_criterion(const PendulumRun& run) {
  Verdict v;
  v.note("training " + fmt(run.seconds) + " s, final loss / initial loss = " + fmt(run.best / run.initial));
  v.require(run.seconds <= 1200.0, "budget: <= 20 min");
  int k = 1;
  for (const auto& m : run.scenarios) {
    const double pos = m.at("target_position_error").get<double>();
    const double mom = m.at("target_momentum_error").get<double>();
    v.require(pos <= 0.2 && mom <= 0.1, "x0(" + std::to_string(k) + ") -> target: angle error " + fmt(pos) +
                                            ", momentum error " + fmt(mom));
    ++k;
  }
  return v;
}

Verdict roa_criterion(const TodaRun& run) {
  Verdict v;
  const Json cfg = config_file("toda_roa.json");
  BallSampling spec;
  spec.lhs_samples = cfg.value("lhs_samples", spec.lhs_samples);
  spec.seed = cfg.value("seed", std::uint64_t{0});
  const RoaEstimate est = roa_level_set(run.gated, 0, spec);
  v.note("c_L = " + fmt(est.c_l) + ", " + std::to_string(est.members.size()) + " member samples, R(x_eq) " +
         (est.asymptotic ? "positive definite" : "only semidefinite"));
  v.require(!est.degenerate && est.level > est.hhat_eq,
            "non-degenerate: c = " + fmt(est.level) + " > H(x_eq) = " + fmt(est.hhat_eq));
  v.require(verify_membership(run.gated, est), "membership re-verification");
  const auto starts = sample_inside_level_set(run.gated, est, 50, spec.seed + 1);
  std::size_t converged = 0;
  double excess = -std::numeric_limits<double>::infinity();
  for (const auto& x0 : starts) {
    const StartOutcome o = run_start(run.gated, est, x0, 1e-3, 200.0, 1e-2);
    converged += o.converged ? 1 : 0;
    excess = std::max(excess, o.max_level_excess);
  }
  v.require(starts.size() == 50 && converged == 50,
            std::to_string(converged) + "/" + std::to_string(starts.size()) + " starts converged within 1e-2");
  v.require(excess <= 1e-9, "max H - c along the runs = " + fmt(excess));
  return v;
}

Verdict baseline_contrast(const TodaRun& run) {
  Verdict v;
  const Eigen::VectorXd z = Eigen::VectorXd::Zero(10);
  const double base = run.baseline.hamiltonian_grad(z).norm();
  const double gated = run.gated.hamiltonian_grad(z).norm();
  v.require(base > 1e-6, "baseline ||grad H(x_eq)|| = " + fmt(base));
  v.require(gated <= 1e-12, "gated ||grad H(x_eq)|| = " + fmt(gated));
  return v;
}

}  // namespace

int main() {
  // budgets are stated for one core
  setenv("PHS_LEARN_THREADS", "1", 0);
  std::cout << std::unitbuf;
  try {
    std::cerr << "training the Toda models...\n";
    const TodaRun toda = run_toda();
    std::cerr << "training the pendulum model...\n";
    const PendulumRun pend = run_pendulum();
    std::cerr << "evaluating criteria...\n";

    const std::pair<const char*, std::function<Verdict()>> criteria[] = {
        {"1 architectural equilibrium exactness", [&] { return equilibrium_exactness(toda, pend); }},
        {"2 gradient oracles", gradient_oracles},
        {"3 structure preservation", structure_preservation},
        {"4 dissipation along autonomous rollouts", [&] { return dissipation(toda, pend); }},
        {"5 smoothstep suite", smoothstep_suite},
        {"6 Toda desk-scale rerun", [&] { return toda_criterion(toda); }},
        {"7 pendulum desk-scale rerun", [&] { return pendulum_criterion(pend); }},
        {"8 region-of-attraction sanity", [&] { return roa_criterion(toda); }},
        {"9 baseline contrast", [&] { return baseline_contrast(toda); }},
    };
    int failures = 0;
    for (const auto& [name, run] : criteria) {
      const Verdict v = run();
      failures += v.pass ? 0 : 1;
      std::cout << (v.pass ? "[PASS] " : "[FAIL] ") << name << '\n';
      for (const auto& d : v.details) std::cout << "       " << d << '\n';
    }
    std::cout << (9 - failures) << "/9 criteria passed\n";
    return failures == 0 ? 0 : 1;
  } catch (const std::exception& e) {
    std::cout << "[FAIL] acceptance run aborted: " << e.what() << '\n';
    return 1;
  }
}
