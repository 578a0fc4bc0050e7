#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "phs/benchmarks.hpp"
#include "phs/integrators.hpp"
#include "phs/ph_model.hpp"
#include "phs/serialization.hpp"
#include "phs/training.hpp"

namespace phs {

inline constexpr const char* kToolVersion = "phs-learn 1.0.0";

enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitNumerical = 3 };

struct CliOptions {
  std::string command;
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  bool baseline_penalty = false;
};

/// Dispatches to one command and maps failures to exit codes: ConfigError
/// and other argument errors give 2, NumericalError gives 3. Progress goes
/// to `log`, diagnostics to `err`.
int run_command(const CliOptions& options, std::ostream& log, std::ostream& err);

// -- Config readers. Each fills missing keys of `cfg` with their defaults, so
// the mutated document is the resolved configuration echoed in manifests.

TodaConfig toda_config_from_json(Json& cfg);
PendulumConfig pendulum_config_from_json(Json& cfg);
TrainConfig train_config_from_json(Json& cfg);

/// Builds a freshly initialized model from a "model" block. `baseline`
/// produces the ungated plain-network Hamiltonian (no relaxation).
PHModel build_model(Json& cfg, int state_dim, int input_dim, std::mt19937_64& rng,
                    bool baseline = false);

// -- Evaluation scenarios shared by the eval command and the acceptance run.

struct EvalSpec {
  std::string scenario = "toda-pulse";
  double horizon = 60.0;
  double dt = 0.01;
  Method method = Method::kRk4;
  TodaConfig toda;
  PendulumConfig pendulum;
  std::optional<Eigen::VectorXd> x0;  // required for custom
  std::string input = "zero";         // custom: zero | pulse | sinusoid
  std::string truth = "none";         // custom: none | toda | pendulum
};

EvalSpec eval_spec_from_json(Json& cfg);

struct EvalResult {
  Trajectory learned;
  std::optional<Trajectory> truth;
  std::optional<Eigen::VectorXd> target;  // equilibrium the scenario should reach
  Json metrics;
  std::vector<std::string> warnings;
};

EvalResult evaluate_scenario(const PHModel& model, const EvalSpec& spec);

/// Root-mean-square of the componentwise difference over all samples.
double trajectory_rmse(const std::vector<Eigen::VectorXd>& a, const std::vector<Eigen::VectorXd>& b);

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::string& path);

}  // namespace phs
