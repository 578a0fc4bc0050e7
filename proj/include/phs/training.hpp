#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "phs/integrators.hpp"
#include "phs/ph_model.hpp"

namespace phs {

/// Time-stamped samples (t_k, x_k, u_k). Consecutive samples inside one
/// segment form a transition; segments separate independent trajectories.
struct Dataset {
  int state_dim = 0;
  int input_dim = 0;
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::VectorXd> inputs;
  /// Half-open sample ranges [begin, end), each one trajectory.
  std::vector<std::pair<std::size_t, std::size_t>> segments;
  double dt = 0.0;
  bool irregular = false;
  std::string source;
  std::uint64_t seed = 0;

  std::size_t sample_count() const { return times.size(); }
  std::size_t transition_count() const;
  /// Index k of every transition (x_k -> x_{k+1}), in dataset order.
  std::vector<std::size_t> transitions() const;

  /// Throws ConfigError when the contents violate the dataset invariants.
  void validate() const;

  /// Keeps the first `max_transitions` transitions.
  Dataset truncated(std::size_t max_transitions) const;
};

struct TrainConfig {
  double lambda = 1e-6;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int epochs = 100;
  std::size_t batch_size = 256;
  std::optional<Method> integrator;  // unset: default_training_method(model)
  std::uint64_t seed = 0;
  bool baseline = false;
  double penalty_weight = 1.0;

  void validate() const;
};

/// Flat view of every learnable parameter of a PHModel.
///
/// Order: Hamiltonian network (per layer weights then bias), relaxation
/// network, constant J/R/G coefficients, structure network.
class ParamVector {
 public:
  struct Block {
    std::string name;
    Eigen::Index offset;
    Eigen::Index rows;
    Eigen::Index cols;
  };

  static ParamVector flatten(const PHModel& model);
  void unflatten_into(PHModel& model) const;

  Eigen::VectorXd values;
  std::vector<Block> blocks;
};

Method resolve_method(const PHModel& model, const TrainConfig& config);

/// Mean squared one-step prediction error of `system` on the dataset.
double prediction_error(const PortHamiltonianSystem& system, const Dataset& dataset,
                        Method method);

/// (1/N) sum ||xhat_{k+1} - x_{k+1}||^2 + lambda ||theta||^2, plus the
/// equilibrium-gradient penalty when config.baseline is set.
double loss(const PHModel& model, const Dataset& dataset, const TrainConfig& config);

/// Plain data term + penalty_weight * sum_i ||grad NN_H(x_eq_i)||^2 +
/// lambda ||theta||^2 on an ungated model.
double baseline_penalty_loss(const PHModel& model, const Dataset& dataset,
                             const TrainConfig& config);

/// Exact gradient of loss() with respect to ParamVector::flatten(model).
Eigen::VectorXd grad_loss(const PHModel& model, const Dataset& dataset, const TrainConfig& config);

/// Loss and gradient on a subset of transitions; the data term is averaged
/// over `normalizer` transitions. Used for mini-batches.
double batch_loss_and_grad(const PHModel& model, const Dataset& dataset,
                           const std::vector<std::size_t>& transitions, double normalizer,
                           const TrainConfig& config, Eigen::VectorXd& grad);

struct FitResult {
  PHModel model;
  double initial_loss = 0.0;
  std::vector<double> history;  // full-dataset loss after each epoch
  std::size_t best_epoch = 0;   // 1-based, 0 if no epoch improved on the start
  double wall_seconds = 0.0;
};

using EpochCallback = std::function<void(int epoch, double loss)>;

/// Adam on mini-batches in a seeded order; returns the lowest-loss
/// parameters seen. Throws NumericalError on a non-finite loss or gradient.
FitResult fit(const PHModel& model, const Dataset& dataset, const TrainConfig& config,
              const EpochCallback& on_epoch = {});

}  // namespace phs
