#include "phs/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "phs/autodiff.hpp"
#include "phs/errors.hpp"

namespace phs {

// ---------------------------------------------------------------- Dataset

std::size_t Dataset::transition_count() const {
  std::size_t count = 0;
  for (const auto& [begin, end] : segments) count += end > begin ? end - begin - 1 : 0;
  return count;
}

std::vector<std::size_t> Dataset::transitions() const {
  std::vector<std::size_t> out;
  out.reserve(transition_count());
  for (const auto& [begin, end] : segments) {
    for (std::size_t k = begin; k + 1 < end; ++k) out.push_back(k);
  }
  return out;
}

void Dataset::validate() const {
  if (state_dim <= 0 || input_dim < 0) throw ConfigError("dataset dimensions are invalid");
  const std::size_t n = times.size();
  if (states.size() != n || inputs.size() != n) throw ConfigError("dataset columns have unequal lengths");
  if (segments.empty()) throw ConfigError("dataset has no segments");
  std::size_t expected = 0;
  for (const auto& [begin, end] : segments) {
    if (begin != expected || end <= begin || end > n) throw ConfigError("dataset segments are malformed");
    expected = end;
  }
  if (expected != n) throw ConfigError("dataset segments do not cover every sample");
  if (transition_count() < 2) throw ConfigError("dataset needs at least two transitions");
  for (std::size_t k = 0; k < n; ++k) {
    if (states[k].size() != state_dim || inputs[k].size() != input_dim) {
      throw ConfigError("dataset sample " + std::to_string(k) + " has the wrong dimension");
    }
    if (!std::isfinite(times[k]) || !states[k].allFinite() || !inputs[k].allFinite()) {
      throw ConfigError("dataset sample " + std::to_string(k) + " is not finite");
    }
  }
  for (std::size_t k : transitions()) {
    const double step = times[k + 1] - times[k];
    if (!(step > 0.0)) throw ConfigError("dataset times must be strictly increasing");
    if (!irregular && std::abs(step - dt) > 1e-9 * std::max(1.0, std::abs(dt))) {
      throw ConfigError("dataset sample spacing differs from dt; flag it irregular");
    }
  }
}

Dataset Dataset::truncated(std::size_t max_transitions) const {
  Dataset out = *this;
  out.times.clear();
  out.states.clear();
  out.inputs.clear();
  out.segments.clear();
  std::size_t remaining = max_transitions;
  for (const auto& [begin, end] : segments) {
    if (remaining == 0) break;
    const std::size_t take = std::min(remaining, end - begin - 1);
    const std::size_t new_begin = out.times.size();
    for (std::size_t k = begin; k <= begin + take; ++k) {
      out.times.push_back(times[k]);
      out.states.push_back(states[k]);
      out.inputs.push_back(inputs[k]);
    }
    out.segments.emplace_back(new_begin, out.times.size());
    remaining -= take;
  }
  return out;
}

void TrainConfig::validate() const {
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be nonnegative");
  if (!(learning_rate >= 0.0)) throw ConfigError("learning rate must be nonnegative");
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (!(penalty_weight >= 0.0)) throw ConfigError("penalty weight must be nonnegative");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0 && epsilon > 0.0)) {
    throw ConfigError("invalid Adam hyperparameters");
  }
}

// ------------------------------------------------------------ ParamVector

namespace {

template <class Model, class F>
void for_each_param(Model& model, F&& visit) {
  auto visit_mlp = [&](auto& net, const std::string& prefix) {
    for (std::size_t k = 0; k < net.weights().size(); ++k) {
      auto& w = net.weights()[k];
      auto& b = net.biases()[k];
      visit(prefix + ".W" + std::to_string(k), w.data(), w.rows(), w.cols());
      visit(prefix + ".b" + std::to_string(k), b.data(), b.rows(), Eigen::Index{1});
    }
  };
  auto& ham = model.neural_hamiltonian();
  visit_mlp(ham.net(), "hamiltonian");
  if (ham.relaxed()) visit_mlp(ham.relaxation_net(), "relaxation");
  auto& structure = model.structure();
  auto visit_coeffs = [&](auto& p, const char* name) {
    if (p.mode == StructureMode::kConstant) visit(name, p.coeffs.data(), p.coeffs.rows(), Eigen::Index{1});
  };
  visit_coeffs(structure.j(), "J");
  visit_coeffs(structure.r(), "R");
  visit_coeffs(structure.g(), "G");
  if (structure.has_net()) visit_mlp(structure.net(), "structure");
}

}  // namespace

ParamVector ParamVector::flatten(const PHModel& model) {
  ParamVector pv;
  std::vector<const double*> sources;
  Eigen::Index offset = 0;
  for_each_param(model, [&](const std::string& name, const double* data, Eigen::Index rows,
                            Eigen::Index cols) {
    pv.blocks.push_back(Block{name, offset, rows, cols});
    sources.push_back(data);
    offset += rows * cols;
  });
  pv.values.resize(offset);
  for (std::size_t i = 0; i < pv.blocks.size(); ++i) {
    const auto& b = pv.blocks[i];
    std::copy(sources[i], sources[i] + b.rows * b.cols, pv.values.data() + b.offset);
  }
  return pv;
}

void ParamVector::unflatten_into(PHModel& model) const {
  std::size_t index = 0;
  for_each_param(model, [&](const std::string& name, double* data, Eigen::Index rows,
                            Eigen::Index cols) {
    if (index >= blocks.size() || blocks[index].name != name || blocks[index].rows != rows ||
        blocks[index].cols != cols) {
      throw std::invalid_argument("parameter layout does not match the model");
    }
    const auto& b = blocks[index++];
    std::copy(values.data() + b.offset, values.data() + b.offset + rows * cols, data);
  });
  if (index != blocks.size()) throw std::invalid_argument("parameter layout does not match the model");
}

// ---------------------------------------------------- plain loss evaluation

Method resolve_method(const PHModel& model, const TrainConfig& config) {
  return config.integrator.value_or(default_training_method(model));
}

double prediction_error(const PortHamiltonianSystem& system, const Dataset& dataset,
                        Method method) {
  const auto transitions = dataset.transitions();
  double total = 0.0;
  for (std::size_t k : transitions) {
    const double step = dataset.times[k + 1] - dataset.times[k];
    const Eigen::VectorXd next =
        integrate_step(system, method, dataset.states[k], dataset.inputs[k], step);
    if (!next.allFinite()) {
      throw NumericalError("one-step prediction diverged at sample " + std::to_string(k), k);
    }
    total += (next - dataset.states[k + 1]).squaredNorm();
  }
  return total / static_cast<double>(transitions.size());
}

namespace {

double equilibrium_penalty(const PHModel& model) {
  const auto& ham = model.neural_hamiltonian();
  double total = 0.0;
  for (const auto& eq : ham.equilibria().items()) total += ham.nn_grad(eq.point).squaredNorm();
  return total;
}

}  // namespace

double loss(const PHModel& model, const Dataset& dataset, const TrainConfig& config) {
  if (config.baseline) return baseline_penalty_loss(model, dataset, config);
  const double theta = ParamVector::flatten(model).values.squaredNorm();
  return prediction_error(model, dataset, resolve_method(model, config)) + config.lambda * theta;
}

double baseline_penalty_loss(const PHModel& model, const Dataset& dataset,
                             const TrainConfig& config) {
  if (model.neural_hamiltonian().gated()) {
    throw std::invalid_argument("the penalty baseline needs an ungated Hamiltonian");
  }
  const double theta = ParamVector::flatten(model).values.squaredNorm();
  return prediction_error(model, dataset, resolve_method(model, config)) +
         config.penalty_weight * equilibrium_penalty(model) + config.lambda * theta;
}

// ------------------------------------------------------ tape construction

namespace {

using ad::Tape;
using ad::Var;

struct BoundMlp {
  std::vector<Var> weights;
  std::vector<Var> biases;
  OutputActivation output;
};

// Records the model on a tape with one variable per parameter block, in
// ParamVector order.
class TapeModel {
 public:
  TapeModel(Tape& tape, const PHModel& model) : tape_(tape), model_(model) {
    const auto& ham = model.neural_hamiltonian();
    hamiltonian_ = bind(ham.net());
    if (ham.relaxed()) relaxation_ = bind(ham.relaxation_net());
    const auto& s = model.structure();
    j_coeffs_ = bind_coeffs(s.j());
    r_coeffs_ = bind_coeffs(s.r());
    g_coeffs_ = bind_coeffs(s.g());
    if (s.has_net()) structure_net_ = bind(s.net());
    const int n = s.state_dim();
    if (s.j().mode == StructureMode::kFixed) j_fixed_ = tape.constant(s.j().fixed);
    if (s.r().mode == StructureMode::kFixed) r_fixed_ = tape.constant(s.r().fixed);
    if (s.g().mode == StructureMode::kFixed) g_fixed_ = tape.constant(s.g().fixed);
    r_diag_mask_.assign(s.r().pattern.size(), false);
    for (std::size_t k = 0; k < s.r().pattern.size(); ++k) {
      r_diag_mask_[k] = s.r().pattern[k].first == s.r().pattern[k].second;
    }
    (void)n;
  }

  // Gradient of every parameter block, concatenated in ParamVector order.
  Eigen::VectorXd gradient(const ParamVector& layout) const {
    Eigen::VectorXd out(layout.values.size());
    std::size_t b = 0;
    auto emit = [&](Var v) {
      const ad::Matrix g = tape_.grad(v);
      const auto& blk = layout.blocks[b++];
      std::copy(g.data(), g.data() + g.size(), out.data() + blk.offset);
    };
    auto emit_mlp = [&](const BoundMlp& m) {
      for (std::size_t k = 0; k < m.weights.size(); ++k) {
        emit(m.weights[k]);
        emit(m.biases[k]);
      }
    };
    emit_mlp(hamiltonian_);
    if (relaxation_) emit_mlp(*relaxation_);
    for (const auto& c : {j_coeffs_, r_coeffs_, g_coeffs_}) {
      if (c) emit(*c);
    }
    if (structure_net_) emit_mlp(*structure_net_);
    return out;
  }

  const BoundMlp& hamiltonian_net() const { return hamiltonian_; }

  std::pair<Var, Var> value_and_grad(const BoundMlp& m, Var x) {
    std::vector<Var> acts;
    Var a = x;
    const std::size_t last = m.weights.size() - 1;
    for (std::size_t k = 0; k < last; ++k) {
      a = tape_.tanh(tape_.add_col(tape_.matmul(m.weights[k], a), m.biases[k]));
      acts.push_back(a);
    }
    const Var z = tape_.add_col(tape_.matmul(m.weights[last], a), m.biases[last]);
    Var value = z;
    Var back;
    if (m.output == OutputActivation::kSoftplus) {
      value = tape_.add_scalar(tape_.softplus(z), kPositiveFloor);
      back = tape_.matmul_tn(m.weights[last], tape_.logistic(z));
    } else {
      const ad::Matrix ones = ad::Matrix::Ones(1, tape_.value(x).cols());
      back = tape_.matmul_tn(m.weights[last], tape_.constant(ones));
    }
    for (std::size_t k = last; k-- > 0;) {
      const Var slope = tape_.add_scalar(tape_.scale(tape_.hadamard(acts[k], acts[k]), -1.0), 1.0);
      back = tape_.matmul_tn(m.weights[k], tape_.hadamard(back, slope));
    }
    return {value, back};
  }

  Var forward(const BoundMlp& m, Var x) {
    Var a = x;
    const std::size_t last = m.weights.size() - 1;
    for (std::size_t k = 0; k < last; ++k) {
      a = tape_.tanh(tape_.add_col(tape_.matmul(m.weights[k], a), m.biases[k]));
    }
    Var z = tape_.add_col(tape_.matmul(m.weights[last], a), m.biases[last]);
    if (m.output == OutputActivation::kSoftplus) z = tape_.add_scalar(tape_.softplus(z), kPositiveFloor);
    return z;
  }

  // grad_x H for a batch of states (columns).
  Var hamiltonian_grad(Var x) {
    const auto& ham = model_.neural_hamiltonian();
    auto [nn, nn_grad] = value_and_grad(hamiltonian_, x);
    if (!ham.gated()) return nn_grad;

    const Eigen::Index batch = tape_.value(x).cols();
    const double delta = ham.delta();
    Var gate_sum;
    Var gate_grad;
    Var relax_factor;
    Var relax_grad;
    const bool relaxed = ham.relaxed();
    for (std::size_t i = 0; i < ham.equilibria().size(); ++i) {
      const StepParams params = ham.step_params(i);
      const Var offset = tape_.add_col(x, tape_.constant(-ham.equilibria()[i].point));
      const Var r2 = tape_.col_sum(tape_.hadamard(offset, offset));
      const Var s = tape_.sqrt(tape_.add_scalar(r2, delta * delta));
      const Var sig = tape_.add_scalar(s, -delta);
      const Var h = tape_.map(
          sig, [params](double v) { return phs::step(v, params); },
          [params](double v) { return step_prime(v, params); });
      const Var hp = tape_.map(
          sig, [params](double v) { return step_prime(v, params); },
          [params](double v) { return step_second(v, params); });
      const Var inv_s = tape_.map(
          s, [](double v) { return 1.0 / v; }, [](double v) { return -1.0 / (v * v); });
      const Var direction = tape_.row_scale(offset, inv_s);  // grad sigma
      const Var grad_i = tape_.row_scale(direction, hp);
      gate_sum = i == 0 ? h : tape_.add(gate_sum, h);
      gate_grad = i == 0 ? grad_i : tape_.add(gate_grad, grad_i);
      if (relaxed) {
        // (1 - h) sigma^2 and its gradient [2 (1 - h) sigma - h' sigma^2] grad sigma
        const Var one_minus_h = tape_.add_scalar(tape_.scale(h, -1.0), 1.0);
        const Var sig2 = tape_.hadamard(sig, sig);
        const Var factor = tape_.hadamard(one_minus_h, sig2);
        const Var coef = tape_.sub(tape_.scale(tape_.hadamard(one_minus_h, sig), 2.0),
                                   tape_.hadamard(hp, sig2));
        const Var fgrad = tape_.row_scale(direction, coef);
        relax_factor = i == 0 ? factor : tape_.add(relax_factor, factor);
        relax_grad = i == 0 ? fgrad : tape_.add(relax_grad, fgrad);
      }
    }
    const double n_eq = static_cast<double>(ham.equilibria().size());
    const Var gate = tape_.add_scalar(gate_sum, 1.0 - n_eq);
    Var grad = tape_.add(tape_.row_scale(nn_grad, gate), tape_.row_scale(gate_grad, nn));
    if (relaxed) {
      auto [w_net, w_net_grad] = value_and_grad(*relaxation_, x);
      const Var w = tape_.hadamard(w_net, relax_factor);
      const Var w_grad = tape_.add(tape_.row_scale(w_net_grad, relax_factor),
                                   tape_.row_scale(relax_grad, w_net));
      const Var one_minus_gate = tape_.add_scalar(tape_.scale(gate, -1.0), 1.0);
      grad = tape_.add(grad, tape_.sub(tape_.row_scale(w_grad, one_minus_gate),
                                       tape_.row_scale(gate_grad, w)));
    }
    (void)batch;
    return grad;
  }

  // (J - R) grad H + G u for a batch.
  Var vector_field(Var x, Var u) {
    const auto& s = model_.structure();
    const int n = s.state_dim();
    const int m = s.input_dim();
    const Var grad = hamiltonian_grad(x);
    std::optional<Var> net_out;
    auto entries = [&](const MatrixParam& p, const std::optional<Var>& coeffs) -> Var {
      if (p.mode == StructureMode::kConstant) return *coeffs;
      if (!net_out) net_out = forward(*structure_net_, x);
      return tape_.rows(*net_out, p.offset, p.free_count());
    };

    Var jg;
    if (s.j().mode == StructureMode::kFixed) {
      jg = tape_.matmul(*j_fixed_, grad);
    } else {
      const Var e = entries(s.j(), j_coeffs_);
      jg = tape_.sub(tape_.scatter_apply(e, s.j().pattern, n, n, grad, false),
                     tape_.scatter_apply(e, s.j().pattern, n, n, grad, true));
    }
    Var rg;
    if (s.r().mode == StructureMode::kFixed) {
      rg = tape_.matmul(*r_fixed_, grad);
    } else {
      const Var e = tape_.softplus_rows(entries(s.r(), r_coeffs_), r_diag_mask_);
      const Var t_grad = tape_.scatter_apply(e, s.r().pattern, n, n, grad, true);
      rg = tape_.scatter_apply(e, s.r().pattern, n, n, t_grad, false);
    }
    Var field = tape_.sub(jg, rg);
    if (m > 0) {
      Var gu;
      if (s.g().mode == StructureMode::kFixed) {
        gu = tape_.matmul(*g_fixed_, u);
      } else {
        gu = tape_.scatter_apply(entries(s.g(), g_coeffs_), s.g().pattern, n, m, u, false);
      }
      field = tape_.add(field, gu);
    }
    return field;
  }

  // One integrator step; dt is a 1 x B row.
  Var step(Method method, Var x, Var u, Var dt) {
    switch (method) {
      case Method::kEuler:
        return tape_.add(x, tape_.row_scale(vector_field(x, u), dt));
      case Method::kRk4: {
        const Var half = tape_.scale(dt, 0.5);
        const Var k1 = vector_field(x, u);
        const Var k2 = vector_field(tape_.add(x, tape_.row_scale(k1, half)), u);
        const Var k3 = vector_field(tape_.add(x, tape_.row_scale(k2, half)), u);
        const Var k4 = vector_field(tape_.add(x, tape_.row_scale(k3, dt)), u);
        const Var sum = tape_.add(tape_.add(k1, k4), tape_.scale(tape_.add(k2, k3), 2.0));
        return tape_.add(x, tape_.row_scale(sum, tape_.scale(dt, 1.0 / 6.0)));
      }
      case Method::kSymplecticEuler: {
        if (!model_.canonical()) {
          throw std::invalid_argument("symplectic Euler needs a canonical (q, p) partition");
        }
        const Eigen::Index l = tape_.value(x).rows() / 2;
        const Var q = tape_.rows(x, 0, l);
        const Var p = tape_.rows(x, l, l);
        const Var p_next =
            tape_.add(p, tape_.row_scale(tape_.rows(vector_field(x, u), l, l), dt));
        const Var mid = tape_.vcat(q, p_next);
        const Var q_next =
            tape_.add(q, tape_.row_scale(tape_.rows(vector_field(mid, u), 0, l), dt));
        return tape_.vcat(q_next, p_next);
      }
    }
    throw std::logic_error("unreachable integrator");
  }

  Var squared_parameter_norm() {
    std::vector<Var> parts;
    auto add_mlp = [&](const BoundMlp& m) {
      for (std::size_t k = 0; k < m.weights.size(); ++k) {
        parts.push_back(m.weights[k]);
        parts.push_back(m.biases[k]);
      }
    };
    add_mlp(hamiltonian_);
    if (relaxation_) add_mlp(*relaxation_);
    for (const auto& c : {j_coeffs_, r_coeffs_, g_coeffs_}) {
      if (c) parts.push_back(*c);
    }
    if (structure_net_) add_mlp(*structure_net_);
    Var total = tape_.sum(tape_.hadamard(parts[0], parts[0]));
    for (std::size_t i = 1; i < parts.size(); ++i) {
      total = tape_.add(total, tape_.sum(tape_.hadamard(parts[i], parts[i])));
    }
    return total;
  }

 private:
  BoundMlp bind(const Mlp& net) {
    BoundMlp m{{}, {}, net.output_activation()};
    for (std::size_t k = 0; k < net.weights().size(); ++k) {
      m.weights.push_back(tape_.variable(net.weights()[k]));
      m.biases.push_back(tape_.variable(net.biases()[k]));
    }
    return m;
  }

  std::optional<Var> bind_coeffs(const MatrixParam& p) {
    if (p.mode != StructureMode::kConstant) return std::nullopt;
    return tape_.variable(p.coeffs);
  }

  Tape& tape_;
  const PHModel& model_;
  BoundMlp hamiltonian_;
  std::optional<BoundMlp> relaxation_;
  std::optional<BoundMlp> structure_net_;
  std::optional<Var> j_coeffs_, r_coeffs_, g_coeffs_;
  std::optional<Var> j_fixed_, r_fixed_, g_fixed_;
  std::vector<bool> r_diag_mask_;
};

}  // namespace

double batch_loss_and_grad(const PHModel& model, const Dataset& dataset,
                           const std::vector<std::size_t>& transitions, double normalizer,
                           const TrainConfig& config, Eigen::VectorXd& grad) {
  const ParamVector layout = ParamVector::flatten(model);
  const Method method = resolve_method(model, config);
  const int n = dataset.state_dim;
  const int m = dataset.input_dim;
  const auto batch = static_cast<Eigen::Index>(transitions.size());

  ad::Matrix x(n, batch), x_next(n, batch), u(m, batch), dt(1, batch);
  for (Eigen::Index c = 0; c < batch; ++c) {
    const std::size_t k = transitions[static_cast<std::size_t>(c)];
    x.col(c) = dataset.states[k];
    x_next.col(c) = dataset.states[k + 1];
    u.col(c) = dataset.inputs[k];
    dt(0, c) = dataset.times[k + 1] - dataset.times[k];
  }

  Tape tape;
  TapeModel tm(tape, model);
  Var total;
  bool have_total = false;
  if (batch > 0) {
    const Var predicted = tm.step(method, tape.constant(std::move(x)), tape.constant(std::move(u)),
                                  tape.constant(std::move(dt)));
    const Var err = tape.sub(predicted, tape.constant(std::move(x_next)));
    total = tape.scale(tape.sum(tape.hadamard(err, err)), 1.0 / normalizer);
    have_total = true;
  }
  auto accumulate = [&](Var term) {
    total = have_total ? tape.add(total, term) : term;
    have_total = true;
  };
  if (config.lambda > 0.0) accumulate(tape.scale(tm.squared_parameter_norm(), config.lambda));
  if (config.baseline) {
    const auto& eqs = model.neural_hamiltonian().equilibria();
    ad::Matrix points(n, static_cast<Eigen::Index>(eqs.size()));
    for (std::size_t i = 0; i < eqs.size(); ++i) points.col(static_cast<Eigen::Index>(i)) = eqs[i].point;
    const Var g = tm.value_and_grad(tm.hamiltonian_net(), tape.constant(std::move(points))).second;
    accumulate(tape.scale(tape.sum(tape.hadamard(g, g)), config.penalty_weight));
  }
  if (!have_total) {
    grad = Eigen::VectorXd::Zero(layout.values.size());
    return 0.0;
  }
  tape.backward(total);
  grad = tm.gradient(layout);
  return tape.value(total)(0, 0);
}

Eigen::VectorXd grad_loss(const PHModel& model, const Dataset& dataset, const TrainConfig& config) {
  if (config.baseline && model.neural_hamiltonian().gated()) {
    throw std::invalid_argument("the penalty baseline needs an ungated Hamiltonian");
  }
  const auto all = dataset.transitions();
  const double normalizer = static_cast<double>(all.size());
  TrainConfig data_only = config;
  data_only.lambda = 0.0;
  data_only.baseline = false;

  Eigen::VectorXd total;
  Eigen::VectorXd part;
  for (std::size_t begin = 0; begin < all.size(); begin += config.batch_size) {
    const std::size_t end = std::min(all.size(), begin + config.batch_size);
    const std::vector<std::size_t> chunk(all.begin() + static_cast<std::ptrdiff_t>(begin),
                                         all.begin() + static_cast<std::ptrdiff_t>(end));
    batch_loss_and_grad(model, dataset, chunk, normalizer, data_only, part);
    if (total.size() == 0) total = part; else total += part;
  }
  // Regularizers once, on an empty batch.
  TrainConfig reg_only = config;
  batch_loss_and_grad(model, dataset, {}, normalizer, reg_only, part);
  total += part;
  return total;
}

// -------------------------------------------------------------- training

FitResult fit(const PHModel& model, const Dataset& dataset, const TrainConfig& config,
              const EpochCallback& on_epoch) {
  config.validate();
  dataset.validate();
  if (dataset.state_dim != model.state_dim() || dataset.input_dim != model.input_dim()) {
    throw ConfigError("dataset dimensions do not match the model");
  }
  if (config.baseline && model.neural_hamiltonian().gated()) {
    throw ConfigError("baseline training needs an ungated Hamiltonian");
  }
  const auto start = std::chrono::steady_clock::now();

  FitResult result{model, 0.0, {}, 0, 0.0};
  PHModel& current = result.model;
  ParamVector theta = ParamVector::flatten(current);
  const Eigen::Index count = theta.values.size();

  result.initial_loss = loss(current, dataset, config);
  if (!std::isfinite(result.initial_loss)) throw NumericalError("initial loss is not finite", 0);
  double best = result.initial_loss;
  Eigen::VectorXd best_values = theta.values;

  Eigen::VectorXd first = Eigen::VectorXd::Zero(count);
  Eigen::VectorXd second = Eigen::VectorXd::Zero(count);
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order = dataset.transitions();
  const double normalizer_total = static_cast<double>(order.size());
  (void)normalizer_total;
  long long step_count = 0;
  Eigen::VectorXd grad;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t batch_index = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      const std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                           order.begin() + static_cast<std::ptrdiff_t>(end));
      const double value = batch_loss_and_grad(current, dataset, batch,
                                               static_cast<double>(batch.size()), config, grad);
      if (!std::isfinite(value) || !grad.allFinite()) {
        std::ostringstream msg;
        msg << "non-finite loss at epoch " << epoch << ", batch " << batch_index
            << ", parameter norm " << theta.values.norm();
        throw NumericalError(msg.str(), static_cast<std::size_t>(epoch));
      }
      ++step_count;
      first = config.beta1 * first + (1.0 - config.beta1) * grad;
      second = config.beta2 * second + (1.0 - config.beta2) * grad.cwiseProduct(grad);
      const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(step_count));
      const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(step_count));
      theta.values.array() -= config.learning_rate * (first.array() / c1) /
                              ((second.array() / c2).sqrt() + config.epsilon);
      theta.unflatten_into(current);
    }
    const double full = loss(current, dataset, config);
    if (!std::isfinite(full)) {
      std::ostringstream msg;
      msg << "non-finite loss at epoch " << epoch << ", parameter norm " << theta.values.norm();
      throw NumericalError(msg.str(), static_cast<std::size_t>(epoch));
    }
    result.history.push_back(full);
    if (full < best) {
      best = full;
      best_values = theta.values;
      result.best_epoch = static_cast<std::size_t>(epoch);
    }
    if (on_epoch) on_epoch(epoch, full);
  }
  theta.values = best_values;
  theta.unflatten_into(current);
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace phs
