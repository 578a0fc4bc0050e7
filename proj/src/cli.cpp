#include "phs/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>

#include <openssl/evp.h>

#include "phs/dataset_io.hpp"
#include "phs/errors.hpp"
#include "phs/stability.hpp"

namespace fs = std::filesystem;

namespace phs {

namespace {

constexpr int kConfigSchemaVersion = 1;

template <class T>
T take(Json& cfg, const char* key, T fallback) {
  if (!cfg.is_object()) throw ConfigError(std::string("expected an object around '") + key + "'");
  if (!cfg.contains(key)) cfg[key] = fallback;
  try {
    return cfg.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

template <class T>
T require(const Json& cfg, const char* key) {
  if (!cfg.is_object() || !cfg.contains(key)) {
    throw ConfigError(std::string("missing config key '") + key + "'");
  }
  try {
    return cfg.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

Json& block(Json& cfg, const char* key) {
  if (!cfg.contains(key) || cfg[key].is_null()) cfg[key] = Json::object();
  if (!cfg[key].is_object()) throw ConfigError(std::string("'") + key + "' must be an object");
  return cfg[key];
}

Eigen::VectorXd vector_or_throw(const Json& j, const char* what) {
  try {
    return vector_from_json(j);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string(what) + ": " + e.what());
  }
}

void check_schema(Json& cfg) {
  if (!cfg.is_object()) throw ConfigError("config must be a JSON object");
  const int version = take(cfg, "schema_version", kConfigSchemaVersion);
  if (version != kConfigSchemaVersion) {
    throw ConfigError("unsupported config schema_version " + std::to_string(version));
  }
}

fs::path relative_to(const std::string& config_path, const std::string& target) {
  const fs::path p(target);
  if (p.is_absolute()) return p;
  return fs::path(config_path).parent_path() / p;
}

double inverse_softplus(double y) { return y > 30.0 ? y : std::log(std::expm1(y)); }

}  // namespace

// ---------------------------------------------------------------- configs

TodaConfig toda_config_from_json(Json& cfg) {
  TodaConfig c;
  c.particles = take(cfg, "particles", c.particles);
  c.damping = take(cfg, "damping", std::vector<double>(static_cast<std::size_t>(std::max(c.particles, 0)), 0.5));
  c.pinning = take(cfg, "pinning", c.pinning);
  c.dt = take(cfg, "dt", c.dt);
  c.horizon = take(cfg, "horizon", c.horizon);
  c.input_amplitude = take(cfg, "input_amplitude", c.input_amplitude);
  c.validate();
  return c;
}

PendulumConfig pendulum_config_from_json(Json& cfg) {
  PendulumConfig c;
  c.m1 = take(cfg, "m1", c.m1);
  c.m2 = take(cfg, "m2", c.m2);
  c.l1 = take(cfg, "l1", c.l1);
  c.l2 = take(cfg, "l2", c.l2);
  c.gamma1 = take(cfg, "gamma1", c.gamma1);
  c.gamma2 = take(cfg, "gamma2", c.gamma2);
  c.gravity = take(cfg, "gravity", c.gravity);
  c.p1_min = take(cfg, "p1_min", c.p1_min);
  c.p1_max = take(cfg, "p1_max", c.p1_max);
  c.p2_min = take(cfg, "p2_min", c.p2_min);
  c.p2_max = take(cfg, "p2_max", c.p2_max);
  c.mesh = take(cfg, "mesh", c.mesh);
  c.horizon = take(cfg, "horizon", c.horizon);
  c.dt = take(cfg, "dt", c.dt);
  c.validate();
  return c;
}

TrainConfig train_config_from_json(Json& cfg) {
  TrainConfig c;
  c.lambda = take(cfg, "lambda", c.lambda);
  c.learning_rate = take(cfg, "learning_rate", c.learning_rate);
  c.beta1 = take(cfg, "beta1", c.beta1);
  c.beta2 = take(cfg, "beta2", c.beta2);
  c.epsilon = take(cfg, "epsilon", c.epsilon);
  c.epochs = take(cfg, "epochs", c.epochs);
  c.batch_size = take(cfg, "batch_size", c.batch_size);
  c.seed = take(cfg, "seed", c.seed);
  c.baseline = take(cfg, "baseline", c.baseline);
  c.penalty_weight = take(cfg, "penalty_weight", c.penalty_weight);
  const std::string integrator = take(cfg, "integrator", std::string("default"));
  if (integrator != "default") c.integrator = method_from_string(integrator);
  c.validate();
  return c;
}

namespace {

std::vector<Equilibrium> equilibria_from_json(Json& cfg, int n) {
  if (!cfg.contains("equilibria")) {
    cfg["equilibria"] = Json{{"preset", "origin"}, {"radius", 1.0}};
  }
  Json& spec = cfg["equilibria"];
  std::vector<Equilibrium> out;
  if (spec.is_object()) {
    const std::string preset = take(spec, "preset", std::string("origin"));
    const double radius = take(spec, "radius", 1.0);
    if (preset == "origin") {
      out.push_back(Equilibrium{Eigen::VectorXd::Zero(n), radius});
    } else if (preset == "pendulum-nine") {
      if (n != 4) throw ConfigError("the pendulum-nine preset needs a 4-dimensional state");
      out = pendulum_equilibria(radius);
    } else {
      throw ConfigError("unknown equilibrium preset: " + preset);
    }
  } else if (spec.is_array()) {
    for (auto& e : spec) {
      out.push_back(Equilibrium{vector_or_throw(e.at("point"), "equilibrium point"),
                                take(e, "radius", 1.0)});
      if (out.back().point.size() != n) throw ConfigError("equilibrium has the wrong dimension");
    }
  } else {
    throw ConfigError("'equilibria' must be an object or an array");
  }
  return out;
}

Eigen::MatrixXd fixed_matrix(const Json& spec, int rows, int cols, const char* name) {
  if (!spec.contains("matrix")) throw ConfigError(std::string("fixed ") + name + " needs 'matrix'");
  const Json& m = spec.at("matrix");
  Eigen::MatrixXd out;
  if (m.is_string()) {
    const std::string kind = m.get<std::string>();
    if (kind == "zero") {
      out = Eigen::MatrixXd::Zero(rows, cols);
    } else if (kind == "canonical") {
      out = canonical_interconnection(rows);
    } else {
      throw ConfigError("unknown matrix preset: " + kind);
    }
  } else if (m.is_array()) {
    out = Eigen::MatrixXd::Zero(rows, cols);
    if (static_cast<int>(m.size()) != rows) throw ConfigError(std::string(name) + " has the wrong row count");
    for (int i = 0; i < rows; ++i) {
      if (static_cast<int>(m[static_cast<std::size_t>(i)].size()) != cols) {
        throw ConfigError(std::string(name) + " has the wrong column count");
      }
      for (int k = 0; k < cols; ++k) out(i, k) = m[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)].get<double>();
    }
  } else if (m.is_object() && m.contains("momentum_diagonal")) {
    // blkdiag(0, diag(values)) on an (q, p) state
    const Eigen::VectorXd d = vector_or_throw(m.at("momentum_diagonal"), name);
    if (rows != cols || d.size() * 2 != rows) throw ConfigError("momentum_diagonal has the wrong size");
    out = Eigen::MatrixXd::Zero(rows, cols);
    for (Eigen::Index i = 0; i < d.size(); ++i) out(d.size() + i, d.size() + i) = d[i];
  } else {
    throw ConfigError(std::string("cannot read fixed ") + name);
  }
  return out;
}

EntryPattern pattern_from_spec(Json& spec, MatrixRole role, int n, int m) {
  const char* fallback = role == MatrixRole::kInterconnection ? "strictly_lower"
                         : role == MatrixRole::kDissipation   ? "lower"
                                                              : "dense";
  if (!spec.contains("pattern")) spec["pattern"] = fallback;
  const Json& p = spec["pattern"];
  if (p.is_string()) {
    const std::string kind = p.get<std::string>();
    if (kind == "strictly_lower") return strictly_lower_pattern(n);
    if (kind == "lower") return lower_pattern(n);
    if (kind == "dense") return dense_pattern(n, role == MatrixRole::kPort ? m : n);
    if (kind == "momentum_diagonal") {
      std::vector<int> idx;
      for (int i = n / 2; i < n; ++i) idx.push_back(i);
      return diagonal_pattern(idx);
    }
    throw ConfigError("unknown entry pattern: " + kind);
  }
  if (p.is_object() && p.contains("diagonal")) return diagonal_pattern(p.at("diagonal").get<std::vector<int>>());
  if (p.is_array()) {
    EntryPattern out;
    for (const auto& e : p) out.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
    return out;
  }
  throw ConfigError("cannot read entry pattern");
}

MatrixParam matrix_param_from_json(Json& spec, MatrixRole role, int n, int m,
                                   std::mt19937_64& rng) {
  const char* name = role == MatrixRole::kInterconnection ? "J"
                     : role == MatrixRole::kDissipation   ? "R"
                                                          : "G";
  const int cols = role == MatrixRole::kPort ? m : n;
  const StructureMode mode = structure_mode_from_string(take(spec, "mode", std::string("fixed")));
  if (mode == StructureMode::kFixed) return MatrixParam::make_fixed(fixed_matrix(spec, n, cols, name));

  EntryPattern pattern = pattern_from_spec(spec, role, n, m);
  if (mode == StructureMode::kStateDependent) return MatrixParam::make_state_dependent(std::move(pattern));

  const double scale = take(spec, "init_scale", 0.1);
  const double diag_init = take(spec, "diagonal_init", 0.1);
  std::uniform_real_distribution<double> draw(-scale, scale);
  Eigen::VectorXd coeffs(static_cast<Eigen::Index>(pattern.size()));
  for (std::size_t k = 0; k < pattern.size(); ++k) {
    const bool diag = pattern[k].first == pattern[k].second;
    // R diagonal entries pass through softplus and are squared in T T^T
    coeffs[static_cast<Eigen::Index>(k)] =
        role == MatrixRole::kDissipation && diag ? inverse_softplus(std::sqrt(diag_init)) : draw(rng);
  }
  return MatrixParam::make_constant(std::move(pattern), std::move(coeffs));
}

std::vector<int> widths_for(int n, const std::vector<int>& hidden, int out) {
  std::vector<int> w{n};
  w.insert(w.end(), hidden.begin(), hidden.end());
  w.push_back(out);
  return w;
}

}  // namespace

PHModel build_model(Json& cfg, int n, int m, std::mt19937_64& rng, bool baseline) {
  if (!cfg.is_object()) throw ConfigError("'model' must be an object");
  if (cfg.contains("state_dim") && cfg["state_dim"].get<int>() != n) {
    throw ConfigError("model state_dim does not match the dataset");
  }
  if (cfg.contains("input_dim") && cfg["input_dim"].get<int>() != m) {
    throw ConfigError("model input_dim does not match the dataset");
  }
  const auto hidden = take(cfg, "hidden", std::vector<int>{32, 32});
  const int order = take(cfg, "order", 2);
  const double delta = take(cfg, "delta", 1e-2);
  const bool relaxed = take(cfg, "relaxation", false);
  const auto relax_hidden = take(cfg, "relaxation_hidden", hidden);
  const int structure_hidden = take(cfg, "structure_hidden", 16);
  auto equilibria = equilibria_from_json(cfg, n);

  Json& j_spec = block(cfg, "J");
  Json& r_spec = block(cfg, "R");
  Json& g_spec = block(cfg, "G");
  if (!j_spec.contains("mode")) j_spec = Json{{"mode", "fixed"}, {"matrix", "canonical"}};
  if (!r_spec.contains("mode")) r_spec = Json{{"mode", "constant"}, {"pattern", "lower"}};
  if (!g_spec.contains("mode")) g_spec = Json{{"mode", "constant"}, {"pattern", "dense"}};

  try {
    Mlp net = Mlp::glorot(widths_for(n, hidden, 1), OutputActivation::kSoftplus, rng);
    std::optional<Mlp> relaxation;
    if (relaxed && !baseline) {
      relaxation = Mlp::glorot(widths_for(n, relax_hidden, 1), OutputActivation::kSoftplus, rng);
    }
    MatrixParam j = matrix_param_from_json(j_spec, MatrixRole::kInterconnection, n, m, rng);
    MatrixParam r = matrix_param_from_json(r_spec, MatrixRole::kDissipation, n, m, rng);
    MatrixParam g = matrix_param_from_json(g_spec, MatrixRole::kPort, n, m, rng);
    StructureParam structure = StructureParam::with_state_network(
        n, m, std::move(j), std::move(r), std::move(g), structure_hidden, rng);
    NeuralHamiltonian ham(std::move(net), EquilibriumSet(std::move(equilibria)), order, delta,
                          std::move(relaxation), !baseline);
    return PHModel(std::move(structure), std::move(ham));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid model configuration: ") + e.what());
  }
}

// ------------------------------------------------------------- evaluation

EvalSpec eval_spec_from_json(Json& cfg) {
  EvalSpec s;
  s.scenario = take(cfg, "scenario", s.scenario);
  const bool pendulum = s.scenario.rfind("pendulum", 0) == 0;
  s.horizon = take(cfg, "horizon", pendulum ? 30.0 : 60.0);
  s.dt = take(cfg, "dt", s.dt);
  s.method = method_from_string(take(cfg, "method", std::string("rk4")));
  s.toda = toda_config_from_json(block(cfg, "toda"));
  s.pendulum = pendulum_config_from_json(block(cfg, "pendulum"));
  if (cfg.contains("x0") && !cfg["x0"].is_null()) s.x0 = vector_or_throw(cfg["x0"], "x0");
  s.input = take(cfg, "input", s.input);
  s.truth = take(cfg, "truth", s.truth);
  if (!(s.dt > 0.0) || !(s.horizon > 0.0)) throw ConfigError("eval dt and horizon must be positive");
  return s;
}

double trajectory_rmse(const std::vector<Eigen::VectorXd>& a, const std::vector<Eigen::VectorXd>& b) {
  if (a.size() != b.size() || a.empty()) throw std::invalid_argument("trajectories differ in length");
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    total += (a[k] - b[k]).squaredNorm();
    count += static_cast<std::size_t>(a[k].size());
  }
  return count == 0 ? 0.0 : std::sqrt(total / static_cast<double>(count));
}

EvalResult evaluate_scenario(const PHModel& model, const EvalSpec& spec) {
  const int n = model.state_dim();
  const int m = model.input_dim();
  const double two_pi = 2.0 * std::numbers::pi;
  EvalResult result;

  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(n);
  std::string input = "zero";
  std::string truth = "none";
  auto pendulum_case = [&](std::initializer_list<double> start, std::initializer_list<double> goal) {
    if (n != 4) throw ConfigError("pendulum scenarios need a 4-dimensional model");
    x0 = Eigen::Map<const Eigen::VectorXd>(start.begin(), 4);
    result.target = Eigen::Map<const Eigen::VectorXd>(goal.begin(), 4);
    truth = "pendulum";
  };
  if (spec.scenario == "toda-pulse" || spec.scenario == "toda-sin") {
    if (n != 2 * spec.toda.particles || m != 1) throw ConfigError("Toda scenarios need a matching Toda model");
    input = spec.scenario == "toda-pulse" ? "pulse" : "sinusoid";
    truth = "toda";
    result.target = Eigen::VectorXd::Zero(n);
  } else if (spec.scenario == "pendulum-x0-1") {
    pendulum_case({0.0, 0.0, 10.0, -2.0}, {two_pi, two_pi, 0.0, 0.0});
  } else if (spec.scenario == "pendulum-x0-2") {
    pendulum_case({0.0, 0.0, 1.0, -1.0}, {0.0, 0.0, 0.0, 0.0});
  } else if (spec.scenario == "pendulum-x0-3") {
    pendulum_case({0.0, 0.0, -8.0, 1.0}, {-two_pi, 0.0, 0.0, 0.0});
  } else if (spec.scenario == "custom") {
    if (!spec.x0) throw ConfigError("custom scenario needs 'x0'");
    input = spec.input;
    truth = spec.truth;
  } else {
    throw ConfigError("unknown scenario: " + spec.scenario);
  }
  if (spec.x0) x0 = *spec.x0;
  if (x0.size() != n) throw ConfigError("x0 has the wrong dimension");

  InputSignal signal;
  if (input == "zero") {
    signal = zero_input(m);
  } else {
    const SignalKind kind = signal_kind_from_string(input);
    signal = [kind, m](double t) { return Eigen::VectorXd::Constant(m, test_signal(kind, t)); };
  }

  const auto steps = static_cast<std::size_t>(std::llround(spec.horizon / spec.dt));
  const TimeGrid grid{0.0, spec.dt, std::max<std::size_t>(steps, 1)};
  result.learned = simulate(model, x0, signal, grid, spec.method);

  std::unique_ptr<PortHamiltonianSystem> reference;
  if (truth == "toda") {
    reference = std::make_unique<TodaSystem>(spec.toda);
  } else if (truth == "pendulum") {
    reference = std::make_unique<PendulumSystem>(spec.pendulum);
  } else if (truth != "none") {
    throw ConfigError("unknown ground truth: " + truth);
  }
  if (reference && (reference->state_dim() != n || reference->input_dim() != m)) {
    throw ConfigError("ground truth dimensions do not match the model");
  }

  Json& mt = result.metrics;
  mt["scenario"] = spec.scenario;
  mt["method"] = to_string(spec.method);
  mt["dt"] = spec.dt;
  mt["horizon"] = grid.time(grid.steps);
  mt["input"] = input;
  mt["ground_truth"] = truth;
  mt["x0"] = vector_to_json(x0);
  const Eigen::VectorXd& last = result.learned.states.back();
  mt["final_state"] = vector_to_json(last);
  mt["final_norm"] = last.norm();

  if (reference) {
    result.truth = simulate(*reference, x0, signal, grid, spec.method);
    std::vector<Eigen::VectorXd> h_learned, h_truth;
    for (std::size_t k = 0; k < result.learned.size(); ++k) {
      h_learned.push_back(Eigen::VectorXd::Constant(1, result.learned.energy[k]));
      h_truth.push_back(Eigen::VectorXd::Constant(1, result.truth->energy[k]));
    }
    mt["rmse_state"] = trajectory_rmse(result.learned.states, result.truth->states);
    mt["rmse_output"] = m > 0 ? trajectory_rmse(result.learned.outputs, result.truth->outputs) : 0.0;
    mt["rmse_hamiltonian"] = trajectory_rmse(h_learned, h_truth);
    mt["truth_final_state"] = vector_to_json(result.truth->states.back());
  } else {
    result.warnings.push_back("no ground truth for this scenario; metrics cover the learned model only");
  }
  if (result.target) {
    const Eigen::VectorXd d = last - *result.target;
    const int half = n / 2;
    mt["target_equilibrium"] = vector_to_json(*result.target);
    mt["target_position_error"] = d.head(half).lpNorm<Eigen::Infinity>();
    mt["target_momentum_error"] = d.tail(n - half).lpNorm<Eigen::Infinity>();
  }
  return result;
}

// --------------------------------------------------------------- manifest

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("SHA-256 unavailable");
  }
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return hex.str();
}

namespace {

struct RunContext {
  const CliOptions& options;
  std::ostream& log;
  std::ostream& err;
  fs::path out;
  Json config;
  std::vector<std::string> inputs{};
  std::vector<std::string> outputs{};
  Json seeds = Json::object();
  Json metrics = Json::object();
};

void emit(RunContext& ctx, const std::string& name, const std::string& contents) {
  write_file_atomic((ctx.out / name).string(), contents);
  ctx.outputs.push_back(name);
}

void write_manifest(RunContext& ctx, double wall_seconds) {
  Json inputs = Json::array();
  for (const auto& p : ctx.inputs) inputs.push_back({{"path", p}, {"sha256", sha256_file(p)}});
  std::vector<std::string> names = ctx.outputs;
  std::sort(names.begin(), names.end());
  Json outputs = Json::array();
  for (const auto& name : names) {
    outputs.push_back({{"path", name}, {"sha256", sha256_file((ctx.out / name).string())}});
  }
  const Json manifest{{"schema_version", 1},
                      {"tool_version", kToolVersion},
                      {"command", ctx.options.command},
                      {"config_path", ctx.options.config},
                      {"config", ctx.config},
                      {"seeds", ctx.seeds},
                      {"inputs", std::move(inputs)},
                      {"outputs", std::move(outputs)},
                      {"metrics", ctx.metrics},
                      {"wall_seconds", wall_seconds}};
  write_file_atomic((ctx.out / "manifest.json").string(), manifest.dump(2) + "\n");
}

std::string trajectory_csv(const Trajectory& t) {
  std::ostringstream out;
  write_trajectory_csv(out, t);
  return out.str();
}

std::uint64_t resolve_seed(RunContext& ctx, Json& holder) {
  if (ctx.options.seed) holder["seed"] = *ctx.options.seed;
  return take(holder, "seed", std::uint64_t{0});
}

// gen-data ------------------------------------------------------------------
int cmd_gen_data(RunContext& ctx) {
  Json& cfg = ctx.config;
  const std::string bench = take(cfg, "benchmark", std::string("toda"));
  const std::uint64_t seed = resolve_seed(ctx, cfg);
  ctx.seeds["data"] = seed;
  Dataset ds;
  Json extra;
  if (bench == "toda") {
    const TodaConfig tc = toda_config_from_json(block(cfg, "toda"));
    ds = gen_toda_data(tc, seed);
    extra = cfg["toda"];
    extra["integrator"] = "euler";
  } else if (bench == "pendulum") {
    const PendulumConfig pc = pendulum_config_from_json(block(cfg, "pendulum"));
    ds = gen_pendulum_data(pc, seed);
    extra = cfg["pendulum"];
    extra["integrator"] = "rk4";
  } else {
    throw ConfigError("unknown benchmark: " + bench);
  }
  if (cfg.contains("max_transitions") && !cfg["max_transitions"].is_null()) {
    ds = ds.truncated(require<std::size_t>(cfg, "max_transitions"));
  }
  write_dataset(ds, (ctx.out / "dataset.csv").string(), extra);
  ctx.outputs.push_back("dataset.csv");
  ctx.outputs.push_back("dataset.json");
  ctx.metrics = {{"samples", ds.sample_count()}, {"transitions", ds.transition_count()}};
  ctx.log << "wrote " << ds.transition_count() << " transitions to " << (ctx.out / "dataset.csv").string()
          << '\n';
  return kExitOk;
}

// train ---------------------------------------------------------------------
int cmd_train(RunContext& ctx) {
  Json& cfg = ctx.config;
  const fs::path data_path = relative_to(ctx.options.config, require<std::string>(cfg, "dataset"));
  Dataset ds = read_dataset(data_path.string());
  ctx.inputs.push_back(data_path.string());
  ctx.inputs.push_back(sidecar_path(data_path.string()));
  if (cfg.contains("max_transitions") && !cfg["max_transitions"].is_null()) {
    ds = ds.truncated(require<std::size_t>(cfg, "max_transitions"));
  }

  Json& tcfg = block(cfg, "train");
  if (ctx.options.seed) tcfg["seed"] = *ctx.options.seed;
  if (ctx.options.baseline_penalty) tcfg["baseline"] = true;
  const TrainConfig tc = train_config_from_json(tcfg);
  ctx.seeds["train"] = tc.seed;

  std::mt19937_64 rng(tc.seed);
  const PHModel initial = build_model(block(cfg, "model"), ds.state_dim, ds.input_dim, rng, tc.baseline);
  const int every = std::max(1, tc.epochs / 20);
  const FitResult fit_result = fit(initial, ds, tc, [&](int epoch, double value) {
    if (epoch % every == 0 || epoch == tc.epochs) {
      ctx.log << "epoch " << epoch << "  loss " << std::setprecision(6) << value << '\n';
    }
  });

  Json history{{"initial_loss", fit_result.initial_loss},
               {"loss", fit_result.history},
               {"best_epoch", fit_result.best_epoch}};
  emit(ctx, "model.json", model_to_json(fit_result.model).dump(2) + "\n");
  emit(ctx, "history.json", history.dump(2) + "\n");

  Json grads = Json::array();
  for (const auto& e : fit_result.model.neural_hamiltonian().equilibria().items()) {
    grads.push_back(fit_result.model.hamiltonian_grad(e.point).norm());
  }
  const double best = fit_result.best_epoch == 0 ? fit_result.initial_loss
                                                 : fit_result.history[fit_result.best_epoch - 1];
  ctx.metrics = {{"initial_loss", fit_result.initial_loss},
                 {"final_loss", best},
                 {"best_epoch", fit_result.best_epoch},
                 {"transitions", ds.transition_count()},
                 {"integrator", to_string(resolve_method(fit_result.model, tc))},
                 {"baseline", tc.baseline},
                 {"equilibrium_grad_norms", std::move(grads)},
                 {"train_wall_seconds", fit_result.wall_seconds}};
  ctx.log << "final loss " << best << " (initial " << fit_result.initial_loss << ")\n";
  return kExitOk;
}

// eval ----------------------------------------------------------------------
int cmd_eval(RunContext& ctx) {
  Json& cfg = ctx.config;
  const fs::path model_path = relative_to(ctx.options.config, require<std::string>(cfg, "model"));
  const PHModel model = load_model(model_path.string());
  ctx.inputs.push_back(model_path.string());
  const EvalSpec spec = eval_spec_from_json(cfg);
  const EvalResult result = evaluate_scenario(model, spec);
  for (const auto& w : result.warnings) ctx.err << "warning: " << w << '\n';
  emit(ctx, "learned.csv", trajectory_csv(result.learned));
  if (result.truth) emit(ctx, "truth.csv", trajectory_csv(*result.truth));
  emit(ctx, "metrics.json", result.metrics.dump(2) + "\n");
  ctx.metrics = result.metrics;
  return kExitOk;
}

// roa -----------------------------------------------------------------------
int cmd_roa(RunContext& ctx) {
  Json& cfg = ctx.config;
  const fs::path model_path = relative_to(ctx.options.config, require<std::string>(cfg, "model"));
  const PHModel model = load_model(model_path.string());
  ctx.inputs.push_back(model_path.string());
  const auto index = take(cfg, "equilibrium", std::int64_t{0});
  if (index < 0 || static_cast<std::size_t>(index) >= model.neural_hamiltonian().equilibria().size()) {
    throw ConfigError("equilibrium index " + std::to_string(index) + " is out of range");
  }
  if (!model.neural_hamiltonian().gated()) throw ConfigError("ROA estimation needs a gated model");
  BallSampling spec;
  spec.resolution = take(cfg, "resolution", spec.resolution);
  spec.lhs_samples = take(cfg, "lhs_samples", spec.lhs_samples);
  spec.seed = resolve_seed(ctx, cfg);
  ctx.seeds["sampling"] = spec.seed;
  const auto starts = take(cfg, "starts", std::size_t{0});
  const double start_dt = take(cfg, "start_dt", 1e-3);
  const double start_horizon = take(cfg, "start_horizon", 200.0);
  const double start_tol = take(cfg, "start_tolerance", 1e-2);

  const auto eq = static_cast<std::size_t>(index);
  const RoaEstimate est = roa_level_set(model, eq, spec);
  if (!est.asymptotic) {
    ctx.err << "warning: R(x_eq) is not positive definite; asymptotic stability is not certified\n";
  }
  if (est.degenerate) ctx.err << "warning: degenerate estimate, no level above H(x_eq)\n";

  Json report{{"equilibrium", eq},
              {"point", vector_to_json(model.neural_hamiltonian().equilibria()[eq].point)},
              {"radius", model.neural_hamiltonian().equilibria()[eq].radius},
              {"c_L", est.c_l},
              {"c", est.level},
              {"hhat_eq", est.hhat_eq},
              {"resolution", est.resolution},
              {"samples", est.sample_count},
              {"members", est.members.size()},
              {"non_members", est.non_members.size()},
              {"asymptotic", est.asymptotic},
              {"degenerate", est.degenerate},
              {"membership_verified", verify_membership(model, est)}};
  if (starts > 0) {
    const auto xs = sample_inside_level_set(model, est, starts, spec.seed + 1);
    std::size_t converged = 0;
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& x0 : xs) {
      const StartOutcome o = run_start(model, est, x0, start_dt, start_horizon, start_tol);
      converged += o.converged ? 1 : 0;
      worst = std::max(worst, o.max_level_excess);
    }
    report["starts"] = {{"requested", starts},
                        {"sampled", xs.size()},
                        {"converged", converged},
                        {"max_level_excess", worst}};
  }

  std::ostringstream csv;
  csv << std::setprecision(17);
  const auto n = model.state_dim();
  for (int i = 0; i < n; ++i) csv << 'x' << i + 1 << ',';
  csv << "H,member\n";
  auto row = [&](const Eigen::VectorXd& x, int member) {
    for (int i = 0; i < n; ++i) csv << x[i] << ',';
    csv << model.hamiltonian(x) << ',' << member << '\n';
  };
  for (const auto& x : est.members) row(x, 1);
  for (const auto& x : est.non_members) row(x, 0);
  emit(ctx, "roa.json", report.dump(2) + "\n");
  emit(ctx, "roa_points.csv", csv.str());
  ctx.metrics = report;
  ctx.log << "level c = " << est.level << " with " << est.members.size() << " member samples\n";
  return kExitOk;
}

// check ---------------------------------------------------------------------
int cmd_check(RunContext& ctx) {
  Json& cfg = ctx.config;
  const fs::path model_path = relative_to(ctx.options.config, require<std::string>(cfg, "model"));
  const PHModel model = load_model(model_path.string());
  ctx.inputs.push_back(model_path.string());
  const double tol = take(cfg, "tolerance", 1e-12);
  const auto fractions = take(cfg, "probe_radii", std::vector<double>{0.1, 0.5, 0.9});
  const auto samples = take(cfg, "probe_samples", std::size_t{500});
  const std::uint64_t seed = resolve_seed(ctx, cfg);
  ctx.seeds["probe"] = seed;

  bool all = true;
  Json items = Json::array();
  const auto& eqs = model.neural_hamiltonian().equilibria();
  for (std::size_t i = 0; i < eqs.size(); ++i) {
    const EquilibriumCertificate cert = check_equilibrium(model, eqs[i].point, tol);
    std::vector<double> radii;
    for (double f : fractions) radii.push_back(f * eqs[i].radius);
    const ProbeReport probe = strict_minimum_probe(model, eqs[i].point, radii, samples, seed + i);
    all = all && cert.pass && probe.pass;
    items.push_back({{"equilibrium", i},
                     {"point", vector_to_json(eqs[i].point)},
                     {"pass", cert.pass},
                     {"grad_norm", cert.grad_norm},
                     {"field_residual", cert.field_residual},
                     {"asymptotic", cert.asymptotic},
                     {"probe", {{"pass", probe.pass},
                                {"checks", probe.checks},
                                {"value_failures", probe.value_failures},
                                {"gradient_failures", probe.gradient_failures},
                                {"note", probe.note}}}});
  }
  Json report{{"tolerance", tol}, {"pass", all}, {"equilibria", std::move(items)}};
  emit(ctx, "check.json", report.dump(2) + "\n");
  ctx.metrics = {{"pass", all}};
  ctx.log << (all ? "all equilibrium checks passed\n" : "equilibrium checks FAILED\n");
  return all ? kExitOk : kExitNumerical;
}

}  // namespace

int run_command(const CliOptions& options, std::ostream& log, std::ostream& err) {
  const auto start = std::chrono::steady_clock::now();
  try {
    RunContext ctx{options, log, err, fs::path(options.out), read_json_file(options.config)};
    check_schema(ctx.config);
    ctx.inputs.push_back(options.config);
    std::error_code ec;
    fs::create_directories(ctx.out, ec);
    if (ec) throw ConfigError("cannot create output directory " + options.out + ": " + ec.message());

    int code = kExitUsage;
    if (options.command == "gen-data") {
      code = cmd_gen_data(ctx);
    } else if (options.command == "train") {
      code = cmd_train(ctx);
    } else if (options.command == "eval") {
      code = cmd_eval(ctx);
    } else if (options.command == "roa") {
      code = cmd_roa(ctx);
    } else if (options.command == "check") {
      code = cmd_check(ctx);
    } else {
      throw ConfigError("unknown command: " + options.command);
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_manifest(ctx, wall);
    return code;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << " (index " << e.index() << ")\n";
    return kExitNumerical;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Json::exception& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "invalid argument: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::out_of_range& e) {
    err << "out of range: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
}

}  // namespace phs
