#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <unistd.h>

#include "helpers.hpp"
#include "phs/cli.hpp"
#include "phs/dataset_io.hpp"
#include "phs/errors.hpp"

using namespace phs;
using namespace phs::test;
namespace fs = std::filesystem;

namespace {

struct Workspace {
  fs::path root;
  explicit Workspace(const std::string& name)
      : root(fs::temp_directory_path() / ("phs_cli_" + name + "_" + std::to_string(::getpid()))) {
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~Workspace() { fs::remove_all(root); }

  std::string write(const std::string& file, const Json& doc) const {
    const fs::path p = root / file;
    std::ofstream(p) << doc.dump(2);
    return p.string();
  }
};

struct Outcome {
  int code;
  std::string log;
  std::string err;
};

Outcome run(const std::string& command, const std::string& config, const fs::path& out,
            std::optional<std::uint64_t> seed = std::nullopt, bool baseline = false) {
  CliOptions o;
  o.command = command;
  o.config = config;
  o.out = out.string();
  o.seed = seed;
  o.baseline_penalty = baseline;
  std::ostringstream log, err;
  const int code = run_command(o, log, err);
  return {code, log.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Json toy_train_config(int epochs) {
  return Json{{"schema_version", 1},
              {"dataset", "toy.csv"},
              {"model",
               {{"hidden", {16, 16}},
                {"relaxation", true},
                {"J", {{"mode", "fixed"}, {"matrix", "canonical"}}}}},
              {"train", {{"epochs", epochs}, {"batch_size", 32}, {"learning_rate", 3e-3}, {"integrator", "rk4"}}}};
}

}  // namespace

TEST_CASE("gen-data writes datasets and a manifest with matching digests") {
  Workspace ws("gen");
  const std::string toda = ws.write("toda.json", Json{{"schema_version", 1}, {"benchmark", "toda"}});
  const Outcome a = run("gen-data", toda, ws.root / "a");
  REQUIRE(a.code == 0);
  const Dataset ds = read_dataset((ws.root / "a" / "dataset.csv").string());
  CHECK(ds.transition_count() == 10000);

  const Json manifest = read_json_file((ws.root / "a" / "manifest.json").string());
  CHECK(manifest.at("command") == "gen-data");
  CHECK(manifest.at("tool_version") == kToolVersion);
  CHECK(manifest.at("config").at("toda").at("pinning") == 0.5);
  for (const auto& o : manifest.at("outputs")) {
    CHECK(o.at("sha256") == sha256_file((ws.root / "a" / o.at("path").get<std::string>()).string()));
  }
  int manifests = 0;
  for (const auto& e : fs::directory_iterator(ws.root / "a")) manifests += e.path().filename() == "manifest.json";
  CHECK(manifests == 1);

  const Outcome b = run("gen-data", toda, ws.root / "b");
  REQUIRE(b.code == 0);
  CHECK(slurp(ws.root / "a" / "dataset.csv") == slurp(ws.root / "b" / "dataset.csv"));
  CHECK(slurp(ws.root / "a" / "dataset.json") == slurp(ws.root / "b" / "dataset.json"));

  const Outcome c = run("gen-data", toda, ws.root / "c", 99);
  REQUIRE(c.code == 0);
  CHECK(slurp(ws.root / "a" / "dataset.csv") != slurp(ws.root / "c" / "dataset.csv"));

  const std::string pend = ws.write(
      "pend.json", Json{{"schema_version", 1}, {"benchmark", "pendulum"}, {"pendulum", {{"mesh", 4}}}});
  REQUIRE(run("gen-data", pend, ws.root / "p").code == 0);
  CHECK(read_dataset((ws.root / "p" / "dataset.csv").string()).transition_count() == 3200);
}

TEST_CASE("configuration errors exit with code 2") {
  Workspace ws("errors");
  CHECK(run("gen-data", (ws.root / "missing.json").string(), ws.root / "o").code == kExitUsage);
  std::ofstream(ws.root / "broken.json") << "{";
  CHECK(run("gen-data", (ws.root / "broken.json").string(), ws.root / "o").code == kExitUsage);
  CHECK(run("gen-data", ws.write("v.json", Json{{"schema_version", 7}}), ws.root / "o").code == kExitUsage);
  CHECK(run("gen-data", ws.write("b.json", Json{{"schema_version", 1}, {"benchmark", "lorenz"}}), ws.root / "o")
            .code == kExitUsage);
  CHECK(run("gen-data",
            ws.write("t.json", Json{{"schema_version", 1}, {"benchmark", "toda"}, {"toda", {{"dt", -1.0}}}}),
            ws.root / "o")
            .code == kExitUsage);
  CHECK(run("frobnicate", ws.write("f.json", Json{{"schema_version", 1}}), ws.root / "o").code == kExitUsage);
  const Outcome missing_data = run("train", ws.write("tr.json", Json{{"schema_version", 1}}), ws.root / "o");
  CHECK(missing_data.code == kExitUsage);
  CHECK(missing_data.err.find("dataset") != std::string::npos);
}

TEST_CASE("train, eval, roa and check on a toy system") {
  Workspace ws("toy");
  write_dataset(oscillator_dataset(8, 25, 0.1, 15), (ws.root / "toy.csv").string());
  const std::string train = ws.write("train.json", toy_train_config(500));
  const Outcome t = run("train", train, ws.root / "model");
  REQUIRE(t.code == 0);
  const Json history = read_json_file((ws.root / "model" / "history.json").string());
  const auto losses = history.at("loss").get<std::vector<double>>();
  CHECK(losses.size() == 500);
  const Json manifest = read_json_file((ws.root / "model" / "manifest.json").string());
  CHECK(manifest.at("metrics").at("final_loss").get<double>() <=
        0.01 * manifest.at("metrics").at("initial_loss").get<double>());
  CHECK(manifest.at("metrics").at("equilibrium_grad_norms")[0] == 0.0);
  CHECK(manifest.at("inputs").size() == 3);

  // dimension mismatch between the model block and the dataset
  Json wrong = toy_train_config(1);
  wrong["model"]["state_dim"] = 4;
  CHECK(run("train", ws.write("wrong.json", wrong), ws.root / "w").code == kExitUsage);

  const std::string model_path = (ws.root / "model" / "model.json").string();
  const std::string eval = ws.write("eval.json", Json{{"schema_version", 1},
                                                      {"model", model_path},
                                                      {"scenario", "custom"},
                                                      {"x0", {0.5, 0.0}},
                                                      {"horizon", 5.0}});
  const Outcome e = run("eval", eval, ws.root / "eval");
  REQUIRE(e.code == 0);
  CHECK(e.err.find("warning") != std::string::npos);
  CHECK(fs::exists(ws.root / "eval" / "learned.csv"));
  CHECK_FALSE(fs::exists(ws.root / "eval" / "truth.csv"));
  CHECK(run("eval", ws.write("e2.json", Json{{"schema_version", 1}, {"model", model_path}, {"scenario", "toda-pulse"}}),
            ws.root / "e2")
            .code == kExitUsage);

  const std::string roa = ws.write("roa.json", Json{{"schema_version", 1}, {"model", model_path}, {"starts", 5},
                                                    {"start_dt", 1e-2}, {"start_horizon", 2000.0}});
  const Outcome r = run("roa", roa, ws.root / "roa");
  REQUIRE(r.code == 0);
  const Json report = read_json_file((ws.root / "roa" / "roa.json").string());
  CHECK(report.at("c").get<double>() > 0.0);
  CHECK(report.at("membership_verified") == true);
  CHECK(report.at("starts").at("converged") == 5);
  CHECK(fs::exists(ws.root / "roa" / "roa_points.csv"));
  const std::string roa_bad = ws.write("roa_bad.json", Json{{"schema_version", 1}, {"model", model_path}, {"equilibrium", 3}});
  CHECK(run("roa", roa_bad, ws.root / "roa_bad").code == kExitUsage);

  const std::string check = ws.write("check.json", Json{{"schema_version", 1}, {"model", model_path}});
  CHECK(run("check", check, ws.root / "check").code == 0);
  CHECK(read_json_file((ws.root / "check" / "check.json").string()).at("pass") == true);

  // the baseline flag trains an ungated model that fails the exact check
  const Outcome b = run("train", ws.write("b.json", toy_train_config(50)), ws.root / "base", std::nullopt, true);
  REQUIRE(b.code == 0);
  const std::string base_model = (ws.root / "base" / "model.json").string();
  CHECK(read_json_file(base_model).at("hamiltonian").at("gated") == false);
  CHECK(run("check", ws.write("bc.json", Json{{"schema_version", 1}, {"model", base_model}}), ws.root / "bc").code ==
        kExitNumerical);
  CHECK(run("roa", ws.write("br.json", Json{{"schema_version", 1}, {"model", base_model}}), ws.root / "br").code ==
        kExitUsage);
}

TEST_CASE("training reruns with the same seed are identical") {
  Workspace ws("rerun");
  write_dataset(oscillator_dataset(4, 20, 0.1, 3), (ws.root / "toy.csv").string());
  const std::string cfg = ws.write("train.json", toy_train_config(5));
  REQUIRE(run("train", cfg, ws.root / "a", 11).code == 0);
  REQUIRE(run("train", cfg, ws.root / "b", 11).code == 0);
  REQUIRE(run("train", cfg, ws.root / "c", 12).code == 0);
  CHECK(slurp(ws.root / "a" / "history.json") == slurp(ws.root / "b" / "history.json"));
  CHECK(slurp(ws.root / "a" / "model.json") == slurp(ws.root / "b" / "model.json"));
  CHECK(slurp(ws.root / "a" / "history.json") != slurp(ws.root / "c" / "history.json"));
  CHECK(read_json_file((ws.root / "a" / "manifest.json").string()).at("seeds").at("train") == 11);
}

TEST_CASE("numerical failure during training exits with code 3") {
  Workspace ws("nan");
  Dataset ds = oscillator_dataset(2, 10, 0.1, 4);
  ds.states[5] *= 1e200;
  write_dataset(ds, (ws.root / "toy.csv").string());
  const Outcome o = run("train", ws.write("train.json", toy_train_config(2)), ws.root / "o");
  CHECK(o.code == kExitNumerical);
  CHECK(o.err.find("numerical") != std::string::npos);
}

TEST_CASE("ground truth evaluated against itself has zero error") {
  const TodaSystem toda{TodaConfig{}};
  auto pulse = [](double t) { return Eigen::VectorXd::Constant(1, test_signal(SignalKind::kPulse, t)); };
  const Trajectory a = simulate(toda, Eigen::VectorXd::Zero(10), pulse, TimeGrid{0.0, 0.01, 1000}, Method::kRk4);
  CHECK(trajectory_rmse(a.states, a.states) == 0.0);
  CHECK_THROWS_AS(trajectory_rmse(a.states, {}), std::invalid_argument);
}

TEST_CASE("eval scenario specs") {
  Json cfg = Json::object();
  const EvalSpec toda = eval_spec_from_json(cfg);
  CHECK(toda.scenario == "toda-pulse");
  CHECK(toda.horizon == 60.0);
  CHECK(toda.method == Method::kRk4);
  Json pend{{"scenario", "pendulum-x0-1"}};
  CHECK(eval_spec_from_json(pend).horizon == 30.0);
  Json bad{{"dt", 0.0}};
  CHECK_THROWS_AS(eval_spec_from_json(bad), ConfigError);
}
