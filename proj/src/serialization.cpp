#include "phs/serialization.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "phs/errors.hpp"

namespace phs {

Json matrix_to_json(const Eigen::MatrixXd& m) {
  Json data = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index k = 0; k < m.cols(); ++k) data.push_back(m(i, k));
  }
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Eigen::MatrixXd matrix_from_json(const Json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (rows < 0 || cols < 0 || static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw ConfigError("matrix data does not match its shape");
  }
  Eigen::MatrixXd m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = data[k++].get<double>();
  }
  return m;
}

Json vector_to_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Eigen::VectorXd vector_from_json(const Json& j) {
  if (!j.is_array()) throw ConfigError("expected a numeric array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

Json mlp_to_json(const Mlp& net) {
  Json weights = Json::array();
  Json biases = Json::array();
  for (std::size_t k = 0; k < net.layer_count(); ++k) {
    weights.push_back(matrix_to_json(net.weights()[k]));
    biases.push_back(vector_to_json(net.biases()[k]));
  }
  return Json{{"widths", net.widths()},
              {"hidden_activation", "tanh"},
              {"output_activation", to_string(net.output_activation())},
              {"weights", std::move(weights)},
              {"biases", std::move(biases)}};
}

Mlp mlp_from_json(const Json& j) {
  if (j.value("hidden_activation", "tanh") != "tanh") {
    throw ConfigError("only tanh hidden layers are supported");
  }
  Mlp net(j.at("widths").get<std::vector<int>>(),
          output_activation_from_string(j.at("output_activation").get<std::string>()));
  const auto& weights = j.at("weights");
  const auto& biases = j.at("biases");
  if (weights.size() != net.layer_count() || biases.size() != net.layer_count()) {
    throw ConfigError("network layer count does not match its widths");
  }
  for (std::size_t k = 0; k < net.layer_count(); ++k) {
    Eigen::MatrixXd w = matrix_from_json(weights[k]);
    Eigen::VectorXd b = vector_from_json(biases[k]);
    if (w.rows() != net.weights()[k].rows() || w.cols() != net.weights()[k].cols() ||
        b.size() != net.biases()[k].size()) {
      throw ConfigError("network layer " + std::to_string(k) + " has the wrong shape");
    }
    net.weights()[k] = std::move(w);
    net.biases()[k] = std::move(b);
  }
  return net;
}

namespace {

Json pattern_to_json(const EntryPattern& pattern) {
  Json out = Json::array();
  for (const auto& [i, k] : pattern) out.push_back({i, k});
  return out;
}

EntryPattern pattern_from_json(const Json& j) {
  EntryPattern out;
  for (const auto& e : j) out.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
  return out;
}

Json param_to_json(const MatrixParam& p) {
  Json out{{"mode", to_string(p.mode)}};
  switch (p.mode) {
    case StructureMode::kFixed: out["matrix"] = matrix_to_json(p.fixed); break;
    case StructureMode::kConstant:
      out["pattern"] = pattern_to_json(p.pattern);
      out["coeffs"] = vector_to_json(p.coeffs);
      break;
    case StructureMode::kStateDependent:
      out["pattern"] = pattern_to_json(p.pattern);
      out["offset"] = p.offset;
      break;
  }
  return out;
}

MatrixParam param_from_json(const Json& j) {
  switch (structure_mode_from_string(j.at("mode").get<std::string>())) {
    case StructureMode::kFixed: return MatrixParam::make_fixed(matrix_from_json(j.at("matrix")));
    case StructureMode::kConstant:
      return MatrixParam::make_constant(pattern_from_json(j.at("pattern")),
                                        vector_from_json(j.at("coeffs")));
    case StructureMode::kStateDependent: {
      MatrixParam p = MatrixParam::make_state_dependent(pattern_from_json(j.at("pattern")));
      p.offset = j.at("offset").get<int>();
      return p;
    }
  }
  throw ConfigError("unknown structure mode");
}

}  // namespace

Json model_to_json(const PHModel& model) {
  const auto& ham = model.neural_hamiltonian();
  Json eqs = Json::array();
  for (const auto& e : ham.equilibria().items()) {
    eqs.push_back({{"point", vector_to_json(e.point)}, {"radius", e.radius}});
  }
  Json hj{{"gated", ham.gated()},
          {"order", ham.order()},
          {"delta", ham.delta()},
          {"equilibria", std::move(eqs)},
          {"net", mlp_to_json(ham.net())},
          {"relaxation", ham.relaxed() ? mlp_to_json(ham.relaxation_net()) : Json(nullptr)}};
  const auto& s = model.structure();
  Json sj{{"J", param_to_json(s.j())},
          {"R", param_to_json(s.r())},
          {"G", param_to_json(s.g())},
          {"net", s.has_net() ? mlp_to_json(s.net()) : Json(nullptr)}};
  return Json{{"schema_version", kModelSchemaVersion},
              {"kind", "phs-model"},
              {"state_dim", model.state_dim()},
              {"input_dim", model.input_dim()},
              {"hamiltonian", std::move(hj)},
              {"structure", std::move(sj)}};
}

PHModel model_from_json(const Json& j) {
  try {
    if (j.at("schema_version").get<int>() != kModelSchemaVersion) {
      throw ConfigError("unsupported model schema version");
    }
    const int n = j.at("state_dim").get<int>();
    const int m = j.at("input_dim").get<int>();
    const auto& hj = j.at("hamiltonian");
    std::vector<Equilibrium> eqs;
    for (const auto& e : hj.at("equilibria")) {
      eqs.push_back(Equilibrium{vector_from_json(e.at("point")), e.at("radius").get<double>()});
    }
    std::optional<Mlp> relaxation;
    if (hj.contains("relaxation") && !hj.at("relaxation").is_null()) {
      relaxation = mlp_from_json(hj.at("relaxation"));
    }
    NeuralHamiltonian ham(mlp_from_json(hj.at("net")), EquilibriumSet(std::move(eqs)),
                          hj.at("order").get<int>(), hj.at("delta").get<double>(),
                          std::move(relaxation), hj.at("gated").get<bool>());
    const auto& sj = j.at("structure");
    std::optional<Mlp> net;
    if (sj.contains("net") && !sj.at("net").is_null()) net = mlp_from_json(sj.at("net"));
    StructureParam structure(n, m, param_from_json(sj.at("J")), param_from_json(sj.at("R")),
                             param_from_json(sj.at("G")), std::move(net));
    return PHModel(std::move(structure), std::move(ham));
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed model document: ") + e.what());
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid model: ") + e.what());
  }
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << contents;
    out.flush();
    if (!out) throw std::runtime_error("failed writing " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot move " + tmp + " to " + path + ": " + ec.message());
  }
}

void save_model(const PHModel& model, const std::string& path) {
  write_file_atomic(path, model_to_json(model).dump(2) + "\n");
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ConfigError("cannot parse " + path + ": " + e.what());
  }
}

PHModel load_model(const std::string& path) { return model_from_json(read_json_file(path)); }

}  // namespace phs
