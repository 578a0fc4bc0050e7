#pragma once

#include <string>

#include <json.hpp>

#include "phs/mlp.hpp"
#include "phs/ph_model.hpp"

namespace phs {

using Json = nlohmann::json;

inline constexpr int kModelSchemaVersion = 1;

// Matrices are stored as {"rows", "cols", "data"} with data in row-major
// order. Doubles are written in shortest round-trip form, so a save/load
// cycle reproduces every finite parameter bit for bit.
Json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const Json& j);
Json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const Json& j);

Json mlp_to_json(const Mlp& net);
Mlp mlp_from_json(const Json& j);

Json model_to_json(const PHModel& model);
/// Throws ConfigError on a malformed document.
PHModel model_from_json(const Json& j);

/// Writes atomically (temporary file, then rename).
void save_model(const PHModel& model, const std::string& path);
PHModel load_model(const std::string& path);

/// Reads a whole JSON file; ConfigError on missing file or bad syntax.
Json read_json_file(const std::string& path);

/// Writes `contents` to `path` through a temporary file and a rename.
void write_file_atomic(const std::string& path, const std::string& contents);

}  // namespace phs
