#pragma once

#include <string>

#include "phs/serialization.hpp"
#include "phs/training.hpp"

namespace phs {

/// CSV `t,x1..xn,u1..um` (17 significant digits) plus a JSON sidecar at
/// `<csv path without extension>.json` holding dims, dt, segments, source,
/// seed and any generator metadata passed in `extra`.
void write_dataset(const Dataset& dataset, const std::string& csv_path,
                   const Json& extra = Json::object());

/// Reads a dataset written by write_dataset and validates it. Throws
/// ConfigError on malformed input.
Dataset read_dataset(const std::string& csv_path);

std::string dataset_csv(const Dataset& dataset);
std::string sidecar_path(const std::string& csv_path);

}  // namespace phs
