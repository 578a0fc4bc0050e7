#include "phs/dataset_io.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "phs/errors.hpp"

namespace phs {

std::string sidecar_path(const std::string& csv_path) {
  return std::filesystem::path(csv_path).replace_extension(".json").string();
}

std::string dataset_csv(const Dataset& ds) {
  std::ostringstream out;
  out << "t";
  for (int i = 0; i < ds.state_dim; ++i) out << ",x" << i + 1;
  for (int i = 0; i < ds.input_dim; ++i) out << ",u" << i + 1;
  out << '\n' << std::setprecision(17);
  for (std::size_t k = 0; k < ds.times.size(); ++k) {
    out << ds.times[k];
    for (int i = 0; i < ds.state_dim; ++i) out << ',' << ds.states[k][i];
    for (int i = 0; i < ds.input_dim; ++i) out << ',' << ds.inputs[k][i];
    out << '\n';
  }
  return out.str();
}

void write_dataset(const Dataset& ds, const std::string& csv_path, const Json& extra) {
  ds.validate();
  Json segments = Json::array();
  for (const auto& [b, e] : ds.segments) segments.push_back({b, e});
  Json side{{"schema_version", 1},
            {"kind", "phs-dataset"},
            {"state_dim", ds.state_dim},
            {"input_dim", ds.input_dim},
            {"dt", ds.dt},
            {"irregular", ds.irregular},
            {"source", ds.source},
            {"seed", ds.seed},
            {"samples", ds.times.size()},
            {"transitions", ds.transition_count()},
            {"segments", std::move(segments)},
            {"generator", extra}};
  write_file_atomic(csv_path, dataset_csv(ds));
  write_file_atomic(sidecar_path(csv_path), side.dump(2) + "\n");
}

namespace {

double parse_number(const std::string& field, std::size_t line) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw ConfigError("line " + std::to_string(line) + ": not a number: '" + field + "'");
  }
  return v;
}

}  // namespace

Dataset read_dataset(const std::string& csv_path) {
  const Json side = read_json_file(sidecar_path(csv_path));
  Dataset ds;
  try {
    ds.state_dim = side.at("state_dim").get<int>();
    ds.input_dim = side.at("input_dim").get<int>();
    ds.dt = side.at("dt").get<double>();
    ds.irregular = side.value("irregular", false);
    ds.source = side.value("source", "");
    ds.seed = side.value("seed", std::uint64_t{0});
    for (const auto& s : side.at("segments")) {
      ds.segments.emplace_back(s.at(0).get<std::size_t>(), s.at(1).get<std::size_t>());
    }
  } catch (const Json::exception& e) {
    throw ConfigError("malformed dataset sidecar: " + std::string(e.what()));
  }
  if (ds.state_dim <= 0 || ds.input_dim < 0) throw ConfigError("dataset sidecar has bad dimensions");

  std::ifstream in(csv_path);
  if (!in) throw ConfigError("cannot open " + csv_path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("dataset CSV is empty");
  const std::size_t columns = 1 + static_cast<std::size_t>(ds.state_dim + ds.input_dim);
  std::size_t line_no = 1;
  std::vector<std::string> fields;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    fields.clear();
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      fields.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (fields.size() != columns) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected " +
                        std::to_string(columns) + " columns");
    }
    Eigen::VectorXd x(ds.state_dim), u(ds.input_dim);
    ds.times.push_back(parse_number(fields[0], line_no));
    for (int i = 0; i < ds.state_dim; ++i) x[i] = parse_number(fields[1 + i], line_no);
    for (int i = 0; i < ds.input_dim; ++i) u[i] = parse_number(fields[1 + ds.state_dim + i], line_no);
    ds.states.push_back(std::move(x));
    ds.inputs.push_back(std::move(u));
  }
  ds.validate();
  return ds;
}

}  // namespace phs
