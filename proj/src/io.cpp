#include "fraclinf/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

namespace fraclinf {

using nlohmann::json;

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void CsvTable::add_row(const std::vector<double>& values) {
  std::vector<std::string> row;
  row.reserve(values.size());
  for (double v : values) row.push_back(format_double(v));
  rows.push_back(std::move(row));
}

void ensure_directory(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw Error(ErrorCode::io_error, "cannot create directory '" + path + "': " + ec.message());
}

void write_csv(const std::string& path, const CsvTable& table, const std::string& config_hash) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io_error, "cannot write '" + path + "'");
  out << "# config_hash: " << config_hash << "\n";
  for (std::size_t k = 0; k < table.header.size(); ++k) out << (k ? "," : "") << table.header[k];
  out << "\n";
  for (const auto& row : table.rows) {
    for (std::size_t k = 0; k < row.size(); ++k) out << (k ? "," : "") << row[k];
    out << "\n";
  }
  if (!out) throw Error(ErrorCode::io_error, "write to '" + path + "' failed");
}

void write_json(const std::string& path, const json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io_error, "cannot write '" + path + "'");
  out << doc.dump(2) << "\n";
  if (!out) throw Error(ErrorCode::io_error, "write to '" + path + "' failed");
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::io_error, "'" + path + "' is not valid JSON: " + e.what());
  }
}

namespace {

std::vector<std::string> coord_header(int dim) {
  return dim == 1 ? std::vector<std::string>{"x"} : std::vector<std::string>{"x", "y"};
}

std::vector<double> coord_row(const Grid& g, std::size_t i) {
  const Point& x = g.coord(i);
  return g.dim() == 1 ? std::vector<double>{x[0]} : std::vector<double>{x[0], x[1]};
}

}  // namespace

CsvTable field_table(const ProblemSpec& spec, const StageResult& stage) {
  const Grid& g = *spec.grid;
  CsvTable t;
  t.header = coord_header(g.dim());
  t.header.insert(t.header.end(), {"u0", "u", "Au"});
  const ScalarField au = spec.op->apply(stage.u);
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    auto row = coord_row(g, i);
    row.insert(row.end(), {spec.exterior_data[i], stage.u[i], au[i]});
    t.add_row(row);
  }
  return t;
}

CsvTable dual_table(const ProblemSpec& spec, const DualField& dual) {
  const Grid& g = *spec.grid;
  CsvTable t;
  t.header = coord_header(g.dim());
  t.header.insert(t.header.end(), {"f", "sign", "zero_band"});
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    auto row = coord_row(g, i);
    row.insert(row.end(), {dual.f[i], static_cast<double>(dual.sign[i]), static_cast<double>(dual.zero_band[i])});
    t.add_row(row);
  }
  return t;
}

CsvTable trajectory_table(const ContinuationResult& result) {
  CsvTable t;
  t.header = {"p", "e_p", "gradient_norm", "iterations", "converged"};
  for (const auto& st : result.stages)
    t.add_row({st.p, st.e_p, st.gradient_norm, static_cast<double>(st.iterations), st.converged ? 1.0 : 0.0});
  return t;
}

CsvTable operator_matrix_table(const FracLapOperator& op) {
  const Eigen::MatrixXd A = op.dense_matrix();
  CsvTable t;
  for (Eigen::Index j = 0; j < A.cols(); ++j) t.header.push_back("a" + std::to_string(j));
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(A.cols()));
    for (Eigen::Index j = 0; j < A.cols(); ++j) row[static_cast<std::size_t>(j)] = A(i, j);
    t.add_row(row);
  }
  return t;
}

CsvTable operator_tail_table(const FracLapOperator& op) {
  const Grid& g = op.grid();
  CsvTable t;
  t.header = coord_header(g.dim());
  t.header.insert(t.header.end(), {"tail", "diagonal"});
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    auto row = coord_row(g, i);
    row.insert(row.end(), {op.tail()[i], op.diagonal()[i]});
    t.add_row(row);
  }
  return t;
}

CsvTable report_stage_table(const json& report) {
  CsvTable t;
  t.header = {"p", "e_p", "gradient_norm", "iterations", "converged", "mass", "duality_gap", "sharmonicity_max"};
  for (const auto& st : report.value("stages", json::array())) {
    std::vector<std::string> row;
    for (const auto& key : t.header) {
      if (!st.contains(key)) row.push_back("");
      else if (st[key].is_boolean()) row.push_back(st[key].get<bool>() ? "1" : "0");
      else if (st[key].is_number_integer()) row.push_back(std::to_string(st[key].get<long long>()));
      else row.push_back(format_double(st[key].get<double>()));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

CsvTable report_check_table(const json& report) {
  CsvTable t;
  t.header = {"name", "kind", "status"};
  for (const auto& c : report.value("checks", json::array()))
    t.rows.push_back({c.value("name", ""), c.value("kind", ""), c.value("status", "")});
  return t;
}

std::string p_label(double p) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "p%g", p);
  return buf;
}

}  // namespace fraclinf
