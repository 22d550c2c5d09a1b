#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "fraclinf/dual_measure.hpp"
#include "fraclinf/lp_solver.hpp"

namespace fraclinf {

/// 17 significant digits, enough to round-trip any double.
std::string format_double(double x);

/// Column-oriented table written as CSV: a "# config_hash: ..." comment line,
/// a header row, then one row per entry.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add_row(const std::vector<double>& values);
};

void write_csv(const std::string& path, const CsvTable& table, const std::string& config_hash);
void write_json(const std::string& path, const nlohmann::json& doc);
nlohmann::json read_json(const std::string& path);
void ensure_directory(const std::string& path);

/// x[,y], u0, u, Au per node.
CsvTable field_table(const ProblemSpec& spec, const StageResult& stage);
/// x[,y], f, sign, zero_band per node.
CsvTable dual_table(const ProblemSpec& spec, const DualField& dual);
/// p, e_p, gradient_norm, iterations, converged per stage.
CsvTable trajectory_table(const ContinuationResult& result);

/// Dense operator (row per node) and the tail vector.
CsvTable operator_matrix_table(const FracLapOperator& op);
CsvTable operator_tail_table(const FracLapOperator& op);

/// Stage rows and check rows of a report.
CsvTable report_stage_table(const nlohmann::json& report);
CsvTable report_check_table(const nlohmann::json& report);

/// Label for p in file names: "p2", "p16", "p2.5".
std::string p_label(double p);

}  // namespace fraclinf
