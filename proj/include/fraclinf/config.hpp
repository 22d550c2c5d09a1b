#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "fraclinf/lp_solver.hpp"

namespace fraclinf {

/// Everything one experiment needs. Mirrors the JSON config schema:
///
///   n, s, L, h                      lattice and operator
///   omega: [{type: interval|box|ball, ...}]
///   exterior_data: {family, bumps: [{center, radius, amplitude}] | samples}
///   weight: {kind: gaussian|rational, sigma}
///   p_schedule, tolerances: {tol_grad, max_iterations}, optimizer
///   supremand: {name, parameter}, seed, allow_degenerate, output_dir
struct RunConfig {
  std::string scenario = "custom";
  int n = 1;
  double s = 0.25;
  double L = 4.0;
  double h = 1.0 / 64.0;
  std::vector<Shape> omega;
  ExteriorData exterior;
  WeightKind weight_kind = WeightKind::gaussian;
  double weight_sigma = 0.0;  // 0 selects L / 2
  std::vector<double> p_schedule = default_p_schedule();
  bool schedule_defaulted = false;
  double tol_grad = 0.0;  // 0 selects 1e-9 sqrt(node_count)
  int max_iterations = 2000;
  Optimizer optimizer = Optimizer::newton;
  std::string supremand = "identity";
  double supremand_parameter = 0.0;
  std::uint64_t seed = 0;
  bool allow_degenerate = false;
  std::string output_dir = "fraclinf-out";
};

/// Validates a parsed JSON document, collecting every violation before
/// throwing (ErrorCode::hypothesis_violation when only hypotheses fail,
/// ErrorCode::config_error otherwise).
RunConfig config_from_json(const nlohmann::json& doc);
RunConfig parse_config(const std::string& path);

/// Canonical form with every default filled in; `output_dir` is left out so
/// the hash depends on the experiment only.
nlohmann::json config_to_json(const RunConfig& cfg);
/// FNV-1a 64 of the canonical dump, as 16 hex digits.
std::string config_hash(const RunConfig& cfg);

/// Built-in scenarios: bump1d, twobump1d, ball2d, trivial1d.
RunConfig scenario_config(const std::string& name);
std::vector<std::string> scenario_names();

struct BuiltProblem {
  ProblemSpec spec;
  SolverOptions options;
};

BuiltProblem build_problem(const RunConfig& cfg);

}  // namespace fraclinf
