#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fraclinf/dual_measure.hpp"
#include "fraclinf/lp_solver.hpp"

namespace fraclinf {

// --- PDE saturation -----------------------------------------------------------

struct SaturationStage {
  double p = 0.0;
  /// |F(x, Au_p)| / e_p on interior nodes (zero elsewhere).
  ScalarField ratio;
  std::vector<double> taus;
  /// Fraction of interior nodes with |ratio - 1| <= tau.
  std::vector<double> fraction;
  /// Same, excluding the zero band of f_p and nodes next to a sign flip of f_p.
  std::vector<double> fraction_excluding;
  double max_ratio = 0.0;
  /// Saturated, non-excluded nodes where sgn(Au_p) differs from sgn(f_p).
  std::size_t sign_mismatches = 0;
  /// Exterior nodes with |f_p| >= 1e-3 max|f_p| and ratio in [1 - tau_gate, 1], as a fraction.
  double exterior_support_fraction = 0.0;
};

struct SaturationReport {
  std::vector<SaturationStage> stages;
  double gate_tau = 0.05;
  double gate_fraction = 0.9;
  /// Excluding-band fraction at gate_tau along the schedule.
  std::vector<double> gate_trend;
  bool nondecreasing = false;
  double final_fraction = 0.0;
  /// Soft: trend nondecreasing and final fraction >= gate_fraction.
  bool pass = false;
};

/// Per-node mask of nodes excluded from saturation statistics: zero band of f
/// plus nodes with a nearest neighbour of opposite sign.
std::vector<std::uint8_t> sign_band_mask(const DualField& dual, const Grid& grid);

/// Fraction of non-excluded interior nodes with |F(x, Au)/e - 1| <= tau.
double saturated_fraction(const ProblemSpec& spec, const ScalarField& u, double e,
                          const std::vector<std::uint8_t>& excluded, double tau);

SaturationReport check_pde_saturation(const ContinuationResult& result, const ProblemSpec& spec,
                                      const std::vector<double>& taus = {0.01, 0.02, 0.05, 0.1, 0.2},
                                      double gate_tau = 0.05, double gate_fraction = 0.9);

// --- decay at infinity --------------------------------------------------------

/// (-Delta)^s u(x) at a point outside the box, where u vanishes:
/// -c h^n sum_j u_j |x - x_j|^{-n-2s}.
double far_field_value(const ProblemSpec& spec, const ScalarField& u, const Point& x);

struct DecayReport {
  std::vector<double> radii;
  std::vector<double> shell_max;
  double fitted_exponent = 0.0;  // minus the log-log slope of shell_max
  double expected_exponent = 0.0;  // n + 2s
  bool nonincreasing = false;
  /// Fitted exponent within 30% of n + 2s.
  bool exponent_ok = false;
};

std::vector<double> default_far_radii(const ProblemSpec& spec);

/// Shell maxima of |(-Delta)^s u_inf| over |x| = R for each radius (1D: x = +-R,
/// 2D: 64 equispaced angles). Every shell must lie outside the box.
DecayReport check_exterior_behaviour(const ContinuationResult& result, const ProblemSpec& spec,
                                     const std::vector<double>& radii);

// --- uniqueness ---------------------------------------------------------------

struct UniquenessReport {
  std::uint64_t seed = 0;
  double p_max = 0.0;
  /// max |u_a - u_b|
  double pair_distance = 0.0;
  /// pair_distance / max |u_a| (u_a includes the exterior data)
  double relative_distance = 0.0;
  /// Penalized route targeting path a: max |v - u_a| / max |u_a|.
  double penalized_distance = 0.0;
  bool penalized_chain_ok = false;
  double fraction_a = 0.0;
  double fraction_b = 0.0;
  double fraction_average = 0.0;
  double average_gap = 0.0;  // max |fraction_average - fraction_{a,b}|
  bool degenerate = false;
  bool pass = false;
};

/// Random feasible start: u0 off Omega, uniform values in [-scale, scale] on Omega.
ScalarField random_feasible_start(const ProblemSpec& spec, std::uint64_t seed, double scale);

/// Path a: continuation from the zero interior start (or `path_a` when given).
/// Path b: continuation from a seeded random feasible start. Also runs the
/// penalized problem at p_max with target u_a. Throws ErrorCode::not_converged
/// when a stage fails.
UniquenessReport uniqueness_experiment(const ProblemSpec& spec, const std::vector<double>& p_schedule,
                                       std::uint64_t seed, const SolverOptions& options = {},
                                       const ContinuationResult* path_a = nullptr);

// --- monotonicity -------------------------------------------------------------

struct MonotoneCheck {
  bool pass = true;
  /// max over k of e_k - e_{k+1}, floored at 0.
  double max_violation = 0.0;
};

/// e_{p_k} <= e_{p_{k+1}} + 1e-10 (1 + e_{p_{k+1}}). Needs at least 2 stages.
MonotoneCheck check_monotone_ep(const ContinuationResult& result);

// --- report -------------------------------------------------------------------

struct ReportContext {
  std::string scenario;
  std::string config_hash;
  std::uint64_t seed = 0;
  double tol_grad = 0.0;
  nlohmann::json config;
};

struct VerificationSuite {
  std::optional<ContinuationResult> result;
  std::vector<DualField> duals;
  std::optional<MeasureDiagnostics> diagnostics;
  std::optional<SaturationReport> saturation;
  std::optional<DecayReport> decay;
  std::optional<UniquenessReport> uniqueness;
};

struct SuiteOptions {
  std::vector<double> p_schedule = default_p_schedule();
  SolverOptions solver;
  std::uint64_t seed = 0;
  bool run_uniqueness = true;
};

/// Runs continuation and every check on one problem. The uniqueness pair is
/// skipped when a continuation stage fails to converge.
VerificationSuite run_suite(const ProblemSpec& spec, const SuiteOptions& options);

/// Aggregates the checks into the "fraclinf-report/1" document. Hard checks
/// decide `hard_pass`; soft checks only report. Throws ErrorCode::invalid_argument
/// listing missing inputs.
nlohmann::json full_report(const ProblemSpec& spec, const VerificationSuite& suite, const ReportContext& context);

/// Whether every hard check in a report passed.
bool report_hard_pass(const nlohmann::json& report);

// Check thresholds.
inline constexpr double mass_slack = 1e-8;
inline constexpr double duality_tolerance = 1e-6;
inline constexpr double sharmonicity_tolerance = 1e-6;
inline constexpr double uniqueness_tolerance = 1e-4;
inline constexpr double saturation_match_tolerance = 0.02;

}  // namespace fraclinf
