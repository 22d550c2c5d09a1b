#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fraclinf/fraclap.hpp"
#include "fraclinf/grid.hpp"

namespace fraclinf {

/// A restricted to the Omega columns plus the fixed exterior contribution:
/// for any competitor u = u0 off Omega, Au = b + A_omega * u|_Omega.
struct ReducedSystem {
  Eigen::MatrixXd A_omega;          // node_count x interior_count
  Eigen::VectorXd b;                // A (u0 with Omega entries zeroed)
  Eigen::VectorXd mass;             // w_i h^n, sums to 1
  Eigen::VectorXd abs_row_sums;     // sum_k |A_ik| over Omega columns
};

struct ProblemSpec {
  GridPtr grid;
  DomainSpec domain;
  std::shared_ptr<const FracLapOperator> op;
  WeightField weight;
  ScalarField exterior_data;
  SupremandF supremand;
  double s = 0.0;
  int n = 1;
  /// u0 vanishes on the exterior; solvers return zeros and the dual is undefined.
  bool degenerate = false;
  std::shared_ptr<const ReducedSystem> reduced;
};

/// Validates n > 2s, grid agreement and the exterior data, then caches the
/// reduced system. Trivial data are rejected unless `allow_degenerate`.
ProblemSpec assemble_problem(GridPtr grid, DomainSpec domain, std::shared_ptr<const FracLapOperator> op,
                             WeightField weight, ScalarField exterior_data,
                             SupremandF supremand = identity_supremand(), bool allow_degenerate = false);

enum class Optimizer { newton, lbfgs };

struct SolverOptions {
  Optimizer method = Optimizer::newton;
  /// Bound on the relative stationarity measure (see StageResult::gradient_norm).
  /// Non-positive selects the default 1e-9 * sqrt(node_count).
  double tol_grad = 0.0;
  int max_iterations = 2000;
  int lbfgs_memory = 12;
};

double default_tolerance(const ProblemSpec& spec);

struct StageResult {
  double p = 2.0;
  ScalarField u;
  double e_p = 0.0;
  /// |sum_i c_i r_i^{p-1} sgn(F_i) F_xi A_ik| over Omega, relative to the same
  /// sum with absolute values; r_i = |F_i| / max|F|. Zero at the exact minimiser.
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Objective actually minimised (e_p for solve_p, A_p for solve_penalized).
  double objective = 0.0;
  std::optional<ScalarField> f_p;
};

struct ContinuationResult {
  std::vector<StageResult> stages;
  std::vector<double> p_schedule;
  /// e at p_max: a monotone lower estimate of e_infinity.
  double e_inf_estimate = 0.0;
  /// Intercept of the least-squares fit e_p = e_inf - C/p over the last four stages.
  double e_inf_extrapolated = 0.0;
  /// Change of the intercept when refitting with the last three stages only.
  double extrapolation_delta = 0.0;
  ScalarField u_inf_estimate;
  bool all_converged = true;
  bool degenerate = false;
};

/// (sum_i |F(x_i, (Au)_i)|^p w_i h^n)^{1/p}, evaluated with max|F| factored out.
/// p = +infinity gives the discrete sup.
double eval_Ep(const ProblemSpec& spec, const ScalarField& u, double p);

/// Gradient of sum_i |F(x_i,(Au)_i)|^p w_i h^n w.r.t. the Omega values; zero off Omega.
ScalarField grad_Ep_p(const ProblemSpec& spec, const ScalarField& u, double p);

/// E_p(v) + (1/2) mean over Omega of (v - target)^2.
double eval_Ap(const ProblemSpec& spec, const ScalarField& v, const ScalarField& target, double p);

/// Competitor with u0 off Omega and `interior` (or zeros) on Omega.
ScalarField feasible_field(const ProblemSpec& spec, const std::vector<double>* interior = nullptr);

StageResult solve_p(const ProblemSpec& spec, double p, const ScalarField& warm_start,
                    const SolverOptions& options = {});

ContinuationResult continuation(const ProblemSpec& spec, const std::vector<double>& p_schedule,
                                const SolverOptions& options = {},
                                const std::optional<ScalarField>& warm_start = std::nullopt);

StageResult solve_penalized(const ProblemSpec& spec, double p, const ScalarField& target,
                            const SolverOptions& options = {});

/// Least-squares intercept of e = a - C/p over the given stages.
double extrapolate_e_inf(const std::vector<StageResult>& stages, std::size_t last_k);

std::vector<double> default_p_schedule();

}  // namespace fraclinf
