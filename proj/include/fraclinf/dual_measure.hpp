#pragma once

#include <cstdint>
#include <vector>

#include "fraclinf/lp_solver.hpp"

namespace fraclinf {

/// f_p = e_p^{1-p} w |F|^{p-2} F with F = F(x, (Au_p)(x)); for the identity
/// supremand this is e_p^{1-p} w |Au_p|^{p-2} Au_p.
struct DualField {
  double p = 2.0;
  ScalarField f;
  /// sum_i |f_i| h^n
  double mass = 0.0;
  std::vector<int> sign;
  /// |f_i| < delta_zero
  std::vector<std::uint8_t> zero_band;
  /// delta_zero_rel * max over Omega of |f|
  double delta_zero = 0.0;
};

/// `delta_zero_rel` sets the zero band relative to max over Omega of |f|. Throws
/// ErrorCode::trivial_problem when e_p = 0.
DualField dual_field(const StageResult& stage, const ProblemSpec& spec, double delta_zero_rel = 1e-3);

/// |sum_i f_i F_i h^n - e_p| / e_p.
double duality_identity(const DualField& dual, const StageResult& stage, const ProblemSpec& spec);

/// Tensor-product smooth bumps at five interior centres and two widths, each
/// vanishing on every exterior node.
std::vector<ScalarField> default_test_functions(const ProblemSpec& spec);

/// For each phi: |sum_i f_i F_xi,i (A phi)_i h^n| / (|f|_2 |A phi|_2), discrete L2
/// norms with weight h^n. `stage` supplies Au_p for the F_xi factor; it is
/// unused for the identity supremand. Throws when some phi is nonzero off Omega.
std::vector<double> sharmonicity_residual(const DualField& dual, const ProblemSpec& spec,
                                          const std::vector<ScalarField>& test_functions,
                                          const StageResult* stage = nullptr);

/// Connected component of {|f| >= 1e-3 max|f|} among exterior nodes.
struct SignComponent {
  int sign = 0;  // +1, -1, or 0 when the component mixes signs
  std::size_t nodes = 0;
  double mass = 0.0;
};

struct MeasureDiagnostics {
  ScalarField f_inf;
  double total_mass = 0.0;
  double interior_mass = 0.0;
  double exterior_mass = 0.0;
  /// Smallest R with mass outside B_R(0) below 1e-6.
  double support_radius = 0.0;
  std::vector<double> sharmonicity_residuals;
  std::vector<SignComponent> sign_components;
  std::size_t mixed_sign_components = 0;
  /// L1(Omega) norms of f_{p_k} - f_{p_{k+1}}.
  std::vector<double> cauchy_differences;
  /// max over Omega of |f_inf|.
  double nontriviality = 0.0;
  double zero_fraction = 0.0;
};

/// f_inf is the dual at the last stage. Needs at least three stages.
MeasureDiagnostics limit_extraction(const ContinuationResult& result, const ProblemSpec& spec);

/// Fraction of interior nodes with |f| < delta; delta = 0 counts exact zeros.
double zero_set_census(const ScalarField& f, const DomainSpec& domain, double delta);

/// Same problem solved at spacing h and h/2, compared at the last p of the schedule.
struct RefinementDelta {
  double p = 0.0;
  double h_coarse = 0.0;
  double h_fine = 0.0;
  double e_coarse = 0.0;
  double e_fine = 0.0;
  /// sum over coarse Omega nodes of |f_coarse - f_fine| h^n (fine values at shared nodes)
  double f_l1_delta = 0.0;
  /// sum over coarse Omega nodes of |f_coarse| h^n, for scale
  double f_l1_coarse = 0.0;
  /// zero_set_census with each grid's own delta_zero
  double zero_fraction_coarse = 0.0;
  double zero_fraction_fine = 0.0;
  bool converged = false;
};

/// `fine` must share the box with `coarse` at half the spacing. Throws
/// ErrorCode::grid_mismatch otherwise.
RefinementDelta refinement_delta(const ProblemSpec& coarse, const ProblemSpec& fine,
                                 const std::vector<double>& p_schedule, const SolverOptions& options = {});

}  // namespace fraclinf
