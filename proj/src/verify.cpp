#include "fraclinf/verify.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace fraclinf {

using nlohmann::json;

namespace {

double ratio_at(const ProblemSpec& spec, const ScalarField& au, std::size_t i, double e) {
  const double F = spec.supremand.is_identity ? au[i] : spec.supremand.F(spec.grid->coord(i), au[i]);
  return std::abs(F) / e;
}

int sign_of(double x) { return (x > 0.0) - (x < 0.0); }

}  // namespace

std::vector<std::uint8_t> sign_band_mask(const DualField& dual, const Grid& grid) {
  std::vector<std::uint8_t> mask(grid.node_count(), 0);
  for (std::size_t i = 0; i < grid.node_count(); ++i) {
    if (dual.zero_band[i]) {
      mask[i] = 1;
      continue;
    }
    const auto mi = grid.multi_index(i);
    for (int axis = 0; axis < grid.dim() && !mask[i]; ++axis)
      for (int step : {-1, 1}) {
        auto nb = mi;
        nb[axis] += step;
        if (nb[axis] < 0 || nb[axis] > grid.cells()) continue;
        const std::size_t j = grid.flat_index(nb[0], nb[1]);
        if (dual.sign[j] != 0 && dual.sign[j] == -dual.sign[i]) {
          mask[i] = 1;
          break;
        }
      }
  }
  return mask;
}

double saturated_fraction(const ProblemSpec& spec, const ScalarField& u, double e,
                          const std::vector<std::uint8_t>& excluded, double tau) {
  if (!(e > 0.0)) throw Error(ErrorCode::trivial_problem, "saturation undefined for e = 0");
  const ScalarField au = spec.op->apply(u);
  std::size_t total = 0, hit = 0;
  for (std::size_t i : spec.domain.interior_nodes) {
    if (!excluded.empty() && excluded[i]) continue;
    ++total;
    if (std::abs(ratio_at(spec, au, i, e) - 1.0) <= tau) ++hit;
  }
  return total ? static_cast<double>(hit) / static_cast<double>(total) : 0.0;
}

SaturationReport check_pde_saturation(const ContinuationResult& result, const ProblemSpec& spec,
                                      const std::vector<double>& taus, double gate_tau, double gate_fraction) {
  if (spec.degenerate) throw Error(ErrorCode::trivial_problem, "saturation check needs non-trivial exterior data");
  SaturationReport rep;
  rep.gate_tau = gate_tau;
  rep.gate_fraction = gate_fraction;
  const Grid& g = *spec.grid;
  for (const StageResult& st : result.stages) {
    const DualField dual = dual_field(st, spec);
    const auto band = sign_band_mask(dual, g);
    const ScalarField au = spec.op->apply(st.u);
    SaturationStage ss;
    ss.p = st.p;
    ss.taus = taus;
    ss.ratio = ScalarField(spec.grid, 0.0);
    for (std::size_t i : spec.domain.interior_nodes) {
      ss.ratio[i] = ratio_at(spec, au, i, st.e_p);
      ss.max_ratio = std::max(ss.max_ratio, ss.ratio[i]);
    }
    for (double tau : taus) {
      ss.fraction.push_back(saturated_fraction(spec, st.u, st.e_p, {}, tau));
      ss.fraction_excluding.push_back(saturated_fraction(spec, st.u, st.e_p, band, tau));
    }
    for (std::size_t i : spec.domain.interior_nodes)
      if (!band[i] && std::abs(ss.ratio[i] - 1.0) <= gate_tau && sign_of(au[i]) != dual.sign[i]) ++ss.sign_mismatches;
    std::size_t ext = 0, ext_hit = 0;
    const double support_cut = 1e-3 * dual.f.max_abs();
    for (std::size_t i : spec.domain.exterior_nodes) {
      if (std::abs(dual.f[i]) < support_cut) continue;
      ++ext;
      const double r = ratio_at(spec, au, i, st.e_p);
      if (r >= 1.0 - gate_tau && r <= 1.0) ++ext_hit;
    }
    ss.exterior_support_fraction = ext ? static_cast<double>(ext_hit) / static_cast<double>(ext) : 0.0;
    rep.gate_trend.push_back(saturated_fraction(spec, st.u, st.e_p, band, gate_tau));
    rep.stages.push_back(std::move(ss));
  }
  rep.nondecreasing = true;
  for (std::size_t k = 1; k < rep.gate_trend.size(); ++k)
    if (rep.gate_trend[k] < rep.gate_trend[k - 1]) rep.nondecreasing = false;
  rep.final_fraction = rep.gate_trend.empty() ? 0.0 : rep.gate_trend.back();
  rep.pass = rep.nondecreasing && rep.final_fraction >= gate_fraction;
  return rep;
}

double far_field_value(const ProblemSpec& spec, const ScalarField& u, const Point& x) {
  const Grid& g = *spec.grid;
  const int n = g.dim();
  const double L = g.half_width();
  bool outside = false;
  for (int k = 0; k < n; ++k) outside = outside || std::abs(x[k]) > L;
  if (!outside) throw Error(ErrorCode::invalid_argument, "far point lies inside the box");
  const double c = cns_constant(n, spec.s);
  double sum = 0.0;
  for (std::size_t j = 0; j < g.node_count(); ++j)
    if (u[j] != 0.0) sum += u[j] * std::pow(distance(x, g.coord(j), n), -n - 2.0 * spec.s);
  return -c * g.cell_volume() * sum;
}

std::vector<double> default_far_radii(const ProblemSpec& spec) {
  const double L = spec.grid->half_width();
  return {2.0 * L, 4.0 * L, 8.0 * L};
}

DecayReport check_exterior_behaviour(const ContinuationResult& result, const ProblemSpec& spec,
                                     const std::vector<double>& radii) {
  if (radii.size() < 2) throw Error(ErrorCode::invalid_argument, "decay check needs at least two shells");
  const ScalarField& u = result.u_inf_estimate;
  const int n = spec.grid->dim();
  DecayReport rep;
  rep.radii = radii;
  rep.expected_exponent = n + 2.0 * spec.s;
  for (double R : radii) {
    if (!(R > spec.grid->half_width() * (n == 2 ? std::sqrt(2.0) : 1.0)))
      throw Error(ErrorCode::invalid_argument, "far shell intersects the box");
    double mx = 0.0;
    if (n == 1) {
      for (double sgn : {-1.0, 1.0}) mx = std::max(mx, std::abs(far_field_value(spec, u, {sgn * R, 0.0})));
    } else {
      for (int k = 0; k < 64; ++k) {
        const double th = 2.0 * std::numbers::pi * k / 64.0;
        mx = std::max(mx, std::abs(far_field_value(spec, u, {R * std::cos(th), R * std::sin(th)})));
      }
    }
    rep.shell_max.push_back(mx);
  }
  rep.nonincreasing = true;
  for (std::size_t k = 1; k < rep.shell_max.size(); ++k)
    if (rep.shell_max[k] > rep.shell_max[k - 1]) rep.nonincreasing = false;

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t m = 0;
  for (std::size_t k = 0; k < radii.size(); ++k) {
    if (!(rep.shell_max[k] > 0.0)) continue;
    const double x = std::log(radii[k]), y = std::log(rep.shell_max[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  if (m >= 2) {
    const double mm = static_cast<double>(m);
    rep.fitted_exponent = -(mm * sxy - sx * sy) / (mm * sxx - sx * sx);
    rep.exponent_ok = std::abs(rep.fitted_exponent - rep.expected_exponent) <= 0.3 * rep.expected_exponent;
  }
  return rep;
}

ScalarField random_feasible_start(const ProblemSpec& spec, std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  std::vector<double> interior(spec.domain.interior_count());
  // 53 random bits mapped to [-1, 1): identical on every standard library.
  for (double& v : interior) v = scale * (2.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53 - 1.0);
  return feasible_field(spec, &interior);
}

UniquenessReport uniqueness_experiment(const ProblemSpec& spec, const std::vector<double>& p_schedule,
                                       std::uint64_t seed, const SolverOptions& options,
                                       const ContinuationResult* path_a) {
  UniquenessReport rep;
  rep.seed = seed;
  rep.p_max = p_schedule.back();
  ContinuationResult a_local;
  if (!path_a) {
    a_local = continuation(spec, p_schedule, options);
    path_a = &a_local;
  }
  const double scale = std::max(1.0, spec.exterior_data.max_abs());
  const ContinuationResult b = continuation(spec, p_schedule, options, random_feasible_start(spec, seed, scale));
  if (!path_a->all_converged || !b.all_converged)
    throw Error(ErrorCode::not_converged, "uniqueness experiment: a continuation stage did not converge");

  const ScalarField& ua = path_a->u_inf_estimate;
  const ScalarField& ub = b.u_inf_estimate;
  for (std::size_t i = 0; i < ua.size(); ++i) rep.pair_distance = std::max(rep.pair_distance, std::abs(ua[i] - ub[i]));
  const double ua_max = ua.max_abs();
  rep.relative_distance = ua_max > 0.0 ? rep.pair_distance / ua_max : rep.pair_distance;

  if (spec.degenerate) {
    rep.degenerate = true;
    rep.penalized_chain_ok = true;
    rep.pass = rep.pair_distance == 0.0;
    return rep;
  }

  const double p = rep.p_max;
  const StageResult v = solve_penalized(spec, p, ua, options);
  double dv = 0.0;
  for (std::size_t i = 0; i < ua.size(); ++i) dv = std::max(dv, std::abs(v.u[i] - ua[i]));
  rep.penalized_distance = dv / ua_max;
  const double e_a = path_a->stages.back().e_p;
  const double slack = 1e-10 * (1.0 + e_a);
  const double ap = v.objective;
  rep.penalized_chain_ok = e_a <= v.e_p + slack && v.e_p <= ap + slack && ap <= eval_Ep(spec, ua, p) + slack;

  const StageResult& sa = path_a->stages.back();
  const DualField dual = dual_field(sa, spec);
  const auto band = sign_band_mask(dual, *spec.grid);
  ScalarField avg = ua;
  for (std::size_t i = 0; i < avg.size(); ++i) avg[i] = 0.5 * (ua[i] + ub[i]);
  rep.fraction_a = saturated_fraction(spec, ua, sa.e_p, band, 0.05);
  rep.fraction_b = saturated_fraction(spec, ub, b.stages.back().e_p, band, 0.05);
  rep.fraction_average = saturated_fraction(spec, avg, sa.e_p, band, 0.05);
  rep.average_gap = std::max(std::abs(rep.fraction_average - rep.fraction_a), std::abs(rep.fraction_average - rep.fraction_b));
  rep.pass = rep.relative_distance <= uniqueness_tolerance && rep.average_gap <= saturation_match_tolerance;
  return rep;
}

MonotoneCheck check_monotone_ep(const ContinuationResult& result) {
  if (result.stages.size() < 2) throw Error(ErrorCode::invalid_argument, "monotonicity check needs >= 2 stages");
  MonotoneCheck out;
  for (std::size_t k = 0; k + 1 < result.stages.size(); ++k) {
    const double ek = result.stages[k].e_p, en = result.stages[k + 1].e_p;
    out.max_violation = std::max(out.max_violation, ek - en);
    if (ek > en + 1e-10 * (1.0 + en)) out.pass = false;
  }
  return out;
}

VerificationSuite run_suite(const ProblemSpec& spec, const SuiteOptions& options) {
  VerificationSuite suite;
  suite.result = continuation(spec, options.p_schedule, options.solver);
  if (spec.degenerate) return suite;
  for (const auto& st : suite.result->stages) suite.duals.push_back(dual_field(st, spec));
  for (std::size_t k = 0; k < suite.duals.size(); ++k) suite.result->stages[k].f_p = suite.duals[k].f;
  if (suite.result->stages.size() >= 3) suite.diagnostics = limit_extraction(*suite.result, spec);
  suite.saturation = check_pde_saturation(*suite.result, spec);
  suite.decay = check_exterior_behaviour(*suite.result, spec, default_far_radii(spec));
  // A failed stage already fails the convergence check; the pair experiment would only throw.
  if (options.run_uniqueness && suite.result->all_converged)
    suite.uniqueness = uniqueness_experiment(spec, options.p_schedule, options.seed, options.solver, &*suite.result);
  return suite;
}

namespace {

json check(const std::string& name, bool hard, bool pass, json detail) {
  return json{{"name", name}, {"kind", hard ? "hard" : "soft"}, {"status", pass ? "pass" : (hard ? "fail" : "soft-fail")},
              {"detail", std::move(detail)}};
}

}  // namespace

nlohmann::json full_report(const ProblemSpec& spec, const VerificationSuite& suite, const ReportContext& context) {
  std::vector<std::string> missing;
  if (!suite.result) missing.push_back("continuation result");
  if (!spec.degenerate && suite.result) {
    if (suite.duals.size() != suite.result->stages.size()) missing.push_back("dual fields");
    if (!suite.diagnostics) missing.push_back("measure diagnostics");
    if (!suite.saturation) missing.push_back("saturation report");
    if (!suite.decay) missing.push_back("decay report");
  }
  if (!missing.empty()) {
    std::string msg = "report inputs missing:";
    for (const auto& m : missing) msg += " [" + m + "]";
    throw Error(ErrorCode::invalid_argument, msg);
  }
  const ContinuationResult& res = *suite.result;
  const double tol = context.tol_grad > 0.0 ? context.tol_grad : default_tolerance(spec);

  json rep;
  rep["schema"] = "fraclinf-report/1";
  rep["scenario"] = context.scenario;
  rep["config_hash"] = context.config_hash;
  rep["seed"] = context.seed;
  rep["config"] = context.config;
  rep["degenerate"] = spec.degenerate;
  rep["p_schedule"] = res.p_schedule;
  rep["tolerances"] = {{"tol_grad", tol},
                       {"mass_slack", mass_slack},
                       {"duality", duality_tolerance},
                       {"sharmonicity", sharmonicity_tolerance},
                       {"uniqueness", uniqueness_tolerance},
                       {"monotone_relative", 1e-10}};
  rep["e_inf"] = {{"monotone_lower_estimate", res.e_inf_estimate},
                  {"extrapolated", res.e_inf_extrapolated},
                  {"extrapolation_delta", res.extrapolation_delta}};

  json checks = json::array();
  json stages = json::array();
  const auto tests = spec.degenerate ? std::vector<ScalarField>{} : default_test_functions(spec);
  double worst_mass = 0.0, worst_gap = 0.0, worst_sh = 0.0;
  for (std::size_t k = 0; k < res.stages.size(); ++k) {
    const StageResult& st = res.stages[k];
    json js{{"p", st.p}, {"e_p", st.e_p}, {"gradient_norm", st.gradient_norm},
            {"iterations", st.iterations}, {"converged", st.converged}};
    if (!spec.degenerate) {
      const DualField& d = suite.duals[k];
      const double gap = duality_identity(d, st, spec);
      const auto sh = sharmonicity_residual(d, spec, tests, &st);
      const double shmax = sh.empty() ? 0.0 : *std::max_element(sh.begin(), sh.end());
      js["mass"] = d.mass;
      js["duality_gap"] = gap;
      js["sharmonicity_max"] = shmax;
      if (suite.saturation) js["saturated_fraction_gate"] = suite.saturation->gate_trend[k];
      worst_mass = std::max(worst_mass, d.mass);
      worst_gap = std::max(worst_gap, gap);
      worst_sh = std::max(worst_sh, shmax);
    }
    stages.push_back(std::move(js));
  }
  rep["stages"] = std::move(stages);

  checks.push_back(check("stages_converged", true, res.all_converged, json{{"all_converged", res.all_converged}}));
  if (res.stages.size() >= 2) {
    const MonotoneCheck mc = check_monotone_ep(res);
    checks.push_back(check("e_p_monotone", true, mc.pass, json{{"max_violation", mc.max_violation}}));
  }

  if (spec.degenerate) {
    bool zero = true;
    for (const auto& st : res.stages) {
      zero = zero && st.e_p == 0.0;
      for (std::size_t i : spec.domain.interior_nodes) zero = zero && st.u[i] == 0.0;
    }
    bool dual_rejected = false;
    try {
      (void)dual_field(res.stages.back(), spec);
    } catch (const Error& e) {
      dual_rejected = e.code() == ErrorCode::trivial_problem;
    }
    checks.push_back(check("trivial_solution", true, zero, json{{"note", "degenerate scenario"}}));
    checks.push_back(check("dual_undefined", true, dual_rejected, json{{"note", "degenerate scenario"}}));
  } else {
    const MeasureDiagnostics& md = *suite.diagnostics;
    checks.push_back(check("dual_mass_bound", true, worst_mass <= 1.0 + mass_slack, json{{"max_mass", worst_mass}}));
    checks.push_back(check("duality_identity", true, worst_gap <= duality_tolerance, json{{"max_gap", worst_gap}}));
    checks.push_back(check("sharmonicity", true, worst_sh <= sharmonicity_tolerance,
                           json{{"max_residual", worst_sh}, {"test_functions", tests.size()}}));
    const double e_max = res.stages.back().e_p;
    checks.push_back(check("nontriviality", true, e_max > 1e-8 && md.nontriviality > 1e-8 * md.total_mass,
                           json{{"e_p_max", e_max}, {"max_interior_f", md.nontriviality}, {"total_mass", md.total_mass}}));

    const SaturationReport& sat = *suite.saturation;
    std::size_t mismatches = 0;
    for (const auto& s : sat.stages) mismatches += s.sign_mismatches;
    checks.push_back(check("pde_saturation", false, sat.pass,
                           json{{"tau", sat.gate_tau}, {"trend", sat.gate_trend}, {"nondecreasing", sat.nondecreasing},
                                {"final_fraction", sat.final_fraction}, {"required_fraction", sat.gate_fraction}}));
    checks.push_back(check("saturation_sign_agreement", true, mismatches == 0, json{{"mismatches", mismatches}}));
    checks.push_back(check("exterior_support_saturation", false, sat.stages.back().exterior_support_fraction >= 0.5,
                           json{{"fraction", sat.stages.back().exterior_support_fraction}}));

    const DecayReport& dec = *suite.decay;
    checks.push_back(check("far_field_decay", true, dec.nonincreasing, json{{"radii", dec.radii}, {"shell_max", dec.shell_max}}));
    checks.push_back(check("far_field_exponent", false, dec.exponent_ok,
                           json{{"fitted", dec.fitted_exponent}, {"expected", dec.expected_exponent}}));

    bool cauchy_ok = true;
    for (std::size_t k = 1; k < md.cauchy_differences.size(); ++k)
      if (md.cauchy_differences[k] > 1.5 * md.cauchy_differences[k - 1]) cauchy_ok = false;
    checks.push_back(check("interior_cauchy_decrease", false, cauchy_ok, json{{"differences", md.cauchy_differences}}));
    json comps = json::array();
    for (const auto& c : md.sign_components) comps.push_back({{"sign", c.sign}, {"nodes", c.nodes}, {"mass", c.mass}});
    checks.push_back(check("exterior_sign_components", false, md.mixed_sign_components == 0,
                           json{{"components", comps}, {"mixed", md.mixed_sign_components}}));
    checks.push_back(check("zero_set_fraction", false, md.zero_fraction <= 0.2, json{{"fraction", md.zero_fraction}}));
    rep["measure"] = {{"total_mass", md.total_mass},       {"interior_mass", md.interior_mass},
                      {"exterior_mass", md.exterior_mass}, {"support_radius", md.support_radius},
                      {"max_interior_f", md.nontriviality}, {"sharmonicity_residuals", md.sharmonicity_residuals}};
  }

  if (suite.uniqueness) {
    const UniquenessReport& u = *suite.uniqueness;
    checks.push_back(check("uniqueness", true, u.pass,
                           json{{"seed", u.seed}, {"p_max", u.p_max}, {"pair_distance", u.pair_distance},
                                {"relative_distance", u.relative_distance}, {"fraction_a", u.fraction_a},
                                {"fraction_b", u.fraction_b}, {"fraction_average", u.fraction_average},
                                {"average_gap", u.average_gap}}));
    checks.push_back(check("penalized_route", true, u.penalized_chain_ok && u.penalized_distance <= uniqueness_tolerance,
                           json{{"distance", u.penalized_distance}, {"chain_ok", u.penalized_chain_ok}}));
  }

  bool hard = true;
  for (const auto& c : checks)
    if (c["kind"] == "hard" && c["status"] != "pass") hard = false;
  rep["checks"] = std::move(checks);
  rep["hard_pass"] = hard;
  return rep;
}

bool report_hard_pass(const nlohmann::json& report) { return report.value("hard_pass", false); }

}  // namespace fraclinf
