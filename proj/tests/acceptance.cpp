// Acceptance suite: one PASS / FAIL line per criterion. Soft criteria print
// SOFT-FAIL without failing the run.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include <unistd.h>

#include "fraclinf/config.hpp"
#include "fraclinf/io.hpp"
#include "fraclinf/operator_check.hpp"
#include "fraclinf/verify.hpp"

using namespace fraclinf;

namespace {

struct Outcome {
  bool pass = false;
  bool soft = false;
  std::string detail;
};

int hard_failures = 0;

void report(int id, const char* name, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const char* status = o.pass ? "PASS" : (o.soft ? "SOFT-FAIL" : "FAIL");
  if (!o.pass && !o.soft) ++hard_failures;
  std::printf("[%-9s] %2d %-28s %s (%.1fs)\n", status, id, name, o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

struct Scenario {
  std::string name;
  RunConfig cfg;
  BuiltProblem bp;
  VerificationSuite suite;
};

// Solved once, shared by the criteria that inspect stages.
std::map<std::string, Scenario>& scenarios() {
  static std::map<std::string, Scenario> all = [] {
    std::map<std::string, Scenario> m;
    for (const char* name : {"bump1d", "twobump1d", "ball2d"}) {
      Scenario sc;
      sc.name = name;
      sc.cfg = scenario_config(name);
      sc.bp = build_problem(sc.cfg);
      SuiteOptions opts;
      opts.p_schedule = sc.cfg.p_schedule;
      opts.solver = sc.bp.options;
      opts.seed = sc.cfg.seed;
      // The pair experiment belongs to criterion 8 (1D only).
      opts.run_uniqueness = false;
      sc.suite = run_suite(sc.bp.spec, opts);
      m.emplace(name, std::move(sc));
    }
    return m;
  }();
  return all;
}

// sum_i w_i h^n |(Au)_i|^p straight from the operator.
double direct_sum(const ProblemSpec& spec, const ScalarField& u, double p) {
  const ScalarField au = spec.op->apply(u);
  double S = 0.0;
  for (std::size_t i = 0; i < au.size(); ++i) S += spec.weight.base[i] * spec.grid->cell_volume() * std::pow(std::abs(au[i]), p);
  return S;
}

Outcome operator_fidelity() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst_rel = 0.0, worst_improvement = std::numeric_limits<double>::infinity();
  for (double s : {0.1, 0.25, 0.4}) {
    const AgreementTable t = oracle_agreement(1, s, 8.0, 1.0 / 64.0, 20);
    for (std::size_t k = 0; k < t.coarse.size(); ++k) {
      worst_rel = std::max(worst_rel, t.coarse[k].relative_error);
      worst_improvement = std::min(worst_improvement, t.improvement[k]);
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  Outcome o;
  o.pass = worst_rel <= 1e-3 && worst_improvement >= 1.5 && secs < 30.0;
  o.detail = "max rel error " + fmt("%.2e", worst_rel) + " (<= 1e-3), min h/2 improvement " +
             fmt("%.2f", worst_improvement) + " (>= 1.5), runtime " + fmt("%.1fs", secs) + " (< 30s)";
  return o;
}

Outcome monotonicity() {
  Outcome o{true, false, ""};
  for (auto& [name, sc] : scenarios()) {
    const auto& stages = sc.suite.result->stages;
    double worst = 0.0;
    for (std::size_t k = 0; k + 1 < stages.size(); ++k)
      worst = std::max(worst, (stages[k].e_p - stages[k + 1].e_p) / stages[k + 1].e_p);
    o.pass = o.pass && sc.suite.result->all_converged && worst <= 1e-10;
    o.detail += name + " " + fmt("%.1e", std::max(worst, 0.0)) + (sc.suite.result->all_converged ? "" : " (unconverged)") + "; ";
  }
  o.detail = "max relative violation per scenario: " + o.detail;
  return o;
}

template <class F>
Outcome per_stage(const char* what, double bound, F value) {
  Outcome o{true, false, ""};
  std::size_t counted = 0;
  double worst = 0.0;
  for (auto& [name, sc] : scenarios()) {
    const auto& stages = sc.suite.result->stages;
    for (std::size_t k = 0; k < stages.size(); ++k) {
      if (!stages[k].converged) continue;
      const double v = value(sc, k);
      worst = std::max(worst, v);
      ++counted;
    }
  }
  o.pass = counted > 0 && worst <= bound;
  o.detail = std::string("max ") + what + " " + fmt("%.3e", worst) + " over " + std::to_string(counted) + " stages (bound " +
             fmt("%.10g", bound) + ")";
  return o;
}

Outcome gradient_check() {
  const BuiltProblem bp = build_problem(scenario_config("bump1d"));
  const ProblemSpec& spec = bp.spec;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> U(-1.5, 1.5);
  double worst = 0.0;
  int points = 0;
  for (double p : {2.0, 4.0, 8.0})
    for (int trial = 0; trial < 10; ++trial, ++points) {
      std::vector<double> v(spec.domain.interior_count());
      for (double& x : v) x = U(rng);
      const ScalarField u = feasible_field(spec, &v);
      const ScalarField g = grad_Ep_p(spec, u, p);
      double err = 0.0, scale = 0.0;
      for (std::size_t i : spec.domain.interior_nodes) {
        const double step = 1e-5 * (1.0 + std::abs(u[i]));
        ScalarField up = u, dn = u;
        up[i] += step;
        dn[i] -= step;
        const double fd = (direct_sum(spec, up, p) - direct_sum(spec, dn, p)) / (2.0 * step);
        err = std::max(err, std::abs(fd - g[i]));
        scale = std::max(scale, std::abs(fd));
      }
      worst = std::max(worst, err / scale);
    }
  Outcome o;
  o.pass = worst <= 1e-5;
  o.detail = "max relative error " + fmt("%.2e", worst) + " at " + std::to_string(points) + " points, p in {2,4,8} (<= 1e-5)";
  return o;
}

Outcome pde_saturation() {
  const SaturationReport& sat = *scenarios().at("bump1d").suite.saturation;
  Outcome o;
  o.soft = true;
  o.pass = sat.nondecreasing && sat.final_fraction >= 0.9;
  std::string trend;
  for (double f : sat.gate_trend) trend += fmt("%.3f ", f);
  o.detail = "tau = 0.05 band-excluded trend [ " + trend + "], nondecreasing " + (sat.nondecreasing ? "yes" : "no") +
             ", final " + fmt("%.3f", sat.final_fraction) + " (>= 0.9)";
  return o;
}

Outcome uniqueness() {
  const BuiltProblem bp = build_problem(scenario_config("bump1d"));
  const ProblemSpec& spec = bp.spec;
  const auto schedule = default_p_schedule();
  const ContinuationResult a = continuation(spec, schedule, bp.options);
  const double scale = std::max(1.0, spec.exterior_data.max_abs());
  const ContinuationResult b = continuation(spec, schedule, bp.options, random_feasible_start(spec, 77, scale));
  const ScalarField& ua = a.stages.back().u;
  const ScalarField& ub = b.stages.back().u;
  double d = 0.0;
  for (std::size_t i = 0; i < ua.size(); ++i) d = std::max(d, std::abs(ua[i] - ub[i]));
  const double rel = d / ua.max_abs();

  ScalarField avg = ua;
  for (std::size_t i = 0; i < avg.size(); ++i) avg[i] = 0.5 * (ua[i] + ub[i]);
  const auto band = sign_band_mask(dual_field(a.stages.back(), spec), *spec.grid);
  const double e = a.stages.back().e_p;
  double gap = 0.0;
  const double f_avg_all = saturated_fraction(spec, avg, e, {}, 0.05);
  const double f_avg_band = saturated_fraction(spec, avg, e, band, 0.05);
  for (const ContinuationResult* r : {&a, &b}) {
    const StageResult& st = r->stages.back();
    gap = std::max(gap, std::abs(f_avg_all - saturated_fraction(spec, st.u, st.e_p, {}, 0.05)));
    gap = std::max(gap, std::abs(f_avg_band - saturated_fraction(spec, st.u, st.e_p, band, 0.05)));
  }
  const UniquenessReport rep = uniqueness_experiment(spec, schedule, 77, bp.options, &a);
  Outcome o;
  o.pass = a.all_converged && b.all_converged && rel <= 1e-4 && gap <= 0.02 && rep.pass;
  o.detail = "p = 128 relative max distance " + fmt("%.2e", rel) + " (<= 1e-4), saturation gap " + fmt("%.3f", gap) +
             " (<= 0.02), penalized route " + fmt("%.2e", rep.penalized_distance);
  return o;
}

Outcome nontriviality() {
  Outcome o{true, false, ""};
  for (auto& [name, sc] : scenarios()) {
    const MeasureDiagnostics& md = *sc.suite.diagnostics;
    const double e = sc.suite.result->stages.back().e_p;
    o.pass = o.pass && md.nontriviality > 1e-8 * md.total_mass && e > 0.0;
    o.detail += name + " max|f| " + fmt("%.3e", md.nontriviality) + " mass " + fmt("%.3f", md.total_mass) + " e " + fmt("%.4f", e) + "; ";
  }
  return o;
}

Outcome decay() {
  Outcome o{true, false, ""};
  for (auto& [name, sc] : scenarios()) {
    const DecayReport& d = *sc.suite.decay;
    o.pass = o.pass && d.nonincreasing;
    if (name == "bump1d") o.pass = o.pass && d.exponent_ok;
    o.detail += name + (d.nonincreasing ? " nonincreasing" : " NOT nonincreasing") + ", exponent " +
                fmt("%.3f", d.fitted_exponent) + " vs " + fmt("%.2f", d.expected_exponent) + "; ";
  }
  o.detail += "exponent gate (+-30%) on bump1d";
  return o;
}

Outcome kelvin() {
  const KelvinCheck k = kelvin_identity_check(0.25, 10);
  Outcome o;
  o.pass = k.probes.size() == 10 && k.max_gap <= 1e-6;
  o.detail = "max |lhs - rhs| / max(1, |rhs|) = " + fmt("%.2e", k.max_gap) + " over 10 probes (<= 1e-6)";
  return o;
}

Outcome trivial_data() {
  const BuiltProblem bp = build_problem(scenario_config("trivial1d"));
  const ContinuationResult r = continuation(bp.spec, default_p_schedule(), bp.options);
  bool zero = true;
  for (const auto& st : r.stages) zero = zero && st.e_p == 0.0 && st.u.max_abs() == 0.0;
  bool clean = false;
  std::string msg;
  try {
    (void)dual_field(r.stages.back(), bp.spec);
  } catch (const Error& e) {
    clean = e.code() == ErrorCode::trivial_problem;
    msg = e.what();
  }
  Outcome o;
  o.pass = zero && clean;
  o.detail = std::string("u = 0 and e_p = 0 at all ") + std::to_string(r.stages.size()) + " stages: " + (zero ? "yes" : "no") +
             "; dual error: " + (clean ? msg : "missing");
  return o;
}

std::string run_report_once(const std::filesystem::path& file) {
  const RunConfig cfg = scenario_config("bump1d");
  const BuiltProblem bp = build_problem(cfg);
  SuiteOptions opts;
  opts.p_schedule = cfg.p_schedule;
  opts.solver = bp.options;
  opts.seed = 1234;
  const VerificationSuite suite = run_suite(bp.spec, opts);
  ReportContext ctx{cfg.scenario, config_hash(cfg), 1234, bp.options.tol_grad, config_to_json(cfg)};
  write_json(file.string(), full_report(bp.spec, suite, ctx));
  std::ifstream in(file, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const auto dir = std::filesystem::temp_directory_path() / ("fraclinf_accept_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  const std::string a = run_report_once(dir / "a.json");
  const std::string b = run_report_once(dir / "b.json");
  std::filesystem::remove_all(dir);
  Outcome o;
  o.pass = !a.empty() && a == b;
  o.detail = std::to_string(a.size()) + "-byte reports " + (o.pass ? "identical" : "differ");
  return o;
}

}  // namespace

int main() {
  report(1, "operator fidelity", operator_fidelity);
  report(2, "e_p monotone in p", monotonicity);
  report(3, "dual mass bound", [] {
    return per_stage("sum |f_p| h^n", 1.0 + 1e-8, [](Scenario& sc, std::size_t k) { return sc.suite.duals[k].mass; });
  });
  report(4, "duality identity", [] {
    return per_stage("relative gap", 1e-6, [](Scenario& sc, std::size_t k) {
      return duality_identity(sc.suite.duals[k], sc.suite.result->stages[k], sc.bp.spec);
    });
  });
  report(5, "discrete s-harmonicity", [] {
    return per_stage("residual (10 bumps)", 1e-6, [](Scenario& sc, std::size_t k) {
      const auto tests = default_test_functions(sc.bp.spec);
      if (tests.size() != 10) return std::numeric_limits<double>::infinity();
      const auto r = sharmonicity_residual(sc.suite.duals[k], sc.bp.spec, tests, &sc.suite.result->stages[k]);
      return *std::max_element(r.begin(), r.end());
    });
  });
  report(6, "gradient correctness", gradient_check);
  report(7, "PDE saturation (soft)", pde_saturation);
  report(8, "uniqueness", uniqueness);
  report(9, "non-triviality", nontriviality);
  report(10, "decay at infinity", decay);
  report(11, "Kelvin identity", kelvin);
  report(12, "trivial-data regression", trivial_data);
  report(13, "determinism", determinism);
  std::printf("acceptance: %s (%d hard failure%s)\n", hard_failures ? "FAIL" : "PASS", hard_failures,
              hard_failures == 1 ? "" : "s");
  return hard_failures ? 1 : 0;
}
