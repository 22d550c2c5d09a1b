#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fixtures.hpp"
#include "fraclinf/verify.hpp"

using namespace fraclinf;
using fixtures::bump_problem;

namespace {

const std::vector<double> short_schedule{2, 4, 8, 16, 32};

}  // namespace

TEST_CASE("monotonicity check") {
  const ProblemSpec spec = bump_problem();
  ContinuationResult r = continuation(spec, short_schedule);
  const MonotoneCheck ok = check_monotone_ep(r);
  CHECK(ok.pass);
  CHECK(ok.max_violation <= 0.0);

  ContinuationResult shuffled = r;
  std::swap(shuffled.stages[1], shuffled.stages[3]);
  const MonotoneCheck bad = check_monotone_ep(shuffled);
  CHECK_FALSE(bad.pass);
  // Order e0, e3, e2, e1, e4 has two descents.
  CHECK(bad.max_violation ==
        doctest::Approx(std::max(r.stages[3].e_p - r.stages[2].e_p, r.stages[2].e_p - r.stages[1].e_p)));

  r.stages.resize(1);
  CHECK_THROWS_AS(check_monotone_ep(r), Error);
}

TEST_CASE("far-field value is the kernel sum outside the box") {
  const ProblemSpec spec = bump_problem();
  ScalarField u(spec.grid, 0.0);
  const std::size_t j = spec.grid->flat_index(100);
  u[j] = 2.0;
  const double x = 9.0, xj = spec.grid->coord(j)[0];
  const double expected = -2.0 * cns_constant(1, 0.25) * spec.grid->cell_volume() * std::pow(x - xj, -1.5);
  CHECK(far_field_value(spec, u, {x, 0.0}) == doctest::Approx(expected).epsilon(1e-14));
  CHECK_THROWS_AS(far_field_value(spec, u, {3.0, 0.0}), Error);
  // Far away the value behaves like -c h^n sum(u) |x|^{-n-2s}.
  const double far = far_field_value(spec, u, {1e4, 0.0});
  CHECK(far == doctest::Approx(-2.0 * cns_constant(1, 0.25) * spec.grid->cell_volume() * std::pow(1e4, -1.5)).epsilon(1e-3));
}

TEST_CASE("decay at infinity on the 1D bump") {
  const ProblemSpec spec = bump_problem();
  const ContinuationResult r = continuation(spec, short_schedule);
  const DecayReport d = check_exterior_behaviour(r, spec, default_far_radii(spec));
  CHECK(d.radii == std::vector<double>{8.0, 16.0, 32.0});
  CHECK(d.nonincreasing);
  CHECK(d.expected_exponent == doctest::Approx(1.5));
  CHECK(d.exponent_ok);
  CHECK(std::abs(d.fitted_exponent - 1.5) <= 0.3 * 1.5);
  CHECK_THROWS_AS(check_exterior_behaviour(r, spec, {8.0}), Error);
  CHECK_THROWS_AS(check_exterior_behaviour(r, spec, {2.0, 8.0}), Error);
}

TEST_CASE("sign band covers the zero band and sign flips") {
  GridPtr g = build_grid(1, 1.0, 0.25);
  DualField d;
  d.f = ScalarField(g, std::vector<double>{1, 1, 1e-9, 1, -1, -1, 1, 1, 1});
  d.sign = {1, 1, 1, 1, -1, -1, 1, 1, 1};
  d.zero_band = {0, 0, 1, 0, 0, 0, 0, 0, 0};
  const auto mask = sign_band_mask(d, *g);
  CHECK(mask == std::vector<std::uint8_t>{0, 0, 1, 1, 1, 1, 1, 0, 0});
}

TEST_CASE("saturation statistics") {
  const ProblemSpec spec = bump_problem();
  const ContinuationResult r = continuation(spec, default_p_schedule());
  const SaturationReport sat = check_pde_saturation(r, spec);
  CHECK(sat.gate_trend.size() == r.stages.size());
  for (const auto& st : sat.stages) {
    CHECK(std::is_sorted(st.fraction.begin(), st.fraction.end()));
    CHECK(st.max_ratio > 0.0);
    CHECK(st.sign_mismatches == 0);
  }
  CHECK(sat.gate_trend.back() >= sat.gate_trend.front());
  // At u_p itself, |Au| / e_inf with e_inf = max |Au| never exceeds one.
  const StageResult& last = r.stages.back();
  const double sup = eval_Ep(spec, last.u, std::numeric_limits<double>::infinity());
  CHECK(saturated_fraction(spec, last.u, sup, {}, 1.0) == 1.0);
  CHECK_THROWS_AS(saturated_fraction(spec, last.u, 0.0, {}, 0.05), Error);
}

TEST_CASE("random feasible starts are seeded and respect the exterior data") {
  const ProblemSpec spec = bump_problem();
  const ScalarField a = random_feasible_start(spec, 42, 2.0);
  const ScalarField b = random_feasible_start(spec, 42, 2.0);
  const ScalarField c = random_feasible_start(spec, 43, 2.0);
  CHECK(a.values == b.values);
  CHECK(a.values != c.values);
  for (std::size_t i : spec.domain.exterior_nodes) CHECK(a[i] == spec.exterior_data[i]);
  for (std::size_t i : spec.domain.interior_nodes) CHECK(std::abs(a[i]) <= 2.0);
}

TEST_CASE("two continuation paths reach the same limit") {
  const ProblemSpec spec = bump_problem();
  const UniquenessReport u = uniqueness_experiment(spec, default_p_schedule(), 11);
  CHECK(u.p_max == 128.0);
  CHECK(u.relative_distance <= uniqueness_tolerance);
  CHECK(u.average_gap <= saturation_match_tolerance);
  CHECK(u.penalized_chain_ok);
  CHECK(u.penalized_distance <= uniqueness_tolerance);
  CHECK(u.pass);
}

TEST_CASE("report on a non-trivial problem") {
  const ProblemSpec spec = bump_problem();
  SuiteOptions opts;
  opts.p_schedule = short_schedule;
  opts.seed = 3;
  const VerificationSuite suite = run_suite(spec, opts);
  ReportContext ctx{"unit", "0000000000000000", 3, 0.0, nlohmann::json::object()};
  const auto rep = full_report(spec, suite, ctx);
  CHECK(rep["schema"] == "fraclinf-report/1");
  CHECK(rep["stages"].size() == short_schedule.size());
  CHECK(report_hard_pass(rep));
  std::vector<std::string> names;
  for (const auto& c : rep["checks"]) names.push_back(c["name"]);
  for (const char* want : {"stages_converged", "e_p_monotone", "dual_mass_bound", "duality_identity", "sharmonicity",
                           "nontriviality", "far_field_decay", "uniqueness", "penalized_route", "pde_saturation"})
    CHECK(std::find(names.begin(), names.end(), want) != names.end());
  CHECK(full_report(spec, suite, ctx).dump() == rep.dump());

  VerificationSuite partial = suite;
  partial.decay.reset();
  partial.saturation.reset();
  try {
    full_report(spec, partial, ctx);
    FAIL("incomplete suite accepted");
  } catch (const Error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("decay report") != std::string::npos);
    CHECK(msg.find("saturation report") != std::string::npos);
  }
}

TEST_CASE("report on trivial data") {
  const ProblemSpec spec = bump_problem(1.0 / 32.0, 0.25, 4.0, 0.0, true);
  const VerificationSuite suite = run_suite(spec, SuiteOptions{});
  CHECK(suite.duals.empty());
  const auto rep = full_report(spec, suite, ReportContext{});
  CHECK(rep["degenerate"] == true);
  CHECK(report_hard_pass(rep));
  bool found = false;
  for (const auto& c : rep["checks"])
    if (c["name"] == "dual_undefined") found = c["status"] == "pass";
  CHECK(found);
}
