#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "fraclinf/verify.hpp"

using namespace fraclinf;
using fixtures::bump_problem;

namespace {

ScalarField random_field(const ProblemSpec& spec, std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> U(-scale, scale);
  std::vector<double> v(spec.domain.interior_count());
  for (double& x : v) x = U(rng);
  return feasible_field(spec, &v);
}

// sum_i w_i h^n |(Au)_i|^p computed directly from the dense matrix.
double direct_sum(const ProblemSpec& spec, const ScalarField& u, double p) {
  const Eigen::MatrixXd A = spec.op->dense_matrix();
  const Eigen::VectorXd au = A * Eigen::Map<const Eigen::VectorXd>(u.values.data(), static_cast<Eigen::Index>(u.size()));
  double S = 0.0;
  for (Eigen::Index i = 0; i < au.size(); ++i) S += spec.weight.base[static_cast<std::size_t>(i)] * spec.grid->cell_volume() * std::pow(std::abs(au[i]), p);
  return S;
}

}  // namespace

TEST_CASE("problem assembly enforces n > 2s") {
  GridPtr g = build_grid(1, 4.0, 1.0 / 16.0);
  DomainSpec d = build_domain(*g, {Shape::interval(-1.0, 1.0)});
  ExteriorData ed;
  ed.bumps = {Bump{{2.0, 0.0}, 0.8, 1.0}};
  const ScalarField u0 = sample_exterior_data(ed, g, d);
  const WeightField w = build_weight(g, WeightKind::gaussian, 2.0);
  for (double s : {0.5, 0.6, 0.9}) {
    try {
      assemble_problem(g, d, std::make_shared<FracLapOperator>(g, s), w, u0);
      FAIL("n <= 2s accepted");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::hypothesis_violation);
      CHECK(std::string(e.what()).find("requires n > 2s") != std::string::npos);
    }
  }
  CHECK_NOTHROW(assemble_problem(g, d, std::make_shared<FracLapOperator>(g, 0.49), w, u0));
  CHECK_THROWS_AS(assemble_problem(g, d, std::make_shared<FracLapOperator>(build_grid(1, 4.0, 0.125), 0.25), w, u0), Error);
}

TEST_CASE("reduced system reproduces the full operator on competitors") {
  const ProblemSpec spec = bump_problem();
  std::mt19937_64 rng(1);
  const ScalarField u = random_field(spec, rng, 2.0);
  const ScalarField au = spec.op->apply(u);
  std::vector<double> v;
  for (std::size_t i : spec.domain.interior_nodes) v.push_back(u[i]);
  const Eigen::VectorXd a = spec.reduced->b + spec.reduced->A_omega * Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < u.size(); ++i) CHECK(a[static_cast<Eigen::Index>(i)] == doctest::Approx(au[i]).epsilon(1e-12).scale(1.0));
  CHECK(spec.reduced->mass.sum() == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("E_p matches direct evaluation, is nondecreasing in p and tends to the sup") {
  const ProblemSpec spec = bump_problem();
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    const ScalarField u = random_field(spec, rng, 1.0);
    double prev = 0.0;
    for (double p : {1.0, 2.0, 3.0, 8.0, 32.0, 128.0}) {
      const double e = eval_Ep(spec, u, p);
      CHECK(e == doctest::Approx(std::pow(direct_sum(spec, u, p), 1.0 / p)).epsilon(1e-10));
      CHECK(e >= prev * (1.0 - 1e-14));
      prev = e;
    }
    const double sup = eval_Ep(spec, u, std::numeric_limits<double>::infinity());
    CHECK(sup == doctest::Approx(spec.op->apply(u).max_abs()));
    CHECK(prev <= sup);
  }
}

TEST_CASE("E_p is evaluated with the maximum factored out") {
  const ProblemSpec spec = bump_problem();
  std::mt19937_64 rng(3);
  const ScalarField u = random_field(spec, rng, 1.0);
  ScalarField big = u;
  for (double& x : big.values) x *= 1e150;
  // The naive sum overflows: (1e150)^256.
  CHECK(eval_Ep(spec, big, 256.0) == doctest::Approx(1e150 * eval_Ep(spec, u, 256.0)).epsilon(1e-12));
  ScalarField huge = u;
  for (std::size_t k = 0; k < spec.domain.interior_count(); ++k) huge[spec.domain.interior_nodes[k]] = k % 2 ? 1e308 : -1e308;
  try {
    eval_Ep(spec, huge, 256.0);
    FAIL("overflow not reported");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::numerical_failure);
  }
}

TEST_CASE("analytic gradient agrees with central differences") {
  const ProblemSpec spec = bump_problem();
  std::mt19937_64 rng(4);
  for (double p : {2.0, 4.0, 8.0}) {
    const ScalarField u = random_field(spec, rng, 1.0);
    const ScalarField g = grad_Ep_p(spec, u, p);
    double worst = 0.0, scale = 0.0;
    for (std::size_t i : spec.domain.interior_nodes) {
      const double step = 1e-5 * (1.0 + std::abs(u[i]));
      ScalarField up = u, dn = u;
      up[i] += step;
      dn[i] -= step;
      const double fd = (direct_sum(spec, up, p) - direct_sum(spec, dn, p)) / (2.0 * step);
      worst = std::max(worst, std::abs(fd - g[i]));
      scale = std::max(scale, std::abs(g[i]));
    }
    CHECK(worst / scale <= 1e-5);
    for (std::size_t i : spec.domain.exterior_nodes) CHECK(g[i] == 0.0);
  }
}

TEST_CASE("p = 2 minimiser solves the weighted least-squares problem") {
  const ProblemSpec spec = bump_problem();
  const StageResult st = solve_p(spec, 2.0, feasible_field(spec));
  CHECK(st.converged);
  // Independent route: QR of sqrt(c) A_omega v = -sqrt(c) b.
  const Eigen::VectorXd sc = spec.reduced->mass.cwiseSqrt();
  const Eigen::MatrixXd M = sc.asDiagonal() * spec.reduced->A_omega;
  const Eigen::VectorXd rhs = -(sc.asDiagonal() * spec.reduced->b);
  const Eigen::VectorXd v = M.colPivHouseholderQr().solve(rhs);
  std::vector<double> vv(v.data(), v.data() + v.size());
  const ScalarField ref = feasible_field(spec, &vv);
  CHECK(st.e_p == doctest::Approx(eval_Ep(spec, ref, 2.0)).epsilon(1e-10));
  for (std::size_t k = 0; k < vv.size(); ++k)
    CHECK(st.u[spec.domain.interior_nodes[k]] == doctest::Approx(vv[k]).epsilon(1e-6).scale(1.0));
}

TEST_CASE("minimiser does not depend on the warm start") {
  const ProblemSpec spec = bump_problem();
  std::mt19937_64 rng(5);
  for (double p : {4.0, 16.0}) {
    const StageResult a = solve_p(spec, p, feasible_field(spec));
    const StageResult b = solve_p(spec, p, random_field(spec, rng, 3.0));
    REQUIRE(a.converged);
    REQUIRE(b.converged);
    CHECK(a.e_p == doctest::Approx(b.e_p).epsilon(1e-10));
    double d = 0.0;
    for (std::size_t i = 0; i < a.u.size(); ++i) d = std::max(d, std::abs(a.u[i] - b.u[i]));
    CHECK(d < 1e-6);
    CHECK(eval_Ep(spec, b.u, p) <= eval_Ep(spec, random_field(spec, rng, 0.5), p));
  }
}

TEST_CASE("L-BFGS reaches the Newton minimiser in 1D") {
  const ProblemSpec spec = bump_problem();
  SolverOptions opts;
  opts.method = Optimizer::lbfgs;
  const StageResult a = solve_p(spec, 4.0, feasible_field(spec));
  const StageResult b = solve_p(spec, 4.0, feasible_field(spec), opts);
  CHECK(b.converged);
  CHECK(b.e_p == doctest::Approx(a.e_p).epsilon(1e-9));
}

TEST_CASE("solver input checks") {
  const ProblemSpec spec = bump_problem();
  ScalarField bad = feasible_field(spec);
  bad[spec.domain.exterior_nodes.front() + 5] += 1.0;
  CHECK_THROWS_AS(solve_p(spec, 4.0, bad), Error);
  CHECK_THROWS_AS(solve_p(spec, 1.5, feasible_field(spec)), Error);
  std::vector<double> short_vec(3);
  CHECK_THROWS_AS(feasible_field(spec, &short_vec), Error);
  CHECK_THROWS_AS(continuation(spec, {}), Error);
  CHECK_THROWS_AS(continuation(spec, {1.0, 4.0}), Error);
  CHECK_THROWS_AS(continuation(spec, {2.0, 8.0, 4.0}), Error);
  CHECK_THROWS_AS(continuation(spec, {2.0, 2.0}), Error);
}

TEST_CASE("continuation is monotone and warm-start consistent") {
  const ProblemSpec spec = bump_problem();
  const ContinuationResult r = continuation(spec, {2, 4, 8, 16, 32});
  CHECK(r.all_converged);
  CHECK(check_monotone_ep(r).pass);
  for (const auto& st : r.stages) CHECK(st.gradient_norm <= default_tolerance(spec));
  CHECK(r.e_inf_estimate == r.stages.back().e_p);
  // A cold solve at the last p lands on the same minimiser.
  const StageResult cold = solve_p(spec, 32.0, feasible_field(spec));
  CHECK(cold.e_p == doctest::Approx(r.stages.back().e_p).epsilon(1e-9));
}

TEST_CASE("penalized problem keeps a minimiser that is already the target") {
  const ProblemSpec spec = bump_problem();
  const StageResult st = solve_p(spec, 8.0, feasible_field(spec));
  const StageResult pen = solve_penalized(spec, 8.0, st.u);
  CHECK(pen.converged);
  double d = 0.0;
  for (std::size_t i = 0; i < st.u.size(); ++i) d = std::max(d, std::abs(pen.u[i] - st.u[i]));
  CHECK(d < 1e-6);
  CHECK(pen.objective == doctest::Approx(eval_Ap(spec, pen.u, st.u, 8.0)));

  // Away from the minimiser the penalty pulls v towards the target.
  std::mt19937_64 rng(6);
  const ScalarField target = random_field(spec, rng, 1.0);
  const StageResult off = solve_penalized(spec, 8.0, target);
  CHECK(off.converged);
  CHECK(off.objective <= eval_Ap(spec, target, target, 8.0));
  CHECK(off.objective <= eval_Ap(spec, st.u, target, 8.0));
}

TEST_CASE("extrapolation is exact on e = a - C/p") {
  std::vector<StageResult> stages;
  for (double p : {8.0, 16.0, 32.0, 64.0}) {
    StageResult st;
    st.p = p;
    st.e_p = 2.0 - 3.0 / p;
    stages.push_back(st);
  }
  CHECK(extrapolate_e_inf(stages, 4) == doctest::Approx(2.0).epsilon(1e-13));
  CHECK(extrapolate_e_inf(stages, 2) == doctest::Approx(2.0).epsilon(1e-13));
  CHECK(extrapolate_e_inf(stages, 1) == stages.back().e_p);
  CHECK_THROWS_AS(extrapolate_e_inf({}, 3), Error);
}

TEST_CASE("trivial exterior data give the zero solution") {
  CHECK_THROWS_AS(bump_problem(1.0 / 32.0, 0.25, 4.0, 0.0), Error);
  const ProblemSpec spec = bump_problem(1.0 / 32.0, 0.25, 4.0, 0.0, true);
  CHECK(spec.degenerate);
  const ContinuationResult r = continuation(spec, default_p_schedule());
  for (const auto& st : r.stages) {
    CHECK(st.e_p == 0.0);
    CHECK(st.u.max_abs() == 0.0);
    CHECK(st.converged);
  }
}
