#include "fraclinf/dual_measure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace fraclinf {

namespace {

// F(x_i, (Au)_i) on every node.
std::vector<double> supremand_values(const ProblemSpec& spec, const ScalarField& au) {
  if (spec.supremand.is_identity) return au.values;
  std::vector<double> out(au.size());
  for (std::size_t i = 0; i < au.size(); ++i) out[i] = spec.supremand.F(spec.grid->coord(i), au[i]);
  return out;
}

double l2(const std::vector<double>& v, double hn) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s * hn);
}

}  // namespace

DualField dual_field(const StageResult& stage, const ProblemSpec& spec, double delta_zero_rel) {
  require_same_grid(*spec.grid, *stage.u.grid, "dual_field");
  if (!(stage.e_p > 0.0)) throw Error(ErrorCode::trivial_problem, "dual undefined for trivial problem (e_p = 0)");
  const double p = stage.p;
  const ScalarField au = spec.op->apply(stage.u);
  const std::vector<double> F = supremand_values(spec, au);
  const double hn = spec.grid->cell_volume();

  DualField d;
  d.p = p;
  d.f = ScalarField(spec.grid, 0.0);
  d.sign.assign(F.size(), 0);
  for (std::size_t i = 0; i < F.size(); ++i) {
    const double ratio = std::abs(F[i]) / stage.e_p;
    const int sg = (F[i] > 0.0) - (F[i] < 0.0);
    const double mag = ratio == 0.0 ? 0.0 : std::exp((p - 1.0) * std::log(ratio));
    d.f[i] = sg * mag * spec.weight.base[i];
    d.sign[i] = d.f[i] != 0.0 ? sg : 0;
    d.mass += std::abs(d.f[i]) * hn;
  }
  // Relative to the interior maximum: the zero set of interest lies in Omega, while
  // exterior nodes near the data can carry |f| orders of magnitude larger.
  double interior_max = 0.0;
  for (std::size_t i : spec.domain.interior_nodes) interior_max = std::max(interior_max, std::abs(d.f[i]));
  d.delta_zero = delta_zero_rel * interior_max;
  d.zero_band.resize(F.size());
  for (std::size_t i = 0; i < F.size(); ++i) d.zero_band[i] = std::abs(d.f[i]) < d.delta_zero;
  return d;
}

double duality_identity(const DualField& dual, const StageResult& stage, const ProblemSpec& spec) {
  if (!(stage.e_p > 0.0)) throw Error(ErrorCode::trivial_problem, "duality gap undefined for e_p = 0");
  const ScalarField au = spec.op->apply(stage.u);
  const std::vector<double> F = supremand_values(spec, au);
  const double hn = spec.grid->cell_volume();
  double pairing = 0.0;
  for (std::size_t i = 0; i < F.size(); ++i) pairing += dual.f[i] * F[i] * hn;
  return std::abs(pairing - stage.e_p) / stage.e_p;
}

std::vector<ScalarField> default_test_functions(const ProblemSpec& spec) {
  const Grid& g = *spec.grid;
  const int n = g.dim();
  const auto& interior = spec.domain.interior_nodes;
  const auto& exterior = spec.domain.exterior_nodes;

  // Distance from a point to the nearest exterior node.
  auto depth = [&](const Point& x) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j : exterior) best = std::min(best, distance(x, g.coord(j), n));
    return best;
  };
  std::size_t deepest = interior.front();
  double rho0 = -1.0;
  for (std::size_t i : interior) {
    const double d = depth(g.coord(i));
    if (d > rho0) {
      rho0 = d;
      deepest = i;
    }
  }
  const Point c0 = g.coord(deepest);
  std::vector<Point> centres{c0};
  if (n == 1) {
    for (double t : {-0.5, -0.25, 0.25, 0.5}) centres.push_back({c0[0] + t * rho0, 0.0});
  } else {
    const double t = 0.4 * rho0;
    centres.push_back({c0[0] + t, c0[1]});
    centres.push_back({c0[0] - t, c0[1]});
    centres.push_back({c0[0], c0[1] + t});
    centres.push_back({c0[0], c0[1] - t});
  }

  std::vector<ScalarField> out;
  for (const Point& c : centres) {
    // Half-width of the supporting cube, kept a cell away from the exterior nodes.
    const double rho = depth(c) / std::sqrt(static_cast<double>(n)) - g.spacing();
    for (double frac : {0.9, 0.5}) {
      const double r = frac * rho;
      ScalarField phi(spec.grid, 0.0);
      if (r > 0.0) {
        for (std::size_t i : interior) {
          const Point& x = g.coord(i);
          double v = 1.0;
          for (int k = 0; k < n; ++k) v *= smooth_bump_profile((x[k] - c[k]) / r);
          phi[i] = v;
        }
      }
      out.push_back(std::move(phi));
    }
  }
  return out;
}

std::vector<double> sharmonicity_residual(const DualField& dual, const ProblemSpec& spec,
                                          const std::vector<ScalarField>& test_functions, const StageResult* stage) {
  const double hn = spec.grid->cell_volume();
  std::vector<double> weight = dual.f.values;
  if (!spec.supremand.is_identity) {
    if (!stage) throw Error(ErrorCode::invalid_argument, "a general supremand needs the stage for F_xi");
    const ScalarField au = spec.op->apply(stage->u);
    for (std::size_t i = 0; i < weight.size(); ++i) weight[i] *= spec.supremand.F_xi(spec.grid->coord(i), au[i]);
  }
  const double fnorm = l2(dual.f.values, hn);
  std::vector<double> out;
  for (std::size_t k = 0; k < test_functions.size(); ++k) {
    const ScalarField& phi = test_functions[k];
    require_same_grid(*spec.grid, *phi.grid, "test function");
    for (std::size_t i : spec.domain.exterior_nodes)
      if (phi[i] != 0.0) {
        std::ostringstream msg;
        msg << "test function " << k << " is not supported inside Omega (nonzero at exterior node " << i << ")";
        throw Error(ErrorCode::support_violation, msg.str());
      }
    const ScalarField aphi = spec.op->apply(phi);
    const double anorm = l2(aphi.values, hn);
    if (anorm == 0.0 || fnorm == 0.0) {
      out.push_back(0.0);
      continue;
    }
    double pairing = 0.0;
    for (std::size_t i = 0; i < aphi.size(); ++i) pairing += weight[i] * aphi[i] * hn;
    out.push_back(std::abs(pairing) / (fnorm * anorm));
  }
  return out;
}

double zero_set_census(const ScalarField& f, const DomainSpec& domain, double delta) {
  if (delta < 0.0) throw Error(ErrorCode::invalid_argument, "zero-set band must be nonnegative");
  if (domain.interior_nodes.empty()) return 0.0;
  std::size_t count = 0;
  for (std::size_t i : domain.interior_nodes) {
    const double a = std::abs(f[i]);
    if (delta == 0.0 ? a == 0.0 : a < delta) ++count;
  }
  return static_cast<double>(count) / static_cast<double>(domain.interior_nodes.size());
}

MeasureDiagnostics limit_extraction(const ContinuationResult& result, const ProblemSpec& spec) {
  if (result.stages.size() < 3) throw Error(ErrorCode::invalid_argument, "limit extraction needs at least 3 stages");
  const Grid& g = *spec.grid;
  const double hn = g.cell_volume();
  std::vector<DualField> duals;
  for (const auto& st : result.stages) duals.push_back(dual_field(st, spec));
  const DualField& last = duals.back();

  MeasureDiagnostics md;
  md.f_inf = last.f;
  md.total_mass = last.mass;
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    const double m = std::abs(last.f[i]) * hn;
    (spec.domain.is_interior(i) ? md.interior_mass : md.exterior_mass) += m;
    if (spec.domain.is_interior(i)) md.nontriviality = std::max(md.nontriviality, std::abs(last.f[i]));
  }

  // Support radius: walk nodes from the outside in until the outer mass reaches 1e-6.
  std::vector<std::size_t> order(g.node_count());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return norm(g.coord(a), g.dim()) > norm(g.coord(b), g.dim());
  });
  double outer = 0.0;
  md.support_radius = 0.0;
  for (std::size_t i : order) {
    const double r = norm(g.coord(i), g.dim());
    if (outer + std::abs(last.f[i]) * hn >= 1e-6) {
      md.support_radius = r;
      break;
    }
    outer += std::abs(last.f[i]) * hn;
  }

  md.sharmonicity_residuals = sharmonicity_residual(last, spec, default_test_functions(spec), &result.stages.back());

  for (std::size_t k = 0; k + 1 < duals.size(); ++k) {
    double d = 0.0;
    for (std::size_t i : spec.domain.interior_nodes) d += std::abs(duals[k].f[i] - duals[k + 1].f[i]) * hn;
    md.cauchy_differences.push_back(d);
  }

  // Components of the exterior support, nearest-neighbour connectivity.
  std::vector<int> label(g.node_count(), -1);
  const double support_cut = 1e-3 * last.f.max_abs();
  auto in_support = [&](std::size_t i) {
    return !spec.domain.is_interior(i) && std::abs(last.f[i]) >= support_cut;
  };
  for (std::size_t seed = 0; seed < g.node_count(); ++seed) {
    if (!in_support(seed) || label[seed] >= 0) continue;
    SignComponent comp;
    bool pos = false, neg = false;
    std::vector<std::size_t> stack{seed};
    label[seed] = static_cast<int>(md.sign_components.size());
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      ++comp.nodes;
      comp.mass += std::abs(last.f[i]) * hn;
      pos = pos || last.f[i] > 0.0;
      neg = neg || last.f[i] < 0.0;
      const auto mi = g.multi_index(i);
      for (int axis = 0; axis < g.dim(); ++axis)
        for (int step : {-1, 1}) {
          auto nb = mi;
          nb[axis] += step;
          if (nb[axis] < 0 || nb[axis] > g.cells()) continue;
          const std::size_t j = g.flat_index(nb[0], nb[1]);
          if (in_support(j) && label[j] < 0) {
            label[j] = label[seed];
            stack.push_back(j);
          }
        }
    }
    comp.sign = pos && neg ? 0 : (pos ? 1 : -1);
    if (comp.sign == 0) ++md.mixed_sign_components;
    md.sign_components.push_back(comp);
  }

  md.zero_fraction = zero_set_census(last.f, spec.domain, last.delta_zero);
  return md;
}

RefinementDelta refinement_delta(const ProblemSpec& coarse, const ProblemSpec& fine,
                                 const std::vector<double>& p_schedule, const SolverOptions& options) {
  const Grid& gc = *coarse.grid;
  const Grid& gf = *fine.grid;
  if (gc.dim() != gf.dim() || gc.half_width() != gf.half_width() || gf.cells() != 2 * gc.cells())
    throw Error(ErrorCode::grid_mismatch, "refinement needs the same box at half the spacing");
  const ContinuationResult rc = continuation(coarse, p_schedule, options);
  const ContinuationResult rf = continuation(fine, p_schedule, options);
  const StageResult& sc = rc.stages.back();
  const StageResult& sf = rf.stages.back();

  RefinementDelta out;
  out.p = sc.p;
  out.h_coarse = gc.spacing();
  out.h_fine = gf.spacing();
  out.e_coarse = sc.e_p;
  out.e_fine = sf.e_p;
  out.converged = rc.all_converged && rf.all_converged;
  const DualField dc = dual_field(sc, coarse);
  const DualField df = dual_field(sf, fine);
  const double hn = gc.cell_volume();
  for (std::size_t i : coarse.domain.interior_nodes) {
    const auto k = gc.multi_index(i);
    const std::size_t j = gf.flat_index(2 * k[0], gc.dim() == 2 ? 2 * k[1] : 0);
    out.f_l1_delta += std::abs(dc.f[i] - df.f[j]) * hn;
    out.f_l1_coarse += std::abs(dc.f[i]) * hn;
  }
  out.zero_fraction_coarse = zero_set_census(dc.f, coarse.domain, dc.delta_zero);
  out.zero_fraction_fine = zero_set_census(df.f, fine.domain, df.delta_zero);
  return out;
}

}  // namespace fraclinf
