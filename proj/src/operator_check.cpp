#include "fraclinf/operator_check.hpp"

#include <algorithm>
#include <cmath>

#include "fraclinf/fraclap.hpp"

namespace fraclinf {

namespace {

AgreementRow measure(const FracLapOperator& op, const AnalyticFunction& f, const std::string& name,
                     const std::vector<Point>& probes) {
  const Grid& g = op.grid();
  std::vector<double> samples(g.node_count());
  for (std::size_t i = 0; i < g.node_count(); ++i) samples[i] = f(g.coord(i));
  AgreementRow row;
  row.function = name;
  row.s = op.s();
  row.h = g.spacing();
  double scale = 0.0;
  for (const Point& x : probes) {
    const int k0 = static_cast<int>(std::lround((x[0] + g.half_width()) / g.spacing()));
    const int k1 = g.dim() == 2 ? static_cast<int>(std::lround((x[1] + g.half_width()) / g.spacing())) : 0;
    const double discrete = op.apply_row(g.flat_index(k0, k1), samples);
    const double exact = oracle_slap(f, x, op.s(), 1e-10).value;
    row.max_abs_error = std::max(row.max_abs_error, std::abs(discrete - exact));
    scale = std::max(scale, std::abs(exact));
  }
  row.relative_error = scale > 0.0 ? row.max_abs_error / scale : row.max_abs_error;
  return row;
}

}  // namespace

AgreementTable oracle_agreement(int n, double s, double L, double h, std::size_t probes) {
  AgreementTable t;
  t.n = n;
  t.L = L;
  GridPtr coarse = build_grid(n, L, h);
  GridPtr fine = build_grid(n, L, 0.5 * coarse->spacing());
  const double hc = coarse->spacing();
  t.L = coarse->half_width();

  // Coarse nodes within |x| <= L/2, spread evenly.
  const int kmax = static_cast<int>(std::floor(0.5 * t.L / hc));
  if (n == 1) {
    const std::size_t m = std::max<std::size_t>(probes, 2);
    for (std::size_t j = 0; j < m; ++j) {
      const int k = -kmax + static_cast<int>(std::lround(2.0 * kmax * static_cast<double>(j) / (m - 1)));
      t.probes.push_back({k * hc, 0.0});
    }
  } else {
    const std::size_t side = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(probes)))));
    for (std::size_t a = 0; a < side && t.probes.size() < probes; ++a)
      for (std::size_t b = 0; b < side && t.probes.size() < probes; ++b) {
        const int ka = -kmax + static_cast<int>(std::lround(2.0 * kmax * static_cast<double>(a) / (side - 1)));
        const int kb = -kmax + static_cast<int>(std::lround(2.0 * kmax * static_cast<double>(b) / (side - 1)));
        t.probes.push_back({ka * hc, kb * hc});
      }
  }

  const std::vector<std::pair<std::string, AnalyticFunction>> functions{
      {"gaussian", gaussian_function(n, 1.0, {0.0, 0.0}, std::min(1.0, t.L / 6.0))},
      {"bump", bump_function(n, {0.0, 0.0}, std::min(1.5, 0.5 * t.L))}};
  const FracLapOperator op_c(coarse, s, TailMode::with_tail, Storage::matrix_free);
  const FracLapOperator op_f(fine, s, TailMode::with_tail, Storage::matrix_free);
  for (const auto& [name, f] : functions) {
    t.coarse.push_back(measure(op_c, f, name, t.probes));
    t.fine.push_back(measure(op_f, f, name, t.probes));
    const double ef = t.fine.back().max_abs_error;
    t.improvement.push_back(ef > 0.0 ? t.coarse.back().max_abs_error / ef : std::numeric_limits<double>::infinity());
  }
  return t;
}

KelvinCheck kelvin_identity_check(double s, std::size_t probes) {
  const AnalyticFunction f = bump_function(1, {0.5, 0.0}, 0.3);
  const Point x0{0.0, 0.0};
  const double r = 1.0;
  const AnalyticFunction fk = kelvin_transform(f, r, x0, s);
  KelvinCheck out;
  // Points with |x| > 1, inside and outside supp f_K = [1.25, 5] and on the negative side.
  const std::vector<double> base{1.1, 1.4, 1.8, 2.3, 2.9, 3.6, 4.4, 5.6, -1.5, -3.0};
  for (std::size_t k = 0; k < probes; ++k) {
    const double x = base[k % base.size()] * (1.0 + 0.05 * static_cast<double>(k / base.size()));
    const double lhs = oracle_slap(fk, {x, 0.0}, s, 1e-10).value;
    const Point kx = kelvin_map({x, 0.0}, r, x0, 1);
    const double rhs = std::pow(std::abs(x), -2.0 * s - 1.0) * oracle_slap(f, kx, s, 1e-10).value;
    out.probes.push_back(x);
    out.lhs.push_back(lhs);
    out.rhs.push_back(rhs);
    out.max_gap = std::max(out.max_gap, std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs)));
  }
  return out;
}

}  // namespace fraclinf
