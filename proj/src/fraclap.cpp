#include "fraclinf/fraclap.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/zeta.hpp>

namespace fraclinf {

namespace {

void require_order(double s) {
  if (!(s > 0.0 && s < 1.0))
    throw Error(ErrorCode::invalid_argument, "fractional order s must lie in (0,1), got " + std::to_string(s));
}

}  // namespace

double cns_constant(int n, double s) {
  require_order(s);
  if (n < 1) throw Error(ErrorCode::invalid_argument, "dimension must be positive");
  const double half_n = 0.5 * n;
  return s * std::pow(2.0, 2.0 * s) * boost::math::tgamma(half_n + s) /
         (std::pow(std::numbers::pi, half_n) * boost::math::tgamma(1.0 - s));
}

double dirichlet_beta(double s) {
  if (!(s > 0.0)) throw Error(ErrorCode::invalid_argument, "dirichlet_beta needs s > 0");
  // Cohen-Rodriguez Villegas-Zagier acceleration of the alternating series.
  constexpr int terms = 40;
  double d = std::pow(3.0 + std::sqrt(8.0), terms);
  d = 0.5 * (d + 1.0 / d);
  double b = -1.0;
  double c = -d;
  double sum = 0.0;
  for (int k = 0; k < terms; ++k) {
    c = b - c;
    sum += c * std::pow(2.0 * k + 1.0, -s);
    b = static_cast<double>(k + terms) * static_cast<double>(k - terms) * b /
        ((k + 0.5) * (k + 1.0));
  }
  return sum / d;
}

double singular_correction(int n, double s, double h) {
  const double c = cns_constant(n, s);
  const double lattice_zeta = n == 1 ? boost::math::zeta(2.0 * s - 1.0)
                                     : boost::math::zeta(s) * dirichlet_beta(s);
  return -c * lattice_zeta * std::pow(h, -2.0 * s);
}

double square_exterior_integral(const Point& x, double a, double s, double rel_tol) {
  // Each side contributes d^{-2s} int cos^{2s}(phi) dphi over the angular
  // window it subtends, phi measured from the side's inward normal.
  const double dist[4] = {a - x[0], a + x[0], a - x[1], a + x[1]};  // right, left, top, bottom
  // Tangential extents (negative, positive) along each side.
  const double lo[4] = {a + x[1], a - x[1], a - x[0], a + x[0]};
  const double hi[4] = {a - x[1], a + x[1], a + x[0], a - x[0]};
  auto integrand = [s](double phi) { return std::pow(std::cos(phi), 2.0 * s); };
  double total = 0.0;
  for (int k = 0; k < 4; ++k) {
    if (!(dist[k] > 0.0)) throw Error(ErrorCode::invalid_argument, "point outside the square");
    const double p0 = -std::atan(lo[k] / dist[k]);
    const double p1 = std::atan(hi[k] / dist[k]);
    double err = 0.0;
    const double piece =
        boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, p0, p1, 30, rel_tol, &err);
    total += std::pow(dist[k], -2.0 * s) * piece;
  }
  return total / (2.0 * s);
}

// --- FracLapOperator ------------------------------------------------------------

FracLapOperator::FracLapOperator(GridPtr grid, double s, TailMode mode, Storage storage)
    : grid_(std::move(grid)), s_(s), cns_(cns_constant(grid_ ? grid_->dim() : 1, s)), mode_(mode) {
  if (!grid_) throw Error(ErrorCode::invalid_argument, "operator needs a grid");
  const Grid& g = *grid_;
  const int n = g.dim();
  const int M = g.cells();
  const double h = g.spacing();
  axis_nodes_ = M + 1;
  const double base = cns_ * std::pow(h, -2.0 * s);  // c h^n (h |d|)^{-n-2s} = base |d|^{-n-2s}
  const double corr = singular_correction(n, s, h);

  if (n == 1) {
    offset_table_.assign(static_cast<std::size_t>(M + 1), 0.0);
    for (int d = 1; d <= M; ++d) offset_table_[d] = base * std::pow(static_cast<double>(d), -1.0 - 2.0 * s);
    if (M >= 1) offset_table_[1] += corr;
  } else {
    offset_table_.assign(static_cast<std::size_t>(M + 1) * (M + 1), 0.0);
    for (int d1 = 0; d1 <= M; ++d1)
      for (int d0 = 0; d0 <= M; ++d0) {
        if (d0 == 0 && d1 == 0) continue;
        const double r2 = static_cast<double>(d0) * d0 + static_cast<double>(d1) * d1;
        offset_table_[d0 + static_cast<std::size_t>(M + 1) * d1] = base * std::pow(r2, -1.0 - s);
      }
    offset_table_[1] += corr;
    offset_table_[static_cast<std::size_t>(M + 1)] += corr;
  }

  const std::size_t N = g.node_count();
  tail_.assign(N, 0.0);
  if (mode_ == TailMode::with_tail) {
    const double a = g.half_width() + 0.5 * h;
    for (std::size_t i = 0; i < N; ++i) {
      const Point& x = g.coord(i);
      if (n == 1) {
        tail_[i] = cns_ / (2.0 * s) * (std::pow(a - x[0], -2.0 * s) + std::pow(a + x[0], -2.0 * s));
      } else {
        tail_[i] = cns_ * square_exterior_integral(x, a, s);
      }
      // Nearest neighbours beyond the box carry the singular correction too.
      const auto k = g.multi_index(i);
      int outside = 0;
      for (int d = 0; d < n; ++d) outside += (k[d] == 0) + (k[d] == M);
      tail_[i] += outside * corr;
    }
  }

  diag_.assign(N, 0.0);
  for (std::size_t i = 0; i < N; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < N; ++j)
      if (j != i) sum += offset_weight(i, j);
    diag_[i] = sum + tail_[i];
  }

  const bool want_dense =
      storage == Storage::dense || (storage == Storage::automatic && N <= dense_limit);
  if (want_dense) {
    dense_.resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
    for (std::size_t j = 0; j < N; ++j)
      for (std::size_t i = 0; i < N; ++i)
        dense_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            i == j ? diag_[i] : -offset_weight(i, j);
  }
}

double FracLapOperator::offset_weight(std::size_t i, std::size_t j) const {
  if (grid_->dim() == 1) {
    const auto d = i > j ? i - j : j - i;
    return offset_table_[d];
  }
  const auto m = static_cast<std::size_t>(axis_nodes_);
  const std::size_t i0 = i % m, i1 = i / m, j0 = j % m, j1 = j / m;
  const std::size_t d0 = i0 > j0 ? i0 - j0 : j0 - i0;
  const std::size_t d1 = i1 > j1 ? i1 - j1 : j1 - i1;
  return offset_table_[d0 + m * d1];
}

double FracLapOperator::kernel(std::size_t i, std::size_t j) const {
  return i == j ? 0.0 : offset_weight(i, j);
}

double FracLapOperator::entry(std::size_t i, std::size_t j) const {
  return i == j ? diag_[i] : -offset_weight(i, j);
}

ScalarField FracLapOperator::apply(const ScalarField& u) const {
  if (!u.grid) throw Error(ErrorCode::grid_mismatch, "apply: field has no grid");
  require_same_grid(*grid_, *u.grid, "FracLapOperator::apply");
  ScalarField out(grid_);
  apply(u.values, out.values);
  return out;
}

void FracLapOperator::apply(std::span<const double> u, std::span<double> out) const {
  const std::size_t N = grid_->node_count();
  if (u.size() != N || out.size() != N)
    throw Error(ErrorCode::grid_mismatch, "FracLapOperator::apply: length mismatch");
  if (is_dense()) {
    Eigen::Map<const Eigen::VectorXd> x(u.data(), static_cast<Eigen::Index>(N));
    Eigen::Map<Eigen::VectorXd> y(out.data(), static_cast<Eigen::Index>(N));
    y.noalias() = dense_ * x;
    return;
  }
  for (std::size_t i = 0; i < N; ++i) out[i] = apply_row(i, u);
}

double FracLapOperator::apply_row(std::size_t i, std::span<const double> u) const {
  const std::size_t N = grid_->node_count();
  double acc = diag_[i] * u[i];
  if (grid_->dim() == 1) {
    for (std::size_t j = 0; j < N; ++j)
      if (j != i) acc -= offset_table_[i > j ? i - j : j - i] * u[j];
    return acc;
  }
  const auto m = static_cast<std::size_t>(axis_nodes_);
  const std::size_t i0 = i % m, i1 = i / m;
  for (std::size_t j1 = 0; j1 < m; ++j1) {
    const std::size_t d1 = i1 > j1 ? i1 - j1 : j1 - i1;
    const double* row = offset_table_.data() + m * d1;
    const double* uj = u.data() + m * j1;
    double partial = 0.0;
    for (std::size_t j0 = 0; j0 < m; ++j0) partial += row[i0 > j0 ? i0 - j0 : j0 - i0] * uj[j0];
    acc -= partial;
  }
  // The loop subtracted the zero-offset entry times u_i, which is 0 by construction.
  return acc;
}

void FracLapOperator::column(std::size_t j, std::span<double> out) const {
  const std::size_t N = grid_->node_count();
  if (out.size() != N) throw Error(ErrorCode::grid_mismatch, "column: length mismatch");
  for (std::size_t i = 0; i < N; ++i) out[i] = entry(i, j);
}

Eigen::MatrixXd FracLapOperator::dense_matrix(bool force) const {
  if (is_dense()) return dense_;
  const std::size_t N = grid_->node_count();
  if (N > dense_limit && !force)
    throw Error(ErrorCode::invalid_argument, "dense export refused above the dense storage limit");
  Eigen::MatrixXd A(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
  for (std::size_t j = 0; j < N; ++j)
    for (std::size_t i = 0; i < N; ++i)
      A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = entry(i, j);
  return A;
}

// --- supremands ---------------------------------------------------------------

SupremandF identity_supremand() {
  SupremandF F;
  F.name = "identity";
  F.F = [](const Point&, double xi) { return xi; };
  F.F_xi = [](const Point&, double) { return 1.0; };
  F.F_xixi = [](const Point&, double) { return 0.0; };
  F.c_bound = 1.0;
  F.is_identity = true;
  return F;
}

SupremandF weighted_supremand(double alpha, int dim) {
  if (!(alpha >= 0.0)) throw Error(ErrorCode::invalid_argument, "weighted supremand needs alpha >= 0");
  SupremandF F;
  F.name = "weighted";
  auto a = [alpha, dim](const Point& x) {
    const double r = norm(x, dim);
    return 1.0 + alpha * std::exp(-r * r);
  };
  F.F = [a](const Point& x, double xi) { return a(x) * xi; };
  F.F_xi = [a](const Point& x, double) { return a(x); };
  F.F_xixi = [](const Point&, double) { return 0.0; };
  F.c_bound = 1.0 / (1.0 + alpha);
  F.is_identity = false;
  return F;
}

SupremandF tanh_supremand(double kappa) {
  if (!(kappa >= 0.0)) throw Error(ErrorCode::invalid_argument, "tanh supremand needs kappa >= 0");
  SupremandF F;
  F.name = "tanh";
  F.F = [kappa](const Point&, double xi) { return xi + kappa * std::tanh(xi); };
  F.F_xi = [kappa](const Point&, double xi) {
    const double sech = 1.0 / std::cosh(xi);
    return 1.0 + kappa * sech * sech;
  };
  F.F_xixi = [kappa](const Point&, double xi) {
    const double sech = 1.0 / std::cosh(xi);
    return -2.0 * kappa * sech * sech * std::tanh(xi);
  };
  F.c_bound = 1.0 / (1.0 + kappa);
  F.is_identity = false;
  return F;
}

SupremandF make_supremand(const std::string& name, double parameter, int dim) {
  if (name == "identity") return identity_supremand();
  if (name == "weighted") return weighted_supremand(parameter, dim);
  if (name == "tanh") return tanh_supremand(parameter);
  throw Error(ErrorCode::invalid_argument, "unknown supremand '" + name + "'");
}

void validate_supremand(const SupremandF& F, const Grid& grid) {
  if (!F.F || !F.F_xi) throw Error(ErrorCode::invalid_argument, "supremand is missing F or F_xi");
  const double c = F.c_bound;
  if (!(c > 0.0 && c <= 1.0)) throw Error(ErrorCode::invalid_argument, "supremand bound c must lie in (0,1]");
  static constexpr double probes[] = {-50.0, -3.0, -1.0, -0.2, 0.0, 0.2, 1.0, 3.0, 50.0};
  const std::size_t stride = std::max<std::size_t>(1, grid.node_count() / 97);
  for (std::size_t i = 0; i < grid.node_count(); i += stride) {
    const Point& x = grid.coord(i);
    if (std::abs(F.F(x, 0.0)) > 1e-14)
      throw Error(ErrorCode::hypothesis_violation, "supremand '" + F.name + "' violates F(x,0) = 0");
    for (double xi : probes) {
      const double d = F.F_xi(x, xi);
      if (d < c * (1.0 - 1e-12) || d > (1.0 / c) * (1.0 + 1e-12))
        throw Error(ErrorCode::hypothesis_violation,
                    "supremand '" + F.name + "' violates c <= F_xi <= 1/c");
      if (F.F_xixi && F.F(x, xi) * F.F_xixi(x, xi) < -1.0 / c)
        throw Error(ErrorCode::hypothesis_violation,
                    "supremand '" + F.name + "' violates F F_xixi >= -1/c");
    }
  }
}

}  // namespace fraclinf
