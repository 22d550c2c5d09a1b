#include "fraclinf/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace fraclinf {

double distance(const Point& a, const Point& b, int dim) {
  double d2 = 0.0;
  for (int k = 0; k < dim; ++k) d2 += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(d2);
}

double norm(const Point& a, int dim) { return distance(a, Point{0.0, 0.0}, dim); }

// --- Grid -------------------------------------------------------------------

double Grid::cell_volume() const { return dim_ == 1 ? spacing_ : spacing_ * spacing_; }

std::array<int, 2> Grid::multi_index(std::size_t i) const {
  const auto m = static_cast<std::size_t>(nodes_per_axis());
  if (dim_ == 1) return {static_cast<int>(i), 0};
  return {static_cast<int>(i % m), static_cast<int>(i / m)};
}

std::size_t Grid::flat_index(int k0, int k1) const {
  return static_cast<std::size_t>(k0) +
         static_cast<std::size_t>(nodes_per_axis()) * static_cast<std::size_t>(k1);
}

bool Grid::on_box_boundary(std::size_t i) const {
  const auto k = multi_index(i);
  for (int d = 0; d < dim_; ++d)
    if (k[d] == 0 || k[d] == cells_) return true;
  return false;
}

bool Grid::operator==(const Grid& other) const {
  return dim_ == other.dim_ && cells_ == other.cells_ && half_width_ == other.half_width_ &&
         spacing_ == other.spacing_;
}

GridPtr build_grid(int n, double L, double h) {
  if (n != 1 && n != 2)
    throw Error(ErrorCode::invalid_argument, "grid dimension must be 1 or 2, got " + std::to_string(n));
  if (!(L > 0.0) || !std::isfinite(L))
    throw Error(ErrorCode::invalid_argument, "grid half-width must be positive");
  if (!(h > 0.0) || !std::isfinite(h))
    throw Error(ErrorCode::invalid_argument, "grid spacing must be positive");

  const double ratio = L / h;
  auto half_cells = static_cast<long>(std::llround(ratio));
  bool adjusted = false;
  if (std::abs(ratio - static_cast<double>(half_cells)) > 1e-9 * std::max(1.0, ratio)) {
    half_cells = static_cast<long>(std::ceil(ratio));
    adjusted = true;
  }
  if (half_cells < 1) {
    half_cells = 1;
    adjusted = true;
  }
  if (half_cells > 1 << 20) throw Error(ErrorCode::invalid_argument, "grid too fine");

  std::shared_ptr<Grid> g(new Grid());
  g->dim_ = n;
  g->half_width_ = L;
  g->cells_ = static_cast<int>(2 * half_cells);
  g->spacing_ = adjusted ? L / static_cast<double>(half_cells) : h;
  g->spacing_adjusted_ = adjusted;
  g->requested_spacing_ = h;

  // Coordinates as (k - m) * h keep the lattice exactly symmetric about 0.
  const int m = static_cast<int>(half_cells);
  const int per_axis = g->cells_ + 1;
  std::vector<double> axis(per_axis);
  for (int k = 0; k < per_axis; ++k) axis[k] = static_cast<double>(k - m) * g->spacing_;
  if (n == 1) {
    g->coords_.reserve(per_axis);
    for (int k = 0; k < per_axis; ++k) g->coords_.push_back({axis[k], 0.0});
  } else {
    g->coords_.reserve(static_cast<std::size_t>(per_axis) * per_axis);
    for (int k1 = 0; k1 < per_axis; ++k1)
      for (int k0 = 0; k0 < per_axis; ++k0) g->coords_.push_back({axis[k0], axis[k1]});
  }
  return g;
}

// --- ScalarField ------------------------------------------------------------

ScalarField::ScalarField(GridPtr g, double fill) : grid(std::move(g)) {
  values.assign(grid->node_count(), fill);
}

ScalarField::ScalarField(GridPtr g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {
  if (values.size() != grid->node_count())
    throw Error(ErrorCode::grid_mismatch, "field length does not match grid node count");
}

double ScalarField::max_abs() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

bool ScalarField::all_finite() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

void require_same_grid(const Grid& a, const Grid& b, const char* context) {
  if (!(a == b)) throw Error(ErrorCode::grid_mismatch, std::string(context) + ": grid mismatch");
}

// --- Shapes / domain ----------------------------------------------------------

Shape Shape::interval(double a, double b) {
  if (!(a < b)) throw Error(ErrorCode::invalid_argument, "interval needs a < b");
  Shape s;
  s.kind = Kind::interval;
  s.lo = {a, 0.0};
  s.hi = {b, 0.0};
  return s;
}

Shape Shape::box(const Point& lo, const Point& hi) {
  if (!(lo[0] < hi[0] && lo[1] < hi[1])) throw Error(ErrorCode::invalid_argument, "box needs lo < hi");
  Shape s;
  s.kind = Kind::box;
  s.lo = lo;
  s.hi = hi;
  return s;
}

Shape Shape::ball(const Point& center, double radius) {
  if (!(radius > 0.0)) throw Error(ErrorCode::invalid_argument, "ball radius must be positive");
  Shape s;
  s.kind = Kind::ball;
  s.center = center;
  s.radius = radius;
  return s;
}

bool Shape::contains(const Point& x, int dim) const {
  switch (kind) {
    case Kind::interval:
      return x[0] > lo[0] && x[0] < hi[0];
    case Kind::box:
      for (int k = 0; k < dim; ++k)
        if (!(x[k] > lo[k] && x[k] < hi[k])) return false;
      return true;
    case Kind::ball:
      return distance(x, center, dim) < radius;
  }
  return false;
}

bool Shape::contains_cell(const Point& x, double h, int dim) const {
  const double r = 0.5 * h;
  switch (kind) {
    case Kind::interval:
      return x[0] - r >= lo[0] && x[0] + r <= hi[0];
    case Kind::box:
      for (int k = 0; k < dim; ++k)
        if (!(x[k] - r >= lo[k] && x[k] + r <= hi[k])) return false;
      return true;
    case Kind::ball: {
      // Convexity: the cell is inside iff all its corners are.
      const int corners = dim == 1 ? 2 : 4;
      for (int c = 0; c < corners; ++c) {
        Point y = x;
        y[0] += (c & 1) ? r : -r;
        if (dim == 2) y[1] += (c & 2) ? r : -r;
        if (distance(y, center, dim) > radius) return false;
      }
      return true;
    }
  }
  return false;
}

double Shape::margin_to_box(double L, int dim) const {
  double m = std::numeric_limits<double>::infinity();
  switch (kind) {
    case Kind::interval:
      m = std::min(L - hi[0], lo[0] + L);
      break;
    case Kind::box:
      for (int k = 0; k < dim; ++k) m = std::min({m, L - hi[k], lo[k] + L});
      break;
    case Kind::ball:
      for (int k = 0; k < dim; ++k) m = std::min({m, L - (center[k] + radius), (center[k] - radius) + L});
      break;
  }
  return m;
}

Point Shape::centroid() const {
  if (kind == Kind::ball) return center;
  return {0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])};
}

double DomainSpec::measure(const Grid& grid) const {
  return static_cast<double>(interior_count()) * grid.cell_volume();
}

bool DomainSpec::contains(const Point& x, int dim) const {
  return std::any_of(shapes.begin(), shapes.end(), [&](const Shape& s) { return s.contains(x, dim); });
}

Point DomainSpec::centroid() const {
  Point c{0.0, 0.0};
  for (const auto& s : shapes) {
    const Point sc = s.centroid();
    c[0] += sc[0];
    c[1] += sc[1];
  }
  const double k = shapes.empty() ? 1.0 : static_cast<double>(shapes.size());
  return {c[0] / k, c[1] / k};
}

DomainSpec build_domain(const Grid& grid, std::vector<Shape> shapes) {
  if (shapes.empty()) throw Error(ErrorCode::invalid_argument, "domain needs at least one shape");
  const int n = grid.dim();
  for (const auto& s : shapes) {
    if (n == 1 && s.kind != Shape::Kind::interval)
      throw Error(ErrorCode::invalid_argument, "1D domains are unions of intervals");
    if (n == 2 && s.kind == Shape::Kind::interval)
      throw Error(ErrorCode::invalid_argument, "2D domains are unions of boxes and balls");
    if (s.margin_to_box(grid.half_width(), n) < grid.spacing() * (1.0 - 1e-12))
      throw Error(ErrorCode::support_violation,
                  "domain must stay at least one cell away from the box boundary");
  }

  DomainSpec d;
  d.shapes = std::move(shapes);
  const std::size_t N = grid.node_count();
  d.interior_mask.assign(N, 0);
  d.exterior_mask.assign(N, 1);
  for (std::size_t i = 0; i < N; ++i) {
    const Point& x = grid.coord(i);
    const bool inside = std::any_of(d.shapes.begin(), d.shapes.end(), [&](const Shape& s) {
      return s.contains_cell(x, grid.spacing(), n);
    });
    if (inside) {
      d.interior_mask[i] = 1;
      d.exterior_mask[i] = 0;
      d.interior_nodes.push_back(i);
    } else {
      d.exterior_nodes.push_back(i);
    }
  }
  if (d.interior_nodes.empty())
    throw Error(ErrorCode::invalid_argument, "domain contains no grid nodes; refine the grid");
  return d;
}

// --- Weight -----------------------------------------------------------------

WeightField build_weight(const GridPtr& grid, WeightKind kind, double sigma) {
  const int n = grid->dim();
  if (kind == WeightKind::gaussian && !(sigma > 0.0)) sigma = 0.5 * grid->half_width();
  ScalarField w(grid);
  for (std::size_t i = 0; i < grid->node_count(); ++i) {
    const double r2 = norm(grid->coord(i), n) * norm(grid->coord(i), n);
    w[i] = kind == WeightKind::gaussian ? std::exp(-r2 / (2.0 * sigma * sigma))
                                        : std::pow(1.0 + r2, -static_cast<double>(n + 2));
  }
  double mass = 0.0;
  for (double v : w.values) mass += v;
  mass *= grid->cell_volume();
  const double scale = 1.0 / mass;
  for (double& v : w.values) v *= scale;

  WeightField out;
  out.base = std::move(w);
  out.normalized = true;
  out.normalization = scale;
  out.kind = kind;
  return out;
}

// --- Exterior data ------------------------------------------------------------

double smooth_bump_profile(double t) {
  const double a = 1.0 - t * t;
  return a > 0.0 ? std::exp(1.0 - 1.0 / a) : 0.0;
}

double spline_profile(double t) {
  const double a = 1.0 - t * t;
  return a > 0.0 ? a * a * a : 0.0;
}

double ExteriorData::operator()(const Point& x, int dim) const {
  if (family == Family::custom_samples)
    throw Error(ErrorCode::invalid_argument, "custom_samples data has no pointwise evaluator");
  double v = 0.0;
  for (const auto& b : bumps) {
    const double t = distance(x, b.center, dim) / b.radius;
    v += b.amplitude * (family == Family::smooth_bump ? smooth_bump_profile(t) : spline_profile(t));
  }
  return v;
}

double ExteriorData::support_extent(int dim) const {
  double r = 0.0;
  for (const auto& b : bumps) r = std::max(r, norm(b.center, dim) + b.radius);
  return r;
}

ScalarField sample_exterior_data(const ExteriorData& spec, const GridPtr& grid, const DomainSpec& domain,
                                 bool allow_trivial) {
  const int n = grid->dim();
  ScalarField u(grid);
  if (spec.family == ExteriorData::Family::custom_samples) {
    if (spec.samples.size() != grid->node_count())
      throw Error(ErrorCode::grid_mismatch, "custom exterior samples do not match the grid node count");
    u.values = spec.samples;
    if (!u.all_finite()) throw Error(ErrorCode::invalid_argument, "custom exterior samples are not finite");
  } else {
    const double L = grid->half_width();
    for (const auto& b : spec.bumps) {
      if (!(b.radius > 0.0)) throw Error(ErrorCode::invalid_argument, "bump radius must be positive");
      for (int k = 0; k < n; ++k)
        if (b.center[k] + b.radius >= L || b.center[k] - b.radius <= -L)
          throw Error(ErrorCode::support_violation, "exterior data support exceeds the box");
    }
    for (std::size_t i = 0; i < grid->node_count(); ++i) u[i] = spec(grid->coord(i), n);
  }

  for (std::size_t i = 0; i < grid->node_count(); ++i)
    if (grid->on_box_boundary(i) && u[i] != 0.0)
      throw Error(ErrorCode::support_violation,
                  "exterior data must vanish on the outermost grid layer (support exceeds box)");

  double ext_max = 0.0;
  for (std::size_t i : domain.exterior_nodes) ext_max = std::max(ext_max, std::abs(u[i]));
  if (ext_max == 0.0 && !allow_trivial)
    throw Error(ErrorCode::hypothesis_violation,
                "trivial exterior data: u0 vanishes identically outside Omega");
  return u;
}

}  // namespace fraclinf
