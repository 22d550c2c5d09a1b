#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fraclinf/error.hpp"

namespace fraclinf {

/// Spatial point; the second coordinate is unused (zero) in 1D.
using Point = std::array<double, 2>;

double distance(const Point& a, const Point& b, int dim);
double norm(const Point& a, int dim);

/// Uniform lattice over the box [-L, L]^n, n in {1, 2}.
///
/// Node k along an axis sits at -L + k*h, k = 0..cells. In 2D the first
/// coordinate runs fastest: index = k0 + (cells + 1) * k1.
class Grid {
 public:
  int dim() const { return dim_; }
  double half_width() const { return half_width_; }
  double spacing() const { return spacing_; }
  int cells() const { return cells_; }
  int nodes_per_axis() const { return cells_ + 1; }
  std::size_t node_count() const { return coords_.size(); }
  /// h^n, the quadrature weight attached to every node.
  double cell_volume() const;

  const Point& coord(std::size_t i) const { return coords_[i]; }
  const std::vector<Point>& coords() const { return coords_; }
  std::array<int, 2> multi_index(std::size_t i) const;
  std::size_t flat_index(int k0, int k1 = 0) const;
  /// True for nodes on the outermost lattice layer.
  bool on_box_boundary(std::size_t i) const;

  /// Set when the requested spacing did not divide 2L and was rounded down.
  bool spacing_adjusted() const { return spacing_adjusted_; }
  double requested_spacing() const { return requested_spacing_; }

  bool operator==(const Grid& other) const;

  friend std::shared_ptr<const Grid> build_grid(int n, double L, double h);

 private:
  Grid() = default;
  int dim_ = 1;
  double half_width_ = 0.0;
  double spacing_ = 0.0;
  int cells_ = 0;
  bool spacing_adjusted_ = false;
  double requested_spacing_ = 0.0;
  std::vector<Point> coords_;
};

using GridPtr = std::shared_ptr<const Grid>;

GridPtr build_grid(int n, double L, double h);

/// One real value per grid node.
struct ScalarField {
  GridPtr grid;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(GridPtr g, double fill = 0.0);
  ScalarField(GridPtr g, std::vector<double> v);

  std::size_t size() const { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  std::span<const double> span() const { return values; }
  std::span<double> span() { return values; }
  double max_abs() const;
  bool all_finite() const;
};

/// Throws ErrorCode::grid_mismatch unless both fields live on equal grids.
void require_same_grid(const Grid& a, const Grid& b, const char* context);

// --- domain -----------------------------------------------------------------

struct Shape {
  enum class Kind { interval, box, ball };
  Kind kind = Kind::interval;
  Point lo{0.0, 0.0};      // interval / box
  Point hi{0.0, 0.0};
  Point center{0.0, 0.0};  // ball
  double radius = 0.0;

  static Shape interval(double a, double b);
  static Shape box(const Point& lo, const Point& hi);
  static Shape ball(const Point& center, double radius);

  bool contains(const Point& x, int dim) const;
  /// Whether the closed cell x + [-h/2, h/2]^n lies in the closure of the shape.
  bool contains_cell(const Point& x, double h, int dim) const;
  /// Distance from the shape to the outside of the box [-L, L]^n (negative if it pokes out).
  double margin_to_box(double L, int dim) const;
  Point centroid() const;
};

/// Partition of the grid nodes into Omega (interior) and its complement in the box.
///
/// A node is interior when its whole cell lies inside one of the shapes, so
/// nodes whose cell straddles the boundary go to the exterior.
struct DomainSpec {
  std::vector<Shape> shapes;
  std::vector<std::uint8_t> interior_mask;
  std::vector<std::uint8_t> exterior_mask;
  std::vector<std::size_t> interior_nodes;
  std::vector<std::size_t> exterior_nodes;

  bool is_interior(std::size_t i) const { return interior_mask[i] != 0; }
  std::size_t interior_count() const { return interior_nodes.size(); }
  /// Lebesgue measure of the discrete Omega, interior_count * h^n.
  double measure(const Grid& grid) const;
  bool contains(const Point& x, int dim) const;
  Point centroid() const;
};

DomainSpec build_domain(const Grid& grid, std::vector<Shape> shapes);

// --- weight -----------------------------------------------------------------

enum class WeightKind { gaussian, rational };

/// Strictly positive probability weight w with sum_i w_i h^n = 1.
struct WeightField {
  ScalarField base;
  bool normalized = false;
  /// Factor the analytic samples were multiplied by to reach unit discrete mass.
  double normalization = 1.0;
  WeightKind kind = WeightKind::gaussian;
};

/// `sigma` is the Gaussian width; ignored for the rational family (1+|x|^2)^{-(n+2)}.
WeightField build_weight(const GridPtr& grid, WeightKind kind, double sigma = 0.0);

// --- exterior data ----------------------------------------------------------

struct Bump {
  Point center{0.0, 0.0};
  double radius = 1.0;
  double amplitude = 1.0;
};

struct ExteriorData {
  enum class Family { smooth_bump, polynomial_spline, custom_samples };
  Family family = Family::smooth_bump;
  std::vector<Bump> bumps;
  /// Node values for custom_samples.
  std::vector<double> samples;
  /// Nominal Hölder order 2s+gamma of the family (informational).
  double regularity_order = 0.0;

  /// Pointwise value of an analytic family (not defined for custom_samples).
  double operator()(const Point& x, int dim) const;
  /// Radius about the origin that contains every bump support.
  double support_extent(int dim) const;
};

/// exp(1 - 1/(1-t^2)) for |t| < 1, else 0.
double smooth_bump_profile(double t);
/// (1 - t^2)^3 for |t| < 1, else 0.
double spline_profile(double t);

/// Samples u0 on the grid. Rejects data whose support leaves the box interior
/// (it must vanish on the outermost layer) and data that vanish on the whole
/// exterior region, unless `allow_trivial` is set.
ScalarField sample_exterior_data(const ExteriorData& spec, const GridPtr& grid,
                                 const DomainSpec& domain, bool allow_trivial = false);

}  // namespace fraclinf
