#pragma once

#include <functional>
#include <limits>
#include <vector>

#include "fraclinf/grid.hpp"

namespace fraclinf {

/// Pointwise function handle plus the support information the quadrature needs.
///
/// `value` must vanish outside the ball B(support_center, support_radius);
/// functions with fast decay (Gaussians) use the radius past which they
/// underflow. `kinks` lists 1D abscissae where the function is not smooth.
struct AnalyticFunction {
  std::function<double(const Point&)> value;
  int dim = 1;
  Point support_center{0.0, 0.0};
  double support_radius = std::numeric_limits<double>::infinity();
  std::vector<double> kinks;

  double operator()(const Point& x) const { return value(x); }
};

/// amplitude * exp(-|x - center|^2 / width^2)
AnalyticFunction gaussian_function(int dim, double amplitude = 1.0, const Point& center = {0.0, 0.0},
                                   double width = 1.0);
AnalyticFunction bump_function(int dim, const Point& center, double radius, double amplitude = 1.0);
AnalyticFunction spline_function(int dim, const Point& center, double radius, double amplitude = 1.0);
/// (1 - |x|^2)_+^s, whose fractional Laplacian is constant on the unit ball.
AnalyticFunction torsion_profile(int dim, double s);

struct OracleResult {
  double value = 0.0;
  double error_estimate = 0.0;
};

/// Adaptive-quadrature value of (-Delta)^s f(x) from the symmetric
/// second-difference form of the singular integral. Throws
/// ErrorCode::numerical_failure when the estimated error exceeds `tol`
/// (absolute, relative to max(1, |value|)).
OracleResult oracle_slap(const AnalyticFunction& f, const Point& x, double s, double tol = 1e-10);

/// Kelvin transform u_K(y) = |y - x0|^{2s-n} u(K(y)), K(y) = r^2 (y - x0)/|y - x0|^2 + x0.
AnalyticFunction kelvin_transform(const AnalyticFunction& f, double r, const Point& x0, double s);

/// The inversion map K_{r,x0} alone.
Point kelvin_map(const Point& y, double r, const Point& x0, int dim);

}  // namespace fraclinf
