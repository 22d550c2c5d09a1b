#include "fraclinf/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/trapezoidal.hpp>

#include "fraclinf/fraclap.hpp"

namespace fraclinf {

AnalyticFunction gaussian_function(int dim, double amplitude, const Point& center, double width) {
  if (!(width > 0.0)) throw Error(ErrorCode::invalid_argument, "Gaussian width must be positive");
  AnalyticFunction f;
  f.dim = dim;
  f.support_center = center;
  f.support_radius = 27.5 * width;  // exp(-27.5^2) underflows to 0
  f.value = [=](const Point& x) {
    const double r = distance(x, center, dim) / width;
    return amplitude * std::exp(-r * r);
  };
  return f;
}

AnalyticFunction bump_function(int dim, const Point& center, double radius, double amplitude) {
  AnalyticFunction f;
  f.dim = dim;
  f.support_center = center;
  f.support_radius = radius;
  f.value = [=](const Point& x) { return amplitude * smooth_bump_profile(distance(x, center, dim) / radius); };
  return f;
}

AnalyticFunction spline_function(int dim, const Point& center, double radius, double amplitude) {
  AnalyticFunction f;
  f.dim = dim;
  f.support_center = center;
  f.support_radius = radius;
  f.value = [=](const Point& x) { return amplitude * spline_profile(distance(x, center, dim) / radius); };
  if (dim == 1) f.kinks = {center[0] - radius, center[0] + radius};
  return f;
}

AnalyticFunction torsion_profile(int dim, double s) {
  AnalyticFunction f;
  f.dim = dim;
  f.support_radius = 1.0;
  f.value = [=](const Point& x) {
    const double r = norm(x, dim);
    return r < 1.0 ? std::pow(1.0 - r * r, s) : 0.0;
  };
  if (dim == 1) f.kinks = {-1.0, 1.0};
  return f;
}

namespace {

using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
constexpr unsigned max_depth = 12;

struct Accumulator {
  double value = 0.0;
  double error = 0.0;
};

template <class G>
void integrate_segment(const G& g, double a, double b, double rel_tol, Accumulator& acc) {
  double err = 0.0;
  acc.value += GK::integrate(g, a, b, max_depth, rel_tol, &err);
  acc.error += err;
}

std::vector<double> split_points(std::vector<double> pts, double lo, double T) {
  std::sort(pts.begin(), pts.end());
  std::vector<double> out{lo};
  for (double t : pts) {
    if (!(t > lo * (1.0 + 1e-9)) || t >= T * (1.0 - 1e-12)) continue;
    if (t - out.back() <= 1e-12 * T) continue;
    out.push_back(t);
  }
  out.push_back(T);
  return out;
}

// int_0^T S(t) t^{-1-2s} dt for a symmetric second difference S(t) = O(t^2).
//
// On [0, t_c] S(t)/t^2 = -(A0 + A1 t^2 + ...) is fitted from S(t_c) and
// S(t_c/2) and integrated exactly; this sidesteps the cancellation in S at
// tiny t. Beyond t_c the integral is adaptive Gauss-Kronrod, in log t on the
// first segment where the integrand still behaves like t^{1-2s}.
template <class S>
Accumulator integrate_second_difference(const S& second_diff, double s, double t_c, const std::vector<double>& breaks,
                                        double rel_tol) {
  Accumulator acc;
  const double d1 = -second_diff(t_c) / (t_c * t_c);
  const double d2 = -second_diff(0.5 * t_c) / (0.25 * t_c * t_c);
  const double a1 = (d1 - d2) / (0.75 * t_c * t_c);
  const double a0 = d2 - a1 * 0.25 * t_c * t_c;
  acc.value -= a0 * std::pow(t_c, 2.0 - 2.0 * s) / (2.0 - 2.0 * s) + a1 * std::pow(t_c, 4.0 - 2.0 * s) / (4.0 - 2.0 * s);

  auto g = [&](double t) { return second_diff(t) * std::pow(t, -1.0 - 2.0 * s); };
  auto g_log = [&](double v) {
    const double t = std::exp(v);
    return second_diff(t) * std::pow(t, -2.0 * s);
  };
  integrate_segment(g_log, std::log(breaks[0]), std::log(breaks[1]), rel_tol, acc);
  for (std::size_t k = 2; k < breaks.size(); ++k) integrate_segment(g, breaks[k - 1], breaks[k], rel_tol, acc);
  return acc;
}

}  // namespace

OracleResult oracle_slap(const AnalyticFunction& f, const Point& x, double s, double tol) {
  if (!(tol > 0.0)) throw Error(ErrorCode::invalid_argument, "oracle tolerance must be positive");
  if (!std::isfinite(f.support_radius))
    throw Error(ErrorCode::invalid_argument, "oracle needs a function with finite (effective) support");
  const int n = f.dim;
  const double c = cns_constant(n, s);
  const double fx = f(x);
  const double T = distance(x, f.support_center, n) + f.support_radius;
  const double rel_tol = std::clamp(0.01 * tol, 1e-14, 1e-4);
  const double t_c = 1e-3 * std::min(1.0, f.support_radius);

  Accumulator acc;
  if (T > t_c) {
    if (n == 1) {
      auto sd = [&](double t) { return 2.0 * fx - f(Point{x[0] + t, 0.0}) - f(Point{x[0] - t, 0.0}); };
      std::vector<double> pts;
      for (double k : f.kinks) pts.push_back(std::abs(k - x[0]));
      pts.push_back(std::min(1.0, 0.5 * T));
      acc = integrate_second_difference(sd, s, t_c, split_points(std::move(pts), t_c, T), rel_tol);
    } else {
      auto ring = [&](double r) {
        auto inner = [&](double theta) {
          const double ct = std::cos(theta), st = std::sin(theta);
          return 2.0 * fx - f(Point{x[0] + r * ct, x[1] + r * st}) - f(Point{x[0] - r * ct, x[1] - r * st});
        };
        double err = 0.0;
        return boost::math::quadrature::trapezoidal(inner, 0.0, std::numbers::pi, 1e-13, 16, &err);
      };
      std::vector<double> pts{std::min(1.0, 0.5 * T)};
      acc = integrate_second_difference(ring, s, t_c, split_points(std::move(pts), t_c, T), rel_tol);
    }
  }

  // Beyond T the function vanishes at x +- t and only 2 f(x) t^{-1-2s} remains.
  const double angular = n == 1 ? 2.0 : 2.0 * std::numbers::pi;
  const double tail = angular * fx * std::pow(T, -2.0 * s) / (2.0 * s);

  OracleResult out;
  out.value = c * (acc.value + tail);
  out.error_estimate = c * acc.error;
  if (out.error_estimate > tol * std::max(1.0, std::abs(out.value))) {
    std::ostringstream msg;
    msg << "oracle_slap did not converge: achieved error " << out.error_estimate << " > tolerance " << tol;
    throw Error(ErrorCode::numerical_failure, msg.str());
  }
  return out;
}

Point kelvin_map(const Point& y, double r, const Point& x0, int dim) {
  const double d = distance(y, x0, dim);
  const double k = r * r / (d * d);
  Point out = x0;
  for (int i = 0; i < dim; ++i) out[i] = x0[i] + k * (y[i] - x0[i]);
  return out;
}

AnalyticFunction kelvin_transform(const AnalyticFunction& f, double r, const Point& x0, double s) {
  if (!(r > 0.0)) throw Error(ErrorCode::invalid_argument, "Kelvin radius must be positive");
  const int n = f.dim;
  AnalyticFunction out;
  out.dim = n;
  out.value = [f, r, x0, s, n](const Point& y) {
    const double d = distance(y, x0, n);
    // K(y) runs off to infinity where f vanishes (compact support).
    if (d == 0.0) return 0.0;
    return std::pow(d, 2.0 * s - n) * f(kelvin_map(y, r, x0, n));
  };

  // Inversion maps the support ball B(c,R) to B(x0 + r^2 (c-x0)/(D^2-R^2), r^2 R/(D^2-R^2)).
  const double D = distance(f.support_center, x0, n);
  const double R = f.support_radius;
  if (std::isfinite(R) && D > R) {
    const double q = r * r / (D * D - R * R);
    for (int i = 0; i < n; ++i) out.support_center[i] = x0[i] + q * (f.support_center[i] - x0[i]);
    out.support_radius = q * R;
  }
  for (double k : f.kinks)
    if (k != x0[0]) out.kinks.push_back(kelvin_map(Point{k, 0.0}, r, x0, 1)[0]);
  return out;
}

}  // namespace fraclinf
