#pragma once

#include <string>
#include <vector>

#include "fraclinf/oracle.hpp"

namespace fraclinf {

struct AgreementRow {
  std::string function;
  double s = 0.0;
  double h = 0.0;
  /// max over probes of |discrete - oracle|
  double max_abs_error = 0.0;
  /// max_abs_error / max |oracle|
  double relative_error = 0.0;
};

struct AgreementTable {
  int n = 1;
  double L = 0.0;
  std::vector<Point> probes;
  std::vector<AgreementRow> coarse;
  std::vector<AgreementRow> fine;  // same functions at h/2
  /// coarse.max_abs_error / fine.max_abs_error per function
  std::vector<double> improvement;
};

/// Discrete operator on the box [-L, L]^n at spacing h and h/2 against the
/// quadrature oracle, for a Gaussian of width min(1, L/6) (negligible at the box
/// edge) and a smooth bump of radius min(1.5, L/2), both centred at the origin.
/// Probes are nodes shared by both grids with |x_k| <= L/2: `probes` points in
/// 1D, a `probes`-point tensor pattern in 2D.
AgreementTable oracle_agreement(int n, double s, double L, double h, std::size_t probes = 20);

struct KelvinCheck {
  std::vector<double> probes;
  std::vector<double> lhs;  // (-Delta)^s f_K (x)
  std::vector<double> rhs;  // |x - x0|^{-2s-n} (-Delta)^s f (K(x))
  /// max |lhs - rhs| / max(1, |rhs|)
  double max_gap = 0.0;
};

/// 1D bump centred at 0.5 with radius 0.3, inversion about x0 = 0 with r = 1.
KelvinCheck kelvin_identity_check(double s, std::size_t probes = 10);

}  // namespace fraclinf
