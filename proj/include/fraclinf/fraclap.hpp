#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fraclinf/grid.hpp"

namespace fraclinf {

/// c_{n,s} = s 4^s Gamma(n/2+s) / (pi^{n/2} Gamma(1-s)).
double cns_constant(int n, double s);

/// Dirichlet beta function sum_{k>=0} (-1)^k (2k+1)^{-s}, s > 0.
double dirichlet_beta(double s);

/// Weight added to each nearest-neighbour coupling to correct the punctured
/// lattice sum for the kernel singularity (see FracLapOperator).
double singular_correction(int n, double s, double h);

enum class TailMode { with_tail, difference_only };
enum class Storage { automatic, dense, matrix_free };

/// Discrete (-Delta)^s on fields that vanish outside the box.
///
///   (Au)_i = sum_{j != i} K_ij (u_i - u_j) + tail_i u_i
///
/// K_ij = c h^n |x_i - x_j|^{-n-2s} is the punctured lattice sum of the
/// singular integral, with a generalized Euler-Maclaurin correction on the
/// nearest neighbours that restores second order: -c zeta(2s-1) h^{-2s} in 1D,
/// -c zeta(s) beta(s) h^{-2s} in 2D. tail_i = c int |x_i - y|^{-n-2s} dy over
/// the complement of the cell-union box [-L-h/2, L+h/2]^n accounts for the
/// zero extension: closed form in 1D, adaptive angular quadrature in 2D.
///
/// K depends only on the lattice offset, so the operator stores one offset
/// table and either materializes the dense matrix (node_count <= 4096) or
/// evaluates rows on the fly.
class FracLapOperator {
 public:
  static constexpr std::size_t dense_limit = 4096;

  FracLapOperator(GridPtr grid, double s, TailMode mode = TailMode::with_tail,
                  Storage storage = Storage::automatic);

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  double s() const { return s_; }
  double cns() const { return cns_; }
  TailMode mode() const { return mode_; }
  bool is_dense() const { return dense_.size() > 0; }

  /// K_ij (zero on the diagonal).
  double kernel(std::size_t i, std::size_t j) const;
  /// Full operator entry A_ij.
  double entry(std::size_t i, std::size_t j) const;
  std::span<const double> tail() const { return tail_; }
  std::span<const double> diagonal() const { return diag_; }

  ScalarField apply(const ScalarField& u) const;
  void apply(std::span<const double> u, std::span<double> out) const;
  /// Value of (Au)_i only.
  double apply_row(std::size_t i, std::span<const double> u) const;
  /// Column j of A (A is symmetric, so also row j).
  void column(std::size_t j, std::span<double> out) const;

  /// Dense copy of A; throws for grids above `dense_limit` unless forced.
  Eigen::MatrixXd dense_matrix(bool force = false) const;

 private:
  double offset_weight(std::size_t i, std::size_t j) const;

  GridPtr grid_;
  double s_;
  double cns_;
  TailMode mode_;
  int axis_nodes_;
  std::vector<double> offset_table_;  // K by |offset| (1D) or (|d0|, |d1|) (2D)
  std::vector<double> tail_;
  std::vector<double> diag_;
  Eigen::MatrixXd dense_;
};

/// Tail integral 1/(2s) * int_0^{2 pi} r_b(theta)^{-2s} dtheta for a point inside
/// the square [-a, a]^2; r_b is the distance to the square's boundary along theta.
/// Multiply by c_{2,s} for the kernel integral over the square's complement.
double square_exterior_integral(const Point& x, double a, double s, double rel_tol = 1e-12);

// --- supremand ----------------------------------------------------------------

/// Supremand F(x, xi) applied to xi = (-Delta)^s u(x). The identity is the
/// default; other families must satisfy F(x,0) = 0, c <= F_xi <= 1/c and
/// F F_xixi >= -1/c, which `validate_supremand` probes.
struct SupremandF {
  std::string name = "identity";
  std::function<double(const Point&, double)> F;
  std::function<double(const Point&, double)> F_xi;
  std::function<double(const Point&, double)> F_xixi;
  double c_bound = 1.0;
  bool is_identity = true;
};

SupremandF identity_supremand();
/// F = a(x) xi with a(x) = 1 + alpha exp(-|x|^2), c = 1/(1+alpha).
SupremandF weighted_supremand(double alpha, int dim);
/// F = xi + kappa tanh(xi), c = 1/(1+kappa).
SupremandF tanh_supremand(double kappa);
SupremandF make_supremand(const std::string& name, double parameter, int dim);

/// Runtime probe of the structural conditions on grid nodes and a fixed xi set.
void validate_supremand(const SupremandF& F, const Grid& grid);

}  // namespace fraclinf
