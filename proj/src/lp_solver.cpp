#include "fraclinf/lp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

namespace fraclinf {

ProblemSpec assemble_problem(GridPtr grid, DomainSpec domain, std::shared_ptr<const FracLapOperator> op,
                             WeightField weight, ScalarField exterior_data, SupremandF supremand,
                             bool allow_degenerate) {
  if (!grid || !op) throw Error(ErrorCode::invalid_argument, "problem needs a grid and an operator");
  const double s = op->s();
  const int n = grid->dim();
  if (!(s > 0.0 && s < 1.0)) throw Error(ErrorCode::invalid_argument, "s must lie in (0, 1)");
  if (!(n > 2.0 * s)) {
    std::ostringstream msg;
    msg << "requires n > 2s (got n = " << n << ", s = " << s << ")";
    throw Error(ErrorCode::hypothesis_violation, msg.str());
  }
  require_same_grid(*grid, op->grid(), "operator");
  require_same_grid(*grid, *weight.base.grid, "weight");
  require_same_grid(*grid, *exterior_data.grid, "exterior data");
  if (domain.interior_mask.size() != grid->node_count())
    throw Error(ErrorCode::grid_mismatch, "domain mask does not match the grid");
  if (!weight.normalized) throw Error(ErrorCode::invalid_argument, "weight must be normalized to unit mass");
  if (!exterior_data.all_finite()) throw Error(ErrorCode::invalid_argument, "exterior data has non-finite values");
  if (!supremand.is_identity) validate_supremand(supremand, *grid);

  ProblemSpec spec;
  spec.s = s;
  spec.n = n;
  bool trivial = true;
  for (std::size_t i : domain.exterior_nodes)
    if (exterior_data[i] != 0.0) trivial = false;
  if (trivial && !allow_degenerate)
    throw Error(ErrorCode::hypothesis_violation, "trivial exterior data: u0 vanishes on the exterior region");
  spec.degenerate = trivial;

  auto red = std::make_shared<ReducedSystem>();
  const std::size_t N = grid->node_count();
  const std::size_t M = domain.interior_count();
  red->A_omega.resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(M));
  for (std::size_t k = 0; k < M; ++k)
    op->column(domain.interior_nodes[k], std::span<double>(red->A_omega.col(static_cast<Eigen::Index>(k)).data(), N));

  std::vector<double> fixed = exterior_data.values;
  for (std::size_t i : domain.interior_nodes) fixed[i] = 0.0;
  red->b.resize(static_cast<Eigen::Index>(N));
  op->apply(fixed, std::span<double>(red->b.data(), N));

  red->mass.resize(static_cast<Eigen::Index>(N));
  const double hn = grid->cell_volume();
  for (std::size_t i = 0; i < N; ++i) red->mass[static_cast<Eigen::Index>(i)] = weight.base[i] * hn;
  red->abs_row_sums = red->A_omega.cwiseAbs().rowwise().sum();

  spec.grid = std::move(grid);
  spec.domain = std::move(domain);
  spec.op = std::move(op);
  spec.weight = std::move(weight);
  spec.exterior_data = std::move(exterior_data);
  spec.supremand = std::move(supremand);
  spec.reduced = std::move(red);
  return spec;
}

double default_tolerance(const ProblemSpec& spec) {
  return 1e-9 * std::sqrt(static_cast<double>(spec.grid->node_count()));
}

std::vector<double> default_p_schedule() { return {2, 4, 8, 16, 32, 64, 128}; }

ScalarField feasible_field(const ProblemSpec& spec, const std::vector<double>* interior) {
  ScalarField u = spec.exterior_data;
  const auto& nodes = spec.domain.interior_nodes;
  if (interior && interior->size() != nodes.size())
    throw Error(ErrorCode::invalid_argument, "interior vector has the wrong length");
  for (std::size_t k = 0; k < nodes.size(); ++k) u[nodes[k]] = interior ? (*interior)[k] : 0.0;
  return u;
}

namespace {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Supremand values along a = Au.
struct Terms {
  Vec F, Fx, Fxx;
  double m = 0.0;  // max |F|
};

void supremand_terms(const ProblemSpec& spec, const Vec& a, Terms& t) {
  const auto n = a.size();
  t.F.resize(n);
  t.Fx.resize(n);
  t.Fxx.resize(n);
  if (spec.supremand.is_identity) {
    t.F = a;
    t.Fx.setOnes();
    t.Fxx.setZero();
  } else {
    const auto& coords = spec.grid->coords();
    for (Eigen::Index i = 0; i < n; ++i) {
      const Point& x = coords[static_cast<std::size_t>(i)];
      t.F[i] = spec.supremand.F(x, a[i]);
      t.Fx[i] = spec.supremand.F_xi(x, a[i]);
      t.Fxx[i] = spec.supremand.F_xixi(x, a[i]);
    }
  }
  t.m = t.F.cwiseAbs().maxCoeff();
}

double sgn(double x) { return (x > 0.0) - (x < 0.0); }

// r^q for r >= 0, with 0^0 = 1.
double rpow(double r, double q) { return q == 0.0 ? 1.0 : (r == 0.0 ? 0.0 : std::pow(r, q)); }

// sum_i c_i (|F_i| / m)^p
double scaled_sum(const ProblemSpec& spec, const Vec& a, double m, double p) {
  const Vec& c = spec.reduced->mass;
  double S = 0.0;
  if (spec.supremand.is_identity) {
    for (Eigen::Index i = 0; i < a.size(); ++i) S += c[i] * rpow(std::abs(a[i]) / m, p);
  } else {
    const auto& coords = spec.grid->coords();
    for (Eigen::Index i = 0; i < a.size(); ++i)
      S += c[i] * rpow(std::abs(spec.supremand.F(coords[static_cast<std::size_t>(i)], a[i])) / m, p);
  }
  return S;
}

Vec interior_values(const ProblemSpec& spec, const ScalarField& u) {
  const auto& nodes = spec.domain.interior_nodes;
  Vec v(static_cast<Eigen::Index>(nodes.size()));
  for (std::size_t k = 0; k < nodes.size(); ++k) v[static_cast<Eigen::Index>(k)] = u[nodes[k]];
  return v;
}

ScalarField field_from(const ProblemSpec& spec, const Vec& v) {
  ScalarField u = spec.exterior_data;
  const auto& nodes = spec.domain.interior_nodes;
  for (std::size_t k = 0; k < nodes.size(); ++k) u[nodes[k]] = v[static_cast<Eigen::Index>(k)];
  return u;
}

void require_feasible(const ProblemSpec& spec, const ScalarField& u, const char* what) {
  require_same_grid(*spec.grid, *u.grid, what);
  for (std::size_t i : spec.domain.exterior_nodes)
    if (u[i] != spec.exterior_data[i]) {
      std::ostringstream msg;
      msg << what << " violates the exterior constraint at node " << i;
      throw Error(ErrorCode::invalid_argument, msg.str());
    }
  if (!u.all_finite()) throw Error(ErrorCode::invalid_argument, std::string(what) + " has non-finite values");
}

// Gradient pieces at a: g1_i = c_i r_i^{p-1} sgn(F_i) F_xi, ghat = A_omega^T g1 and
// the relative stationarity |ghat| / | |A_omega|^T |g1| |.
struct GradientInfo {
  Vec g1;
  Vec ghat;
  double scale = 0.0;
  double stationarity = 0.0;
};

GradientInfo gradient_info(const ProblemSpec& spec, const Terms& t, double m, double p) {
  const Vec& c = spec.reduced->mass;
  const Mat& A = spec.reduced->A_omega;
  GradientInfo gi;
  gi.g1.resize(t.F.size());
  for (Eigen::Index i = 0; i < t.F.size(); ++i)
    gi.g1[i] = c[i] * rpow(std::abs(t.F[i]) / m, p - 1.0) * sgn(t.F[i]) * t.Fx[i];
  gi.ghat = A.transpose() * gi.g1;
  const Vec abs_g1 = gi.g1.cwiseAbs();
  gi.scale = (A.cwiseAbs().transpose() * abs_g1).norm();
  gi.stationarity = gi.scale > 0.0 ? gi.ghat.norm() / gi.scale : 0.0;
  return gi;
}

// Htilde = sum_i D_i A_i A_i^T with D_i = c_i[(p-1) r^{p-2} F_xi^2 + r^{p-1} sgn(F) F_xixi m],
// so that the Hessian of sum c (|F|/m)^p is (p/m^2) Htilde.
Mat scaled_hessian(const ProblemSpec& spec, const Terms& t, double m, double p) {
  const Vec& c = spec.reduced->mass;
  const Mat& A = spec.reduced->A_omega;
  Vec d(t.F.size());
  for (Eigen::Index i = 0; i < t.F.size(); ++i) {
    const double r = std::abs(t.F[i]) / m;
    const double Di = c[i] * ((p - 1.0) * rpow(r, p - 2.0) * t.Fx[i] * t.Fx[i] + rpow(r, p - 1.0) * sgn(t.F[i]) * t.Fxx[i] * m);
    d[i] = std::sqrt(std::max(Di, 0.0));
  }
  const Mat B = d.asDiagonal() * A;
  Mat H = Mat::Zero(A.cols(), A.cols());
  H.selfadjointView<Eigen::Lower>().rankUpdate(B.transpose());
  return H;
}

// Solves H x = rhs (lower triangle of H used), adding growing diagonal shifts on failure.
Vec robust_solve(Mat H, const Vec& rhs) {
  const double base = std::max(H.diagonal().cwiseAbs().maxCoeff(), 1e-300);
  double shift = 0.0;
  for (int attempt = 0; attempt < 12; ++attempt) {
    Mat Hs = H;
    if (shift > 0.0) Hs.diagonal().array() += shift;
    Eigen::LLT<Mat, Eigen::Lower> llt(Hs);
    if (llt.info() == Eigen::Success) {
      Vec x = llt.solve(rhs);
      if (x.allFinite()) return x;
    }
    shift = shift == 0.0 ? 1e-14 * base : shift * 100.0;
  }
  return Vec();
}

constexpr double armijo_c1 = 1e-4;

StageResult finish(const ProblemSpec& spec, double p, const Vec& v, int iterations, bool converged,
                   double stationarity) {
  StageResult res;
  res.p = p;
  res.u = field_from(spec, v);
  res.e_p = eval_Ep(spec, res.u, p);
  res.iterations = iterations;
  res.converged = converged;
  res.gradient_norm = stationarity;
  res.objective = res.e_p;
  return res;
}

StageResult newton_p(const ProblemSpec& spec, double p, Vec v, double tol, int max_iter) {
  const Mat& A = spec.reduced->A_omega;
  const Vec& b = spec.reduced->b;
  Vec a = b + A * v;
  Terms t;
  double stationarity = 0.0;
  int stalls = 0;
  for (int it = 0; it < max_iter; ++it) {
    supremand_terms(spec, a, t);
    if (t.m == 0.0) return finish(spec, p, v, it, true, 0.0);
    const double m = t.m;
    const GradientInfo gi = gradient_info(spec, t, m, p);
    stationarity = gi.stationarity;
    if (stationarity <= tol) return finish(spec, p, v, it, true, stationarity);

    Vec delta = robust_solve(scaled_hessian(spec, t, m, p), -m * gi.ghat);
    double slope = delta.size() ? (p / m) * gi.ghat.dot(delta) : 0.0;
    if (!(slope < 0.0)) {
      delta = -m * gi.ghat / std::max(gi.ghat.norm(), 1e-300);
      slope = (p / m) * gi.ghat.dot(delta);
    }
    const Vec Ad = A * delta;
    const double S0 = scaled_sum(spec, a, m, p);
    double step = 1.0;
    bool accepted = false;
    Vec trial;
    for (int ls = 0; ls < 60; ++ls, step *= 0.5) {
      trial = a + step * Ad;
      const double S = scaled_sum(spec, trial, m, p);
      if (std::isfinite(S) && S <= S0 + armijo_c1 * step * slope) {
        accepted = true;
        break;
      }
      // Near the optimum the decrease sits below rounding; take the full step.
      if (ls == 0 && std::abs(slope) <= 1e-13 * S0 && std::isfinite(S) && S <= S0 * (1.0 + 1e-13)) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (++stalls > 2) return finish(spec, p, v, it, false, stationarity);
      continue;
    }
    stalls = 0;
    v += step * delta;
    // Recompute Au from scratch every few steps so rounding does not accumulate.
    a = (it % 8 == 7) ? Vec(b + A * v) : trial;
  }
  supremand_terms(spec, a, t);
  if (t.m > 0.0) stationarity = gradient_info(spec, t, t.m, p).stationarity;
  return finish(spec, p, v, max_iter, stationarity <= tol, stationarity);
}

StageResult lbfgs_p(const ProblemSpec& spec, double p, Vec v, double tol, int max_iter, int memory) {
  const Mat& A = spec.reduced->A_omega;
  const Vec& b = spec.reduced->b;
  Vec a = b + A * v;
  Terms t;
  supremand_terms(spec, a, t);
  if (t.m == 0.0) return finish(spec, p, v, 0, true, 0.0);
  // Fixed scale for the whole stage: the running E_p estimate, so the objective starts at 1.
  const double scale = t.m * std::pow(scaled_sum(spec, a, t.m, p), 1.0 / p);

  std::deque<Vec> S_hist, Y_hist;
  std::deque<double> rho_hist;
  GradientInfo gi = gradient_info(spec, t, scale, p);
  Vec grad = (p / scale) * gi.ghat;
  double f = scaled_sum(spec, a, scale, p);
  double stationarity = gi.stationarity;
  for (int it = 0; it < max_iter; ++it) {
    if (stationarity <= tol) return finish(spec, p, v, it, true, stationarity);
    // Two-loop recursion.
    Vec q = grad;
    std::vector<double> alpha(S_hist.size());
    for (std::size_t k = S_hist.size(); k-- > 0;) {
      alpha[k] = rho_hist[k] * S_hist[k].dot(q);
      q -= alpha[k] * Y_hist[k];
    }
    if (!S_hist.empty()) q *= S_hist.back().dot(Y_hist.back()) / Y_hist.back().squaredNorm();
    else q *= 1.0 / std::max(grad.norm(), 1e-300) * 1e-3 * std::max(1.0, v.cwiseAbs().maxCoeff());
    for (std::size_t k = 0; k < S_hist.size(); ++k) {
      const double beta = rho_hist[k] * Y_hist[k].dot(q);
      q += (alpha[k] - beta) * S_hist[k];
    }
    Vec dir = -q;
    double slope = grad.dot(dir);
    if (!(slope < 0.0)) {
      S_hist.clear();
      Y_hist.clear();
      rho_hist.clear();
      dir = -grad;
      slope = grad.dot(dir);
    }
    const Vec Ad = A * dir;
    double step = 1.0;
    bool accepted = false;
    Vec trial;
    double f_new = f;
    for (int ls = 0; ls < 60; ++ls, step *= 0.5) {
      trial = a + step * Ad;
      f_new = scaled_sum(spec, trial, scale, p);
      if (std::isfinite(f_new) && f_new <= f + armijo_c1 * step * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted) return finish(spec, p, v, it, false, stationarity);
    const Vec s_vec = step * dir;
    v += s_vec;
    a = trial;
    supremand_terms(spec, a, t);
    gi = gradient_info(spec, t, scale, p);
    const Vec grad_new = (p / scale) * gi.ghat;
    const Vec y = grad_new - grad;
    const double sy = s_vec.dot(y);
    if (sy > 1e-16 * s_vec.norm() * y.norm()) {
      S_hist.push_back(s_vec);
      Y_hist.push_back(y);
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(S_hist.size()) > memory) {
        S_hist.pop_front();
        Y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    grad = grad_new;
    f = f_new;
    stationarity = gi.stationarity;
  }
  return finish(spec, p, v, max_iter, stationarity <= tol, stationarity);
}

void require_p(double p, double lo) {
  if (!(p >= lo) || !std::isfinite(p)) {
    std::ostringstream msg;
    msg << "exponent p must be finite and >= " << lo << " (got " << p << ")";
    throw Error(ErrorCode::invalid_argument, msg.str());
  }
}

}  // namespace

double eval_Ep(const ProblemSpec& spec, const ScalarField& u, double p) {
  require_same_grid(*spec.grid, *u.grid, "eval_Ep");
  if (!(p >= 1.0)) throw Error(ErrorCode::invalid_argument, "eval_Ep needs p >= 1");
  const ScalarField au = spec.op->apply(u);
  const Vec a = Eigen::Map<const Vec>(au.values.data(), static_cast<Eigen::Index>(au.size()));
  Terms t;
  supremand_terms(spec, a, t);
  if (!std::isfinite(t.m)) {
    std::ostringstream msg;
    msg << "E_p overflow: max |F| = " << t.m;
    throw Error(ErrorCode::numerical_failure, msg.str());
  }
  if (t.m == 0.0) return 0.0;
  if (std::isinf(p)) return t.m;
  const double S = scaled_sum(spec, a, t.m, p);
  const double e = t.m * std::pow(S, 1.0 / p);
  if (!std::isfinite(e)) {
    std::ostringstream msg;
    msg << "E_p overflow despite scaling (scale " << t.m << ", scaled sum " << S << ")";
    throw Error(ErrorCode::numerical_failure, msg.str());
  }
  return e;
}

ScalarField grad_Ep_p(const ProblemSpec& spec, const ScalarField& u, double p) {
  require_same_grid(*spec.grid, *u.grid, "grad_Ep_p");
  require_p(p, 2.0);
  ScalarField out(spec.grid, 0.0);
  const ScalarField au = spec.op->apply(u);
  const Vec a = Eigen::Map<const Vec>(au.values.data(), static_cast<Eigen::Index>(au.size()));
  Terms t;
  supremand_terms(spec, a, t);
  if (t.m == 0.0) return out;
  // p sum_i c_i |F_i|^{p-1} sgn(F_i) F_xi A_ik = p m^{p-1} (A^T g1)_k
  const GradientInfo gi = gradient_info(spec, t, t.m, p);
  const double factor = p * std::pow(t.m, p - 1.0);
  const auto& nodes = spec.domain.interior_nodes;
  for (std::size_t k = 0; k < nodes.size(); ++k) out[nodes[k]] = factor * gi.ghat[static_cast<Eigen::Index>(k)];
  return out;
}

double eval_Ap(const ProblemSpec& spec, const ScalarField& v, const ScalarField& target, double p) {
  require_same_grid(*spec.grid, *target.grid, "eval_Ap");
  double q = 0.0;
  for (std::size_t i : spec.domain.interior_nodes) q += (v[i] - target[i]) * (v[i] - target[i]);
  return eval_Ep(spec, v, p) + 0.5 * q / static_cast<double>(spec.domain.interior_count());
}

StageResult solve_p(const ProblemSpec& spec, double p, const ScalarField& warm_start, const SolverOptions& options) {
  require_p(p, 2.0);
  require_feasible(spec, warm_start, "warm start");
  const double tol = options.tol_grad > 0.0 ? options.tol_grad : default_tolerance(spec);
  if (spec.degenerate) return finish(spec, p, Vec::Zero(static_cast<Eigen::Index>(spec.domain.interior_count())), 0, true, 0.0);
  Vec v = interior_values(spec, warm_start);
  if (options.method == Optimizer::lbfgs) return lbfgs_p(spec, p, std::move(v), tol, options.max_iterations, options.lbfgs_memory);
  return newton_p(spec, p, std::move(v), tol, options.max_iterations);
}

StageResult solve_penalized(const ProblemSpec& spec, double p, const ScalarField& target, const SolverOptions& options) {
  require_p(p, 2.0);
  require_feasible(spec, target, "penalization target");
  const double tol = options.tol_grad > 0.0 ? options.tol_grad : default_tolerance(spec);
  const Mat& A = spec.reduced->A_omega;
  const Vec& b = spec.reduced->b;
  const Vec tv = interior_values(spec, target);
  const double inv_n = 1.0 / static_cast<double>(tv.size());
  Vec v = tv;
  Vec a = b + A * v;
  Terms t;
  double stationarity = 0.0;
  int it = 0;
  bool converged = false;

  // Phi(v) = m S^{1/p} + (inv_n / 2) |v - t|^2 with S = sum c (|F|/m)^p.
  auto phi = [&](const Vec& aa, const Vec& vv, double m) {
    const double S = scaled_sum(spec, aa, m, p);
    return m * std::pow(S, 1.0 / p) + 0.5 * inv_n * (vv - tv).squaredNorm();
  };

  for (; it < options.max_iterations; ++it) {
    supremand_terms(spec, a, t);
    const Vec diff = v - tv;
    if (t.m == 0.0) {
      // E_p is zero here and nonnegative, so only the quadratic part can still decrease.
      if (diff.norm() == 0.0) {
        converged = true;
        break;
      }
      v = tv;
      a = b + A * v;
      continue;
    }
    const double m = t.m;
    const GradientInfo gi = gradient_info(spec, t, m, p);
    const double S = scaled_sum(spec, a, m, p);
    const double k1 = std::pow(S, 1.0 / p - 1.0);
    const Vec G = k1 * gi.ghat + inv_n * diff;
    const double denom = k1 * gi.scale + inv_n * (diff.norm() + tv.norm() * 1e-3);
    stationarity = denom > 0.0 ? G.norm() / denom : 0.0;
    if (stationarity <= tol) {
      converged = true;
      break;
    }
    Mat H = scaled_hessian(spec, t, m, p) * (k1 / m);
    Mat H_full = H;
    H_full.selfadjointView<Eigen::Lower>().rankUpdate(gi.ghat, -(p - 1.0) * std::pow(S, 1.0 / p - 2.0) / m);
    H_full.diagonal().array() += inv_n;
    Eigen::LLT<Mat, Eigen::Lower> llt(H_full);
    Vec delta;
    if (llt.info() == Eigen::Success) delta = -llt.solve(G);
    if (!delta.size() || !delta.allFinite() || !(G.dot(delta) < 0.0)) {
      // Drop the negative rank-one term: a positive definite majorant.
      H.diagonal().array() += inv_n;
      delta = robust_solve(H, -G);
      if (!delta.size() || !(G.dot(delta) < 0.0)) delta = -G;
    }
    const double slope = G.dot(delta);
    const Vec Ad = A * delta;
    const double f0 = phi(a, v, m);
    double step = 1.0;
    bool accepted = false;
    Vec trial;
    for (int ls = 0; ls < 60; ++ls, step *= 0.5) {
      trial = a + step * Ad;
      const double f = phi(trial, v + step * delta, m);
      if (std::isfinite(f) && (f <= f0 + armijo_c1 * step * slope ||
                               (ls == 0 && std::abs(slope) <= 1e-13 * std::abs(f0) && f <= f0 * (1.0 + 1e-13)))) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    v += step * delta;
    a = (it % 8 == 7) ? Vec(b + A * v) : trial;
  }
  StageResult res = finish(spec, p, v, it, converged, stationarity);
  res.objective = eval_Ap(spec, res.u, target, p);
  return res;
}

double extrapolate_e_inf(const std::vector<StageResult>& stages, std::size_t last_k) {
  if (stages.empty()) throw Error(ErrorCode::invalid_argument, "no stages to extrapolate");
  const std::size_t k = std::min(last_k, stages.size());
  if (k < 2) return stages.back().e_p;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t j = stages.size() - k; j < stages.size(); ++j) {
    const double x = 1.0 / stages[j].p;
    const double y = stages[j].e_p;
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double kk = static_cast<double>(k);
  const double slope = (kk * sxy - sx * sy) / (kk * sxx - sx * sx);
  return (sy - slope * sx) / kk;
}

ContinuationResult continuation(const ProblemSpec& spec, const std::vector<double>& p_schedule,
                                const SolverOptions& options, const std::optional<ScalarField>& warm_start) {
  if (p_schedule.empty()) throw Error(ErrorCode::invalid_argument, "empty p-schedule");
  if (p_schedule.front() < 2.0) throw Error(ErrorCode::invalid_argument, "p-schedule must start at p >= 2");
  for (std::size_t k = 1; k < p_schedule.size(); ++k)
    if (!(p_schedule[k] > p_schedule[k - 1])) throw Error(ErrorCode::invalid_argument, "p-schedule must be strictly increasing");

  ContinuationResult out;
  out.p_schedule = p_schedule;
  out.degenerate = spec.degenerate;
  ScalarField current = warm_start ? *warm_start : feasible_field(spec);
  for (double p : p_schedule) {
    StageResult st = solve_p(spec, p, current, options);
    current = st.u;
    out.all_converged = out.all_converged && st.converged;
    out.stages.push_back(std::move(st));
  }
  out.e_inf_estimate = out.stages.back().e_p;
  out.e_inf_extrapolated = extrapolate_e_inf(out.stages, 4);
  out.extrapolation_delta = std::abs(out.e_inf_extrapolated - extrapolate_e_inf(out.stages, 3));
  out.u_inf_estimate = out.stages.back().u;
  return out;
}

}  // namespace fraclinf
