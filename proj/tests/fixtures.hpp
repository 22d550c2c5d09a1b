#pragma once

#include "fraclinf/lp_solver.hpp"

namespace fixtures {

using namespace fraclinf;

/// Interval (-1, 1) in [-L, L] with one smooth bump of exterior data at x = 2.
inline ProblemSpec bump_problem(double h = 1.0 / 32.0, double s = 0.25, double L = 4.0, double amplitude = 1.0,
                                bool allow_degenerate = false) {
  GridPtr g = build_grid(1, L, h);
  DomainSpec d = build_domain(*g, {Shape::interval(-1.0, 1.0)});
  ExteriorData ed;
  ed.bumps = {Bump{{2.0, 0.0}, 0.8, amplitude}};
  auto op = std::make_shared<FracLapOperator>(g, s);
  ScalarField u0 = sample_exterior_data(ed, g, d, allow_degenerate);
  WeightField w = build_weight(g, WeightKind::gaussian, L / 2.0);
  return assemble_problem(g, d, op, w, u0, identity_supremand(), allow_degenerate);
}

/// Small 2D problem: ball of radius 0.75 in [-2, 2]^2 at h = 1/4.
inline ProblemSpec ball_problem(double h = 0.25, double s = 0.5) {
  GridPtr g = build_grid(2, 2.0, h);
  DomainSpec d = build_domain(*g, {Shape::ball({0.0, 0.0}, 0.75)});
  ExteriorData ed;
  ed.bumps = {Bump{{1.3, 0.0}, 0.5, 1.0}};
  auto op = std::make_shared<FracLapOperator>(g, s);
  ScalarField u0 = sample_exterior_data(ed, g, d);
  WeightField w = build_weight(g, WeightKind::gaussian, 1.0);
  return assemble_problem(g, d, op, w, u0);
}

}  // namespace fixtures
