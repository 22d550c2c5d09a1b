#include <doctest.h>

#include <cmath>

#include "fraclinf/grid.hpp"

using namespace fraclinf;

TEST_CASE("lattice is symmetric and indexed with the first axis fastest") {
  GridPtr g = build_grid(1, 4.0, 1.0 / 64.0);
  CHECK(g->node_count() == 513);
  CHECK(g->cells() == 512);
  CHECK_FALSE(g->spacing_adjusted());
  CHECK(g->coord(0)[0] == -4.0);
  CHECK(g->coord(512)[0] == 4.0);
  CHECK(g->coord(256)[0] == 0.0);
  for (std::size_t i = 0; i < g->node_count(); ++i) CHECK(g->coord(i)[0] == -g->coord(512 - i)[0]);
  CHECK(g->cell_volume() == doctest::Approx(1.0 / 64.0));

  GridPtr g2 = build_grid(2, 1.0, 0.25);
  CHECK(g2->node_count() == 81);
  const std::size_t i = g2->flat_index(3, 5);
  CHECK(i == 3 + 9 * 5);
  CHECK(g2->multi_index(i) == std::array<int, 2>{3, 5});
  CHECK(g2->coord(i)[0] == doctest::Approx(-0.25));
  CHECK(g2->coord(i)[1] == doctest::Approx(0.25));
  CHECK(g2->on_box_boundary(g2->flat_index(0, 4)));
  CHECK_FALSE(g2->on_box_boundary(g2->flat_index(1, 4)));
  CHECK(g2->cell_volume() == doctest::Approx(0.0625));
}

TEST_CASE("non-dividing spacing is rounded down and flagged") {
  GridPtr g = build_grid(1, 1.0, 0.3);
  CHECK(g->spacing_adjusted());
  CHECK(g->requested_spacing() == 0.3);
  CHECK(g->spacing() == doctest::Approx(0.25));
  CHECK(g->spacing() <= 0.3);
}

TEST_CASE("bad lattice arguments throw") {
  CHECK_THROWS_AS(build_grid(3, 1.0, 0.1), Error);
  CHECK_THROWS_AS(build_grid(1, -1.0, 0.1), Error);
  CHECK_THROWS_AS(build_grid(1, 1.0, 0.0), Error);
}

TEST_CASE("fields on different grids are rejected") {
  GridPtr a = build_grid(1, 1.0, 0.25);
  GridPtr b = build_grid(1, 1.0, 0.125);
  CHECK_THROWS_AS(require_same_grid(*a, *b, "test"), Error);
  CHECK_NOTHROW(require_same_grid(*a, *build_grid(1, 1.0, 0.25), "test"));
  CHECK_THROWS_AS(ScalarField(a, std::vector<double>(3)), Error);
}

TEST_CASE("domain nodes are those whose whole cell lies in a shape") {
  GridPtr g = build_grid(1, 4.0, 1.0 / 64.0);
  DomainSpec d = build_domain(*g, {Shape::interval(-1.0, 1.0)});
  // |x| <= 1 - h/2 with x = j/64 gives |j| <= 63.
  CHECK(d.interior_count() == 127);
  CHECK(d.interior_count() + d.exterior_nodes.size() == g->node_count());
  for (std::size_t i = 0; i < g->node_count(); ++i) CHECK(d.interior_mask[i] + d.exterior_mask[i] == 1);
  CHECK(d.measure(*g) == doctest::Approx(127.0 / 64.0));

  GridPtr g2 = build_grid(2, 2.0, 0.25);
  DomainSpec d2 = build_domain(*g2, {Shape::ball({0.0, 0.0}, 0.75)});
  for (std::size_t i : d2.interior_nodes) {
    const Point& x = g2->coord(i);
    // Farthest corner of the cell lies in the closed ball.
    CHECK(std::hypot(std::abs(x[0]) + 0.125, std::abs(x[1]) + 0.125) <= 0.75 + 1e-12);
  }
  CHECK(d2.is_interior(g2->flat_index(8, 8)));
}

TEST_CASE("domain must keep one cell away from the box") {
  GridPtr g = build_grid(1, 1.0, 0.25);
  CHECK_THROWS_AS(build_domain(*g, {Shape::interval(-1.0, 0.5)}), Error);
  CHECK_THROWS_AS(build_domain(*g, {}), Error);
  CHECK_THROWS_AS(build_domain(*g, {Shape::ball({0.0, 0.0}, 0.5)}), Error);
}

TEST_CASE("weights are positive with unit discrete mass") {
  for (int n : {1, 2}) {
    GridPtr g = build_grid(n, 2.0, 0.125);
    for (WeightKind k : {WeightKind::gaussian, WeightKind::rational}) {
      WeightField w = build_weight(g, k, 0.7);
      CHECK(w.normalized);
      double mass = 0.0;
      for (double v : w.base.values) {
        CHECK(v > 0.0);
        mass += v * g->cell_volume();
      }
      CHECK(mass == doctest::Approx(1.0).epsilon(1e-13));
    }
  }
}

TEST_CASE("smooth bump exterior data") {
  CHECK(smooth_bump_profile(0.0) == 1.0);
  CHECK(smooth_bump_profile(1.0) == 0.0);
  CHECK(smooth_bump_profile(0.5) == doctest::Approx(std::exp(1.0 - 1.0 / 0.75)));
  CHECK(spline_profile(0.5) == doctest::Approx(0.421875));

  GridPtr g = build_grid(1, 4.0, 1.0 / 16.0);
  DomainSpec d = build_domain(*g, {Shape::interval(-1.0, 1.0)});
  ExteriorData ed;
  ed.bumps = {Bump{{2.0, 0.0}, 0.8, 1.5}};
  ScalarField u0 = sample_exterior_data(ed, g, d);
  CHECK(u0[g->flat_index(96)] == doctest::Approx(1.5));  // x = 2
  CHECK(u0.max_abs() == doctest::Approx(1.5));
  for (std::size_t i : d.interior_nodes) CHECK(u0[i] == 0.0);
  CHECK(ed.support_extent(1) == doctest::Approx(2.8));
}

TEST_CASE("exterior data violations") {
  GridPtr g = build_grid(1, 4.0, 1.0 / 16.0);
  DomainSpec d = build_domain(*g, {Shape::interval(-1.0, 1.0)});
  ExteriorData ed;
  ed.bumps = {Bump{{3.5, 0.0}, 0.8, 1.0}};
  CHECK_THROWS_AS(sample_exterior_data(ed, g, d), Error);

  ed.bumps = {Bump{{2.0, 0.0}, 0.8, 0.0}};
  try {
    sample_exterior_data(ed, g, d);
    FAIL("trivial data accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::hypothesis_violation);
  }
  CHECK(sample_exterior_data(ed, g, d, true).max_abs() == 0.0);

  ExteriorData custom;
  custom.family = ExteriorData::Family::custom_samples;
  custom.samples.assign(5, 1.0);
  CHECK_THROWS_AS(sample_exterior_data(custom, g, d), Error);
  custom.samples.assign(g->node_count(), 0.0);
  custom.samples[g->flat_index(100)] = 0.5;
  CHECK(sample_exterior_data(custom, g, d)[g->flat_index(100)] == 0.5);
}
