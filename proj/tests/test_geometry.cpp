#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "occrisk/geometry.hpp"
#include "oracles.hpp"

using namespace occrisk;

namespace {

Polygon2 unit_square() { return Polygon2({{-1, -1}, {1, -1}, {1, 1}, {-1, 1}}); }

Polygon2 random_star(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> rad(0.5, 3.0);
  std::uniform_real_distribution<double> off(-2.0, 2.0);
  std::uniform_int_distribution<int> count(3, 12);
  const int n = count(rng);
  const Point2 c{off(rng), off(rng)};
  Ring ring;
  for (int k = 0; k < n; ++k) {
    const double a = 2.0 * std::numbers::pi * k / n;
    ring.push_back(c + rad(rng) * unit_vector(a));
  }
  return Polygon2(ring);
}

}  // namespace

TEST(PointInPolygon, SquareExamples) {
  const auto sq = unit_square();
  EXPECT_TRUE(point_in_polygon({0, 0}, sq));
  EXPECT_FALSE(point_in_polygon({2, 0}, sq));
  EXPECT_TRUE(point_in_polygon({1, 0}, sq));
  EXPECT_TRUE(point_in_polygon({1, 1}, sq));
}

TEST(PointInPolygon, HolesExcludeOnlyTheirInterior) {
  const Polygon2 p({{0, 0}, {10, 0}, {10, 10}, {0, 10}}, {{{4, 4}, {6, 4}, {6, 6}, {4, 6}}});
  EXPECT_FALSE(point_in_polygon({5, 5}, p));
  EXPECT_TRUE(point_in_polygon({4, 5}, p));
  EXPECT_TRUE(point_in_polygon({2, 2}, p));
}

TEST(PointInPolygon, AgreesWithWindingNumber) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> q(-6.0, 6.0);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto poly = random_star(rng);
    for (int k = 0; k < 60; ++k) {
      const Point2 p{q(rng), q(rng)};
      ASSERT_EQ(point_in_polygon(p, poly), oracle::inside_closed(p, poly)) << p.x << "," << p.y;
      ++checked;
    }
    // vertices and edge midpoints are boundary points
    const auto& r = poly.outer();
    EXPECT_TRUE(point_in_polygon(r[0], poly));
    EXPECT_TRUE(point_in_polygon(0.5 * (r[0] + r[1]), poly));
  }
  EXPECT_GE(checked, 10000);
}

TEST(Polygon, RejectsMalformedRings) {
  EXPECT_THROW(Polygon2({{0, 0}, {1, 0}}), StructuralError);
  EXPECT_THROW(Polygon2({{0, 0}, {1, 1}, {1, 0}, {0, 1}}), StructuralError);  // bow tie
  EXPECT_THROW(Polygon2({{0, 0}, {1, 0}, {2, 0}}), StructuralError);
  EXPECT_THROW(Polygon2({{0, 0}, {4, 0}, {4, 4}, {0, 4}}, {{{3, 3}, {5, 3}, {5, 5}, {3, 5}}}), StructuralError);
  EXPECT_THROW(point_in_polygon({std::nan(""), 0.0}, unit_square()), ContractViolation);
}

TEST(Polygon, OrientationNormalizedAndAreaPositive) {
  const Polygon2 cw({{0, 0}, {0, 2}, {3, 2}, {3, 0}});
  EXPECT_NEAR(cw.area(), 6.0, 1e-12);
  EXPECT_GT(detail::signed_area(cw.outer()), 0.0);
  const auto c = cw.centroid();
  EXPECT_NEAR(c.x, 1.5, 1e-12);
  EXPECT_NEAR(c.y, 1.0, 1e-12);
}

TEST(PolygonDistance, MatchesPairwiseSegmentOracle) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> pos(-15.0, 15.0);
  std::uniform_real_distribution<double> ang(-3.0, 3.0);
  for (int k = 0; k < 300; ++k) {
    const auto a = make_rectangle({pos(rng), pos(rng)}, 4.5, 1.8, ang(rng));
    const auto b = make_rectangle({pos(rng), pos(rng)}, 4.5, 1.8, ang(rng));
    double best = 1e300;
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = 0; j < 4; ++j) {
        best = std::min(best, detail::segment_distance(a.outer()[i], a.outer()[(i + 1) % 4], b.outer()[j],
                                                       b.outer()[(j + 1) % 4]));
      }
    }
    const bool overlap = polygons_overlap(a, b);
    if (overlap) {
      EXPECT_EQ(polygon_distance(a, b), 0.0);
    } else {
      EXPECT_NEAR(polygon_distance(a, b), best, 1e-12);
    }
  }
}

TEST(PolygonOverlap, TouchingIsNotOverlap) {
  const auto a = make_rectangle({0, 0}, 2, 2);
  EXPECT_FALSE(polygons_overlap(a, make_rectangle({2, 0}, 2, 2)));
  EXPECT_TRUE(polygons_overlap(a, make_rectangle({1.9, 0}, 2, 2)));
  EXPECT_TRUE(polygons_overlap(a, make_rectangle({0, 0}, 0.5, 0.5)));
  EXPECT_EQ(polygon_distance(a, make_rectangle({2, 0}, 2, 2)), 0.0);
}

TEST(LineOfSight, BlockedByInteriorNotByGrazing) {
  const std::vector<Polygon2> occ{make_rectangle({0, 0}, 2, 2)};
  EXPECT_FALSE(line_of_sight({-3, 0}, {3, 0}, occ));
  EXPECT_TRUE(line_of_sight({-3, 1}, {3, 1}, occ));
  EXPECT_TRUE(line_of_sight({-3, 2}, {3, 2}, occ));
}

TEST(Visibility, NoOccludersGivesFullDisk) {
  const auto vr = visibility_region({1, 2}, 100.0, {});
  EXPECT_GE(vr.boundary.outer().size(), 64u);
  EXPECT_TRUE(vr.contains({1 + 99.9, 2}));
  EXPECT_TRUE(vr.contains({1, 2 - 99.9}));
  EXPECT_FALSE(vr.contains({1 + 100.1, 2}));
  for (const auto& p : vr.boundary.outer()) EXPECT_LE(distance(p, {1, 2}), 100.0 + 1e-9);
}

TEST(Visibility, WallHidesPointsBehindIt) {
  const std::vector<Polygon2> wall{make_rectangle({5, 0}, 0.2, 4)};
  const auto vr = visibility_region({0, 0}, 100.0, wall);
  EXPECT_FALSE(vr.contains({10, 0}));
  EXPECT_FALSE(vr.contains({10, 1}));
  EXPECT_TRUE(vr.contains({4, 0}));
  EXPECT_TRUE(vr.contains({10, 8}));
  EXPECT_TRUE(vr.contains({-10, 0}));
}

TEST(Visibility, OccluderOutOfRangeChangesNothing) {
  const std::vector<Polygon2> far{make_rectangle({200, 0}, 10, 10)};
  const auto a = visibility_region({0, 0}, 100.0, {});
  const auto b = visibility_region({0, 0}, 100.0, far);
  EXPECT_EQ(a.sector_radius, b.sector_radius);
}

TEST(Visibility, ObserverInsideOccluderIsDegenerate) {
  const std::vector<Polygon2> occ{make_rectangle({0, 0}, 2, 2)};
  EXPECT_THROW(visibility_region({0, 0}, 10.0, occ), DegenerateObserver);
  EXPECT_NO_THROW(visibility_region({1, 0}, 10.0, occ));  // on the boundary
}

TEST(Visibility, SoundAgainstRaySampleOracle) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> pos(-25.0, 25.0);
  std::uniform_real_distribution<double> size(1.0, 6.0);
  for (int scene = 0; scene < 10; ++scene) {
    std::vector<Polygon2> occ;
    for (int k = 0; k < 5; ++k) {
      auto r = make_rectangle({pos(rng), pos(rng)}, size(rng), size(rng), pos(rng));
      if (!point_in_polygon({0, 0}, r)) occ.push_back(r);
    }
    const auto vr = visibility_region({0, 0}, 30.0, occ);
    int inside = 0;
    for (int k = 0; k < 150; ++k) {
      const Point2 q{pos(rng), pos(rng)};
      if (vr.contains(q)) {
        ++inside;
        EXPECT_LE(norm(q), 30.0);
        EXPECT_TRUE(oracle::ray_clear({0, 0}, q, occ, 800)) << q.x << "," << q.y;
      }
    }
    EXPECT_GT(inside, 0);
  }
}

TEST(Visibility, MoreOccludersNeverEnlarge) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> pos(-20.0, 20.0);
  std::vector<Polygon2> occ{make_rectangle({6, 3}, 2, 5)};
  const auto before = visibility_region({0, 0}, 40.0, occ);
  occ.push_back(make_rectangle({-4, -7}, 3, 3, 0.4));
  const auto after = visibility_region({0, 0}, 40.0, occ);
  for (int k = 0; k < 2000; ++k) {
    const Point2 q{pos(rng), pos(rng)};
    if (after.contains(q)) {
      EXPECT_TRUE(before.contains(q));
    }
  }
}

TEST(Visibility, ContainsBoxIsConservative) {
  const std::vector<Polygon2> wall{make_rectangle({5, 0}, 0.2, 4)};
  const auto vr = visibility_region({0, 0}, 50.0, wall);
  EXPECT_TRUE(vr.contains_box({1, -0.1}, {1.2, 0.1}));
  EXPECT_FALSE(vr.contains_box({5.8, -0.1}, {6.0, 0.1}));
  EXPECT_FALSE(vr.contains_box({4.8, 1.9}, {5.0, 2.1}));  // straddles the wall corner
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> pos(-12.0, 12.0);
  for (int k = 0; k < 3000; ++k) {
    const Point2 lo{pos(rng), pos(rng)};
    const Point2 hi = lo + Point2{0.2, 0.2};
    if (!vr.contains_box(lo, hi)) continue;
    for (const Point2 c : {lo, hi, Point2{lo.x, hi.y}, Point2{hi.x, lo.y}, 0.5 * (lo + hi)}) {
      ASSERT_TRUE(oracle::ray_clear({0, 0}, c, wall, 400));
    }
  }
}

TEST(Placement, RigidTransform) {
  const auto body = make_rectangle({-2.25, 0}, 4.5, 1.8);
  const auto placed = place(body, {10, 5}, std::numbers::pi / 2);
  const auto bb = placed.bbox();
  EXPECT_NEAR(bb.min.x, 9.1, 1e-12);
  EXPECT_NEAR(bb.max.x, 10.9, 1e-12);
  EXPECT_NEAR(bb.min.y, 0.5, 1e-12);
  EXPECT_NEAR(bb.max.y, 5.0, 1e-12);
}

TEST(ThickPolyline, StraightBandIsRectangle) {
  const std::vector<Point2> line{{0, 0}, {5, 0}, {10, 0}};
  const auto band = thick_polyline(line, 2.0);
  EXPECT_NEAR(band.area(), 20.0, 1e-9);
  EXPECT_TRUE(point_in_polygon({7, 0.99}, band));
  EXPECT_FALSE(point_in_polygon({7, 1.01}, band));
}
