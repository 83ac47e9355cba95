#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "occrisk/sim.hpp"

using namespace occrisk;

namespace {

double point_segment(Point2 p, Point2 a, Point2 b) {
  const Point2 d = b - a;
  const double t = std::clamp(dot(p - a, d) / dot(d, d), 0.0, 1.0);
  return distance(p, a + t * d);
}

double vertices_to_edges(const Polygon2& a, const Polygon2& b) {
  double best = std::numeric_limits<double>::infinity();
  const auto& ring = b.outer();
  for (const Point2 p : a.outer()) {
    for (std::size_t i = 0; i < ring.size(); ++i) best = std::min(best, point_segment(p, ring[i], ring[(i + 1) % ring.size()]));
  }
  return best;
}

// Exact for disjoint polygons: the closest pair always involves a vertex.
double vertex_edge_distance(const Polygon2& a, const Polygon2& b) {
  return std::min(vertices_to_edges(a, b), vertices_to_edges(b, a));
}

AgentConfig agent(const std::string& id, std::vector<Point2> path, std::vector<SpeedKnot> speed) {
  AgentConfig a;
  a.id = id;
  a.cls = "vehicle";
  a.path = std::move(path);
  a.speed = std::move(speed);
  return a;
}

ScenarioConfig straight() { return load_config(OCCRISK_SCENARIO_DIR "/straight.json"); }

}  // namespace

TEST(Path, ArcLengthAndHeading) {
  const Path p({{0, 0}, {3, 4}, {3, 10}});
  EXPECT_DOUBLE_EQ(p.length(), 11.0);
  const auto a = p.at(2.5);
  EXPECT_NEAR(a.p.x, 1.5, 1e-12);
  EXPECT_NEAR(a.p.y, 2.0, 1e-12);
  EXPECT_NEAR(a.heading, std::atan2(4.0, 3.0), 1e-12);
  const auto v = p.at(5.0);
  EXPECT_NEAR(v.p.x, 3.0, 1e-12);
  EXPECT_NEAR(v.p.y, 4.0, 1e-12);
  EXPECT_NEAR(v.heading, std::numbers::pi / 2, 1e-12);
  EXPECT_EQ(p.at(-3.0).p, (Point2{0, 0}));
  EXPECT_EQ(p.at(50.0).p, (Point2{3, 10}));
  EXPECT_NEAR(p.project({10, 7}), 8.0, 1e-9);
  EXPECT_NEAR(p.project({-1, -1}), 0.0, 1e-12);
}

TEST(ScriptedAgent, TravelledMatchesTrapezoids) {
  // 0..2 s ramp 0 -> 4, hold to 5 s, down to 1 at 6 s, then held.
  const ScriptedAgent a(agent("a", {{0, 0}, {200, 0}}, {{0, 0}, {2, 4}, {5, 4}, {6, 1}}));
  EXPECT_NEAR(a.travelled(1.0), 1.0, 1e-12);
  EXPECT_NEAR(a.travelled(2.0), 4.0, 1e-12);
  EXPECT_NEAR(a.travelled(5.0), 16.0, 1e-12);
  EXPECT_NEAR(a.travelled(6.0), 18.5, 1e-12);
  EXPECT_NEAR(a.travelled(8.0), 20.5, 1e-12);
  EXPECT_NEAR(a.pose(5.0).position.x, 16.0, 1e-12);
  EXPECT_NEAR(a.pose(5.5).speed, 2.5, 1e-12);
}

TEST(ScriptedAgent, StopsAtPathEnd) {
  const ScriptedAgent a(agent("a", {{0, 0}, {0, 10}}, {{0, 2}}));
  const auto p = a.pose(20.0);
  EXPECT_EQ(p.position, (Point2{0, 10}));
  EXPECT_EQ(p.speed, 0.0);
  EXPECT_NEAR(p.heading, std::numbers::pi / 2, 1e-12);
}

TEST(Sense, RangeAndOcclusion) {
  const SensorConfig sc;
  const auto at = [](Point2 c) { return AgentPose{c, 0.0, 0.0, make_rectangle(c, 4.5, 1.8)}; };
  const std::vector<Polygon2> building{make_rectangle({25, 0}, 5, 10)};
  const auto r = sense({0, 0}, {}, {at({50, 0}), at({150, 0})}, sc);
  EXPECT_EQ(r.visible, (std::vector<char>{1, 0}));
  const auto b = sense({0, 0}, building, {at({50, 0}), at({50, 20})}, sc);
  EXPECT_EQ(b.visible, (std::vector<char>{0, 1}));
  // One agent hides another directly behind it.
  const auto c = sense({0, 0}, {}, {at({20, 0}), at({40, 0})}, sc);
  EXPECT_EQ(c.visible, (std::vector<char>{1, 0}));
  EXPECT_TRUE(r.free_space.contains({99, 10}));
  EXPECT_FALSE(r.free_space.contains({99, 0}));
  EXPECT_FALSE(b.free_space.contains({40, 0}));
}

TEST(Sense, AgentShadowLiesBehindIt) {
  const SensorConfig sc;
  const std::vector<Polygon2> building{make_rectangle({30, 15}, 10, 6)};
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> pos(-40, 40), ang(-3.1, 3.1);
  const Point2 sensor{0, 0};
  int shadowed = 0;
  for (int t = 0; t < 20; ++t) {
    const Point2 c{pos(rng), pos(rng)};
    if (norm(c) < 6) continue;
    const AgentPose a{c, ang(rng), 0.0, make_rectangle(c, 4.5, 1.8, ang(rng))};
    const auto with = sense(sensor, building, {a}, sc).free_space;
    const auto without = sense(sensor, building, {}, sc).free_space;
    const auto& ring = a.footprint.outer();
    double near = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ring.size(); ++i) {
      near = std::min(near, point_segment(sensor, ring[i], ring[(i + 1) % ring.size()]));
    }
    // Angular half-span of the footprint about the bearing to its centre.
    const double to_c = std::atan2(c.y, c.x);
    double span = 0.0;
    for (const Point2 v : ring) span = std::max(span, std::abs(std::remainder(std::atan2(v.y, v.x) - to_c, 2 * std::numbers::pi)));
    for (double x = -100; x <= 100; x += 1.0) {
      for (double y = -100; y <= 100; y += 1.0) {
        const Point2 q{x, y};
        if (!without.contains(q) || with.contains(q)) continue;
        ++shadowed;
        EXPECT_GE(norm(q), near - 1e-9) << t << " " << x << "," << y;
        EXPECT_LE(std::abs(std::remainder(std::atan2(y, x) - to_c, 2 * std::numbers::pi)), span + with.sector_width + 1e-12)
            << t << " " << x << "," << y;
      }
    }
  }
  EXPECT_GT(shadowed, 500);
}

TEST(Predict, ConstantVelocity) {
  const AgentPose still{{3, 4}, 0.7, 0.0, make_rectangle({3, 4}, 2, 1, 0.7)};
  const AgentPose moving{{0, 0}, 0.0, 1.0, make_rectangle({0, 0}, 2, 1)};
  const auto p = predict_objects({still, moving}, 10, 0.4);
  ASSERT_EQ(p.size(), 11u);
  for (int n = 0; n <= 10; ++n) {
    EXPECT_EQ(p[n][0].outer(), still.footprint.outer());
    for (std::size_t v = 0; v < 4; ++v) {
      EXPECT_NEAR(p[n][1].outer()[v].x, moving.footprint.outer()[v].x + 0.4 * n, 1e-12);
      EXPECT_NEAR(p[n][1].outer()[v].y, moving.footprint.outer()[v].y, 1e-12);
    }
  }
}

TEST(References, AheadOfProjectionAlongRoute) {
  const Path route({{0, 0}, {100, 0}});
  const auto refs = make_references(route, {10, 1.0, 0.1, 3, 0}, 5.0, 10, 0.4);
  ASSERT_EQ(refs.size(), 10u);
  for (int n = 1; n <= 10; ++n) {
    EXPECT_NEAR(refs[n - 1].x, 10 + 2.0 * n, 1e-12);
    EXPECT_EQ(refs[n - 1].y, 0.0);
    EXPECT_EQ(refs[n - 1].v, 5.0);
  }
  // Heading is unwrapped next to the ego's.
  const auto back = make_references(Path({{0, 0}, {-100, 0}}), {0, 0, -3.0, 0, 0}, 5.0, 1, 0.4);
  EXPECT_NEAR(back[0].theta, -std::numbers::pi, 1e-12);
}

TEST(Sim, StraightRoadReachesCruise) {
  const auto recs = run_scenario(straight());
  ASSERT_FALSE(recs.empty());
  EXPECT_NEAR(recs.back().ego.v, 5.0, 0.05);
  for (const auto& r : recs) EXPECT_LE(std::abs(r.ego.y + 1.75), 0.3);
}

TEST(Sim, ClearanceMatchesVertexEdgeOracle) {
  auto cfg = straight();
  cfg.duration = 8.0;
  cfg.agents.push_back(agent("oncoming", {{60, 1.75}, {-10, 1.75}}, {{0, 4.0}}));
  const auto recs = run_scenario(cfg);
  const auto m = metrics(recs, cfg);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : recs) {
    const double d = vertex_edge_distance(ego_footprint(r.ego, 4.5, 1.8), r.agents[0].pose.footprint);
    EXPECT_NEAR(r.clearance, d, 1e-9) << r.step;
    best = std::min(best, d);
  }
  EXPECT_NEAR(m.min_clearance, best, 1e-9);
  EXPECT_FALSE(m.collision);
  EXPECT_EQ(m.agents[0].id, "oncoming");
}

TEST(Sim, BlindPlannerHitsParkedCar) {
  auto cfg = straight();
  cfg.agents.push_back(agent("parked", {{30, -1.75}, {31, -1.75}}, {{0, 0.0}}));
  RunOptions opts;
  opts.field_hook = [](int, std::vector<StepFields>& f) {
    for (auto& s : f) s.objects.clear();
  };
  const auto recs = run_scenario(cfg, opts);
  const auto m = metrics(recs, cfg);
  EXPECT_TRUE(m.collision);
  EXPECT_EQ(m.collided_with, "parked");
  EXPECT_EQ(m.min_clearance, 0.0);
  EXPECT_TRUE(recs.back().collision);
  // The sighted planner goes around it.
  const auto seen = metrics(run_scenario(cfg), cfg);
  EXPECT_FALSE(seen.collision);
  EXPECT_GT(seen.min_clearance, 0.0);
}

TEST(Sim, HiddenAgentStaysInHiddenSet) {
  auto cfg = load_config(OCCRISK_SCENARIO_DIR "/s3.json");
  cfg.duration = 10.0;
  const auto recs = run_scenario(cfg);
  int violations = 0;
  bool hidden_somewhere = false;
  for (const auto& r : recs) {
    violations += r.soundness_violations;
    for (const auto& a : r.agents) hidden_somewhere = hidden_somewhere || !a.detected;
  }
  EXPECT_EQ(violations, 0);
  EXPECT_TRUE(hidden_somewhere);
  ASSERT_FALSE(recs.front().hidden_cells.empty());
  EXPECT_GT(recs.front().hidden_cells[0], 0u);
}

TEST(Sim, Deterministic) {
  auto cfg = straight();
  cfg.duration = 6.0;
  cfg.agents.push_back(agent("oncoming", {{60, 1.75}, {-10, 1.75}}, {{0, 4.0}}));
  std::ostringstream a, b;
  write_steps_csv(a, run_scenario(cfg), cfg);
  write_steps_csv(b, run_scenario(cfg), cfg);
  EXPECT_EQ(a.str(), b.str());
}

TEST(Csv, StepColumns) {
  auto cfg = straight();
  cfg.duration = 0.8;
  cfg.agents.push_back(agent("car", {{60, 1.75}, {-10, 1.75}}, {{0, 4.0}}));
  const auto recs = run_scenario(cfg);
  std::ostringstream os;
  write_steps_csv(os, recs, cfg);
  std::istringstream in(os.str());
  std::string header, line;
  std::getline(in, header);
  EXPECT_EQ(header,
            "step,t,x,y,theta,v,delta,a,omega,solved,fallback,collision,clearance,soundness_violations,"
            "car_x,car_y,car_heading,car_speed,car_visible,car_detected");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, static_cast<int>(recs.size()));
  EXPECT_EQ(recs.size(), 3u);
}
