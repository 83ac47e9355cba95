#pragma once

// Deterministic closed loop: scripted agents, visibility sensing, constant
// velocity prediction, hidden-set tracking, field assembly and receding
// horizon planning, plus run metrics and the CSV/PGM logs.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "occrisk/geometry.hpp"
#include "occrisk/grid.hpp"
#include "occrisk/occlusion.hpp"
#include "occrisk/planner.hpp"
#include "occrisk/riskfield.hpp"
#include "occrisk/scenario.hpp"

namespace occrisk {

/// Polyline parametrized by arc length.
class Path {
 public:
  struct Sample {
    Point2 p;
    double heading{0.0};
  };

  Path() = default;
  explicit Path(std::vector<Point2> pts) : pts_(std::move(pts)) {
    if (pts_.empty()) throw ContractViolation("Path: no points");
    cum_.assign(pts_.size(), 0.0);
    for (std::size_t i = 1; i < pts_.size(); ++i) cum_[i] = cum_[i - 1] + distance(pts_[i - 1], pts_[i]);
  }

  double length() const { return cum_.back(); }
  const std::vector<Point2>& points() const { return pts_; }

  /// Point at arc length s, clamped to the ends. Headings come from the
  /// segment s falls on (the later one at a vertex).
  Sample at(double s) const {
    if (pts_.size() == 1) return {pts_[0], 0.0};
    s = std::clamp(s, 0.0, length());
    auto it = std::upper_bound(cum_.begin(), cum_.end(), s);
    std::size_t i = it == cum_.begin() ? 0 : static_cast<std::size_t>(it - cum_.begin()) - 1;
    i = std::min(i, pts_.size() - 2);
    const double seg = cum_[i + 1] - cum_[i];
    const double t = seg > 0.0 ? (s - cum_[i]) / seg : 0.0;
    const Point2 d = pts_[i + 1] - pts_[i];
    return {pts_[i] + t * d, std::atan2(d.y, d.x)};
  }

  /// Arc length of the closest point; ties go to the smallest arc length.
  double project(Point2 q) const {
    if (pts_.size() == 1) return 0.0;
    double best = std::numeric_limits<double>::infinity();
    double best_s = 0.0;
    for (std::size_t i = 0; i + 1 < pts_.size(); ++i) {
      const Point2 a = pts_[i];
      const Point2 d = pts_[i + 1] - a;
      const double len2 = dot(d, d);
      const double t = len2 > 0.0 ? std::clamp(dot(q - a, d) / len2, 0.0, 1.0) : 0.0;
      const double dist = distance(q, a + t * d);
      if (dist < best - 1e-12) {
        best = dist;
        best_s = cum_[i] + t * (cum_[i + 1] - cum_[i]);
      }
    }
    return best_s;
  }

 private:
  std::vector<Point2> pts_;
  std::vector<double> cum_;
};

struct AgentPose {
  Point2 position;
  double heading{0.0};
  double speed{0.0};
  Polygon2 footprint;
};

/// Agent moving along its path with a piecewise-linear speed profile; it
/// stops at the end of the path.
class ScriptedAgent {
 public:
  explicit ScriptedAgent(AgentConfig cfg) : cfg_(std::move(cfg)), path_(cfg_.path) {
    if (cfg_.speed.empty()) throw ContractViolation("ScriptedAgent: empty speed profile");
  }

  const AgentConfig& config() const { return cfg_; }
  const Path& path() const { return path_; }

  double profile_speed(double t) const {
    const auto& k = cfg_.speed;
    if (t <= k.front().t) return k.front().v;
    if (t >= k.back().t) return k.back().v;
    std::size_t i = 0;
    while (k[i + 1].t < t) ++i;
    const double w = (t - k[i].t) / (k[i + 1].t - k[i].t);
    return k[i].v + w * (k[i + 1].v - k[i].v);
  }

  /// Distance travelled by time t (exact integral of the profile).
  double travelled(double t) const {
    if (t <= 0.0) return 0.0;
    const auto& k = cfg_.speed;
    double s = 0.0;
    double prev_t = 0.0;
    double prev_v = profile_speed(0.0);
    const auto add = [&](double t1) {
      const double v1 = profile_speed(t1);
      s += 0.5 * (prev_v + v1) * (t1 - prev_t);
      prev_t = t1;
      prev_v = v1;
    };
    for (const auto& knot : k) {
      if (knot.t > prev_t && knot.t < t) add(knot.t);
    }
    add(t);
    return s;
  }

  AgentPose pose(double t) const {
    const double s = travelled(t);
    const auto smp = path_.at(s);
    const double v = s < path_.length() ? profile_speed(t) : 0.0;
    return {smp.p, smp.heading, v, make_rectangle(smp.p, cfg_.length, cfg_.width, smp.heading)};
  }

 private:
  AgentConfig cfg_;
  Path path_;
};

struct SenseResult {
  VisibilityRegion free_space;
  std::vector<char> visible;  // per agent
};

/// Free space from the sensor with buildings, static objects and agent
/// footprints as occluders. An agent counts as seen when its centroid or a
/// footprint vertex is in range and in line of sight past every other
/// occluder.
inline SenseResult sense(Point2 sensor, const std::vector<Polygon2>& static_occluders,
                         const std::vector<AgentPose>& agents, const SensorConfig& sc) {
  std::vector<Polygon2> occ = static_occluders;
  for (const auto& a : agents) occ.push_back(a.footprint);
  SenseResult out;
  out.free_space = visibility_region(sensor, sc.radius, occ, sc.angular_resolution_deg * std::numbers::pi / 180.0);
  out.visible.assign(agents.size(), 0);
  std::vector<Polygon2> others;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    others.assign(static_occluders.begin(), static_occluders.end());
    for (std::size_t k = 0; k < agents.size(); ++k) {
      if (k != i) others.push_back(agents[k].footprint);
    }
    std::vector<Point2> probes = agents[i].footprint.outer();
    probes.push_back(agents[i].footprint.centroid());
    for (const Point2 q : probes) {
      if (distance(q, sensor) <= sc.radius && line_of_sight(sensor, q, others)) {
        out.visible[i] = 1;
        break;
      }
    }
  }
  return out;
}

/// Constant-velocity footprints for n = 0..N, one list per step.
inline std::vector<std::vector<Polygon2>> predict_objects(const std::vector<AgentPose>& agents, int N, double t_s) {
  std::vector<std::vector<Polygon2>> out(static_cast<std::size_t>(N) + 1);
  for (const auto& a : agents) {
    const Point2 vel = a.speed * unit_vector(a.heading);
    for (int n = 0; n <= N; ++n) out[n].push_back(a.footprint.translated(n * t_s * vel));
  }
  return out;
}

/// References for n = 1..N: route points v_ref * t_s * n ahead of the
/// ego's projection, with the route heading unwrapped next to the ego's.
inline std::vector<VehicleState> make_references(const Path& route, const VehicleState& ego, double v_ref, int N,
                                                 double t_s) {
  const double s0 = route.project({ego.x, ego.y});
  std::vector<VehicleState> refs;
  refs.reserve(N);
  for (int n = 1; n <= N; ++n) {
    const auto smp = route.at(s0 + v_ref * t_s * n);
    refs.push_back({smp.p.x, smp.p.y, ego.theta + wrap_angle(smp.heading - ego.theta), v_ref, 0.0});
  }
  return refs;
}

/// Pieces of a lane centerline at least `seg_len` long, cut at edge
/// midpoints so the banded pieces tile the whole lane.
inline std::vector<std::vector<Point2>> split_centerline(const std::vector<Point2>& c, double seg_len) {
  std::vector<std::vector<Point2>> pieces;
  std::vector<Point2> cur{c.front()};
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < c.size(); ++i) {
    const double len = distance(c[i], c[i + 1]);
    const bool last_edge = i + 2 == c.size();
    if (!last_edge && acc + 0.5 * len >= seg_len && i > 0) {
      const Point2 mid = 0.5 * (c[i] + c[i + 1]);
      cur.push_back(mid);
      pieces.push_back(std::move(cur));
      cur = {mid};
      acc = 0.5 * len;
    } else {
      acc += len;
    }
    cur.push_back(c[i + 1]);
  }
  pieces.push_back(std::move(cur));
  return pieces;
}

inline std::vector<AreaDef> build_areas(const ScenarioConfig& cfg) {
  std::vector<AreaDef> out;
  for (std::size_t i = 0; i < cfg.areas.size(); ++i) {
    const auto& a = cfg.areas[i];
    AreaDef d;
    d.id = static_cast<int>(i);
    d.class_id = -1;
    for (std::size_t k = 0; k < cfg.classes.size(); ++k) {
      if (cfg.classes[k].name == a.cls) d.class_id = static_cast<int>(k);
    }
    if (a.lane) {
      d.region = thick_polyline(a.lane->centerline, a.lane->width);
      for (const auto& piece : split_centerline(a.lane->centerline, a.lane->segment_length)) {
        const Point2 chord = piece.back() - piece.front();
        d.segments.push_back({thick_polyline(piece, a.lane->width), std::atan2(chord.y, chord.x)});
      }
    } else {
      d.region = *a.polygon;
    }
    out.push_back(std::move(d));
  }
  return out;
}

inline std::vector<HiddenClassParams> build_classes(const ScenarioConfig& cfg) {
  std::vector<HiddenClassParams> out;
  for (std::size_t k = 0; k < cfg.classes.size(); ++k) {
    const auto& c = cfg.classes[k];
    out.push_back({static_cast<int>(k), c.name, c.v_max, c.shape});
  }
  return out;
}

/// Ego body: rectangle trailing the planned reference point, which sits at
/// the middle of the front bumper.
inline Polygon2 ego_footprint(const VehicleState& s, double length, double width) {
  return make_rectangle(Point2{s.x, s.y} - 0.5 * length * unit_vector(s.theta), length, width, s.theta);
}

struct AgentStep {
  AgentPose pose;
  bool visible{false};
  bool detected{false};  // seen at this step or earlier
};

struct SolveRecord {
  PlanResult plan;
  bool fallback{false};
  bool warm_started{false};
  RecedingHorizonPlanner::Start start{RecedingHorizonPlanner::Start::kZero};
  double warm_cost{0.0};
  int max_iterations{0};
  double bound_violation{0.0};
  double wall_ms{0.0};
};

struct StepRecord {
  int step{0};
  double t{0.0};
  VehicleState ego;
  ControlInput applied;
  std::vector<AgentStep> agents;
  double clearance{std::numeric_limits<double>::infinity()};
  std::vector<std::size_t> hidden_cells;  // per class
  int soundness_violations{0};
  bool collision{false};
  std::string collided_with;
  std::optional<SolveRecord> solve;
};

/// Largest amount by which a plan leaves its input or state bounds.
inline double bound_violation(const PlanResult& r, const VehicleParams& p) {
  double worst = 0.0;
  const auto excess = [&worst](double x, const Interval& b) { worst = std::max({worst, b.lo - x, x - b.hi}); };
  for (const auto& u : r.u_seq) {
    excess(u.a, p.a);
    excess(u.omega, p.omega);
  }
  for (std::size_t n = 1; n < r.x_seq.size(); ++n) {
    excess(r.x_seq[n].v, p.v);
    excess(r.x_seq[n].delta, p.delta);
  }
  return worst;
}

struct RunOptions {
  std::optional<std::filesystem::path> grid_dir;  // PGM dumps of hidden sets
  // Replaces the fields handed to the planner at a given step; used to
  // inject failures.
  std::function<void(int step, std::vector<StepFields>&)> field_hook;
};

class Simulation {
 public:
  explicit Simulation(ScenarioConfig cfg, RunOptions opts = {})
      : cfg_(std::move(cfg)), opts_(std::move(opts)), route_(cfg_.ego.route), planner_(cfg_.planner) {
    const auto& vp = cfg_.planner.vehicle;
    ego_ = cfg_.ego.start;
    for (const auto& a : cfg_.agents) agents_.emplace_back(a);
    detected_.assign(agents_.size(), 0);
    static_occluders_ = cfg_.map.buildings;
    static_occluders_.insert(static_occluders_.end(), cfg_.map.static_objects.begin(), cfg_.map.static_objects.end());

    fp_.object = {cfg_.risk.object.a, cfg_.risk.object.sigma, cfg_.risk.support};
    fp_.infrastructure = {cfg_.risk.infrastructure.a, cfg_.risk.infrastructure.sigma, cfg_.risk.support};
    fp_.hidden = {cfg_.risk.hidden.a, cfg_.risk.hidden.sigma, cfg_.risk.support};
    fp_.object_lattice = {cfg_.risk.object.resolution, {0.0, 0.0}, 1, 1};
    fp_.hidden_lattice = {cfg_.risk.hidden.resolution, {0.0, 0.0}, 1, 1};
    const GridSpec infra_lattice{cfg_.risk.infrastructure.resolution, {0.0, 0.0}, 1, 1};
    for (const auto& poly : cfg_.map.infrastructure) {
      if (auto f = risk_field(poly, infra_lattice, fp_.infrastructure, cfg_.risk.pad)) infra_.push_back(std::move(f));
    }
    if (!cfg_.classes.empty()) {
      tracker_.emplace(fp_.hidden_lattice, build_areas(cfg_), build_classes(cfg_), vp.t_s);
    }
    steps_ = static_cast<int>(std::floor(cfg_.duration / vp.t_s + 1e-9));
    if (opts_.grid_dir) std::filesystem::create_directories(*opts_.grid_dir);
  }

  const ScenarioConfig& config() const { return cfg_; }
  const std::vector<ScriptedAgent>& agents() const { return agents_; }
  const std::optional<HiddenSetTracker>& tracker() const { return tracker_; }
  const VehicleState& ego() const { return ego_; }
  bool finished() const { return finished_; }

  /// One control cycle. Returns the record of the step just taken.
  const StepRecord& advance() {
    if (finished_) throw ContractViolation("Simulation: run already finished");
    const auto& vp = cfg_.planner.vehicle;
    const int N = cfg_.planner.N;
    StepRecord rec;
    rec.step = k_;
    rec.t = k_ * vp.t_s;
    rec.ego = ego_;

    std::vector<AgentPose> poses;
    for (const auto& a : agents_) poses.push_back(a.pose(rec.t));
    const Polygon2 body = ego_footprint(ego_, cfg_.ego.length, cfg_.ego.width);
    for (std::size_t i = 0; i < poses.size(); ++i) {
      rec.clearance = std::min(rec.clearance, polygon_distance(body, poses[i].footprint));
      if (!rec.collision && polygons_overlap(body, poses[i].footprint)) {
        rec.collision = true;
        rec.collided_with = agents_[i].config().id;
      }
    }
    for (std::size_t i = 0; i < static_occluders_.size() && !rec.collision; ++i) {
      if (polygons_overlap(body, static_occluders_[i])) {
        rec.collision = true;
        rec.collided_with = i < cfg_.map.buildings.size() ? "building" : "static_object";
      }
    }

    if (rec.collision || k_ >= steps_) {
      for (std::size_t i = 0; i < poses.size(); ++i) rec.agents.push_back({poses[i], false, detected_[i] != 0});
      finished_ = true;
      records_.push_back(std::move(rec));
      return records_.back();
    }

    const SenseResult seen = sense({ego_.x, ego_.y}, static_occluders_, poses, cfg_.sensor);
    if (tracker_) {
      tracker_->observe(seen.free_space);
      tracker_->predict(N);
      for (const auto& c : tracker_->classes()) rec.hidden_cells.push_back(tracker_->hidden_cell_count(c.class_id));
      rec.soundness_violations = soundness_violations(poses, seen.visible);
      if (opts_.grid_dir) dump_grids(rec.step);
    }
    std::vector<AgentPose> visible;
    for (std::size_t i = 0; i < poses.size(); ++i) {
      if (seen.visible[i]) detected_[i] = 1;
      rec.agents.push_back({poses[i], seen.visible[i] != 0, detected_[i] != 0});
      if (seen.visible[i]) visible.push_back(poses[i]);
    }

    const double reach = vp.v.hi * vp.t_s * N + cfg_.risk.focus_margin;
    const Box2 focus{{ego_.x - reach, ego_.y - reach}, {ego_.x + reach, ego_.y + reach}};
    auto objects = predict_objects(visible, N, vp.t_s);
    for (auto& step_objects : objects) {
      std::erase_if(step_objects, [&](const Polygon2& p) { return !p.bbox().intersects(focus); });
      for (const auto& s : cfg_.map.static_objects) {
        if (s.bbox().intersects(focus)) step_objects.push_back(s);
      }
    }
    std::vector<std::vector<OccupancyGrid>> hidden;
    if (tracker_ && cfg_.occlusion_tracking) {
      const GridSpec window = covering_window(fp_.hidden_lattice, focus);
      hidden.assign(static_cast<std::size_t>(N) + 1, {});
      for (const auto& c : tracker_->classes()) {
        auto grids = tracker_->merged(c.class_id, window);
        for (int n = 0; n <= N && n < static_cast<int>(grids.size()); ++n) hidden[n].push_back(std::move(grids[n]));
      }
    }
    FieldParams fp = fp_;
    auto fields = build_entity_fields(infra_, objects, hidden, fp, N);
    if (opts_.field_hook) opts_.field_hook(k_, fields);

    const auto refs = make_references(route_, ego_, cfg_.ego.v_ref, N, vp.t_s);
    const auto t0 = std::chrono::steady_clock::now();
    auto out = planner_.step(ego_, refs, fields);
    const auto t1 = std::chrono::steady_clock::now();
    SolveRecord sr;
    sr.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    sr.fallback = out.fallback;
    sr.warm_started = out.warm_started;
    sr.start = out.start;
    sr.warm_cost = out.warm_cost;
    sr.max_iterations = out.max_iterations;
    sr.bound_violation = out.plan.u_seq.empty() ? 0.0 : bound_violation(out.plan, vp);
    sr.plan = std::move(out.plan);
    rec.applied = out.applied;
    rec.solve = std::move(sr);

    ego_ = step(ego_, rec.applied, vp);
    ++k_;
    records_.push_back(std::move(rec));
    return records_.back();
  }

  const std::vector<StepRecord>& run() {
    while (!finished_) advance();
    return records_;
  }

  const std::vector<StepRecord>& records() const { return records_; }

 private:
  // Cells of every not-yet-detected agent that lies inside the areas of its
  // class must lie in that class's hidden set.
  int soundness_violations(const std::vector<AgentPose>& poses, const std::vector<char>& visible) const {
    int bad = 0;
    for (std::size_t i = 0; i < poses.size(); ++i) {
      if (detected_[i] || visible[i]) continue;
      const auto& cls = agents_[i].config().cls;
      int cid = -1;
      for (const auto& c : tracker_->classes()) {
        if (c.name == cls) cid = c.class_id;
      }
      const GridSpec window = covering_window(fp_.hidden_lattice, poses[i].footprint.bbox(), 1);
      OccupancyGrid inside(window);
      for (std::size_t a = 0; a < tracker_->area_count(); ++a) {
        if (tracker_->area(a).class_id == cid) inside = unite(inside, resample_window(tracker_->area_mask(a), window));
      }
      const CellSet cells = cells_of_set(poses[i].footprint, window);
      if (!std::all_of(cells.begin(), cells.end(), [&](Cell c) { return inside.at(c.x, c.y); })) continue;
      const auto grids = tracker_->merged(cid, window);
      for (const Cell c : cells) {
        if (grids.empty() || !grids[0].at(c.x, c.y)) ++bad;
      }
    }
    return bad;
  }

  void dump_grids(int step) const {
    for (const auto& c : tracker_->classes()) {
      const auto grids = tracker_->merged(c.class_id);
      if (grids.empty()) continue;
      char name[96];
      std::snprintf(name, sizeof name, "hidden_%s_%04d.pgm", c.name.c_str(), step);
      write_pgm(*opts_.grid_dir / name, grids[0]);
    }
  }

  ScenarioConfig cfg_;
  RunOptions opts_;
  Path route_;
  RecedingHorizonPlanner planner_;
  FieldParams fp_;
  std::vector<FieldPtr> infra_;
  std::vector<ScriptedAgent> agents_;
  std::vector<Polygon2> static_occluders_;
  std::optional<HiddenSetTracker> tracker_;
  std::vector<char> detected_;
  VehicleState ego_;
  std::vector<StepRecord> records_;
  int k_{0};
  int steps_{0};
  bool finished_{false};
};

inline std::vector<StepRecord> run_scenario(const ScenarioConfig& cfg, RunOptions opts = {}) {
  Simulation sim(cfg, std::move(opts));
  return sim.run();
}

struct AgentMetrics {
  std::string id;
  std::optional<int> first_detection;  // step index
  double detection_time{std::nan("")};
  double detection_distance{std::nan("")};
  double ego_speed_at_detection{std::nan("")};
  double ego_speed_before_detection{std::nan("")};  // one step earlier
  double min_clearance{std::numeric_limits<double>::infinity()};
};

struct RunMetrics {
  int steps{0};
  bool collision{false};
  std::string collided_with;
  double collision_time{std::nan("")};
  double min_clearance{std::numeric_limits<double>::infinity()};
  std::vector<AgentMetrics> agents;
  std::vector<std::pair<double, double>> standstill;  // [start, end] with v <= standstill speed
  int soundness_violations{0};
  int solves{0};
  int fallbacks{0};
  int max_iterations{0};
  int cost_increases{0};
  double max_bound_violation{0.0};
  double mean_solve_ms{0.0};
  double median_solve_ms{0.0};
  double max_solve_ms{0.0};
};

inline constexpr double kStandstillSpeed = 0.1;

inline RunMetrics metrics(const std::vector<StepRecord>& recs, double ego_length = 4.5, double ego_width = 1.8) {
  if (recs.empty()) throw ContractViolation("metrics: no records");
  RunMetrics m;
  m.steps = static_cast<int>(recs.size());
  const std::size_t na = recs.front().agents.size();
  m.agents.resize(na);
  std::vector<double> times;
  std::optional<double> still_since;
  for (std::size_t k = 0; k < recs.size(); ++k) {
    const auto& r = recs[k];
    const Polygon2 body = ego_footprint(r.ego, ego_length, ego_width);
    for (std::size_t i = 0; i < na; ++i) {
      auto& am = m.agents[i];
      const auto& a = r.agents[i];
      am.min_clearance = std::min(am.min_clearance, polygon_distance(body, a.pose.footprint));
      if (a.visible && !am.first_detection) {
        am.first_detection = static_cast<int>(k);
        am.detection_time = r.t;
        am.detection_distance = polygon_distance(body, a.pose.footprint);
        am.ego_speed_at_detection = r.ego.v;
        if (k > 0) am.ego_speed_before_detection = recs[k - 1].ego.v;
      }
    }
    m.min_clearance = std::min(m.min_clearance, r.clearance);
    m.soundness_violations += r.soundness_violations;
    if (r.collision && !m.collision) {
      m.collision = true;
      m.collided_with = r.collided_with;
      m.collision_time = r.t;
    }
    if (r.ego.v <= kStandstillSpeed) {
      if (!still_since) still_since = r.t;
    } else if (still_since) {
      m.standstill.push_back({*still_since, recs[k - 1].t});
      still_since.reset();
    }
    if (r.solve) {
      const auto& s = *r.solve;
      ++m.solves;
      m.fallbacks += s.fallback ? 1 : 0;
      m.max_iterations = std::max(m.max_iterations, s.max_iterations);
      if (s.plan.ok() && s.plan.cost > s.warm_cost) ++m.cost_increases;
      m.max_bound_violation = std::max(m.max_bound_violation, s.bound_violation);
      times.push_back(s.wall_ms);
    }
  }
  if (still_since) m.standstill.push_back({*still_since, recs.back().t});
  if (!times.empty()) {
    double sum = 0.0;
    for (double t : times) sum += t;
    m.mean_solve_ms = sum / static_cast<double>(times.size());
    m.max_solve_ms = *std::max_element(times.begin(), times.end());
    std::vector<double> sorted = times;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    m.median_solve_ms = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  }
  return m;
}

inline RunMetrics metrics(const std::vector<StepRecord>& recs, const ScenarioConfig& cfg) {
  RunMetrics m = metrics(recs, cfg.ego.length, cfg.ego.width);
  for (std::size_t i = 0; i < m.agents.size() && i < cfg.agents.size(); ++i) m.agents[i].id = cfg.agents[i].id;
  return m;
}

namespace detail {

inline std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace detail

/// One row per step. Wall-clock data stays out so identical runs give
/// identical files.
inline void write_steps_csv(std::ostream& os, const std::vector<StepRecord>& recs, const ScenarioConfig& cfg) {
  using detail::fmt;
  os << "step,t,x,y,theta,v,delta,a,omega,solved,fallback,collision,clearance,soundness_violations";
  for (const auto& c : cfg.classes) os << ",hidden_" << c.name;
  for (const auto& a : cfg.agents) {
    for (const char* f : {"x", "y", "heading", "speed", "visible", "detected"}) os << ',' << a.id << '_' << f;
  }
  os << '\n';
  for (const auto& r : recs) {
    const auto& e = r.ego;
    os << r.step << ',' << fmt(r.t) << ',' << fmt(e.x) << ',' << fmt(e.y) << ',' << fmt(e.theta) << ',' << fmt(e.v)
       << ',' << fmt(e.delta) << ',' << fmt(r.applied.a) << ',' << fmt(r.applied.omega) << ',' << (r.solve ? 1 : 0)
       << ',' << (r.solve && r.solve->fallback ? 1 : 0) << ',' << (r.collision ? 1 : 0) << ',' << fmt(r.clearance)
       << ',' << r.soundness_violations;
    for (std::size_t c = 0; c < cfg.classes.size(); ++c) {
      os << ',' << (c < r.hidden_cells.size() ? std::to_string(r.hidden_cells[c]) : "");
    }
    for (const auto& a : r.agents) {
      os << ',' << fmt(a.pose.position.x) << ',' << fmt(a.pose.position.y) << ',' << fmt(a.pose.heading) << ','
         << fmt(a.pose.speed) << ',' << (a.visible ? 1 : 0) << ',' << (a.detected ? 1 : 0);
    }
    os << '\n';
  }
}

inline void write_solves_csv(std::ostream& os, const std::vector<StepRecord>& recs) {
  using detail::fmt;
  os << "step,t,status,iterations,evaluations,initial_cost,cost,tracking,input,infrastructure,objects,hidden,"
        "stationarity,bound_violation,fallback,warm_started,start,warm_cost,max_iterations,wall_ms\n";
  for (const auto& r : recs) {
    if (!r.solve) continue;
    const auto& s = *r.solve;
    const auto& p = s.plan;
    os << r.step << ',' << fmt(r.t) << ',' << to_string(p.status) << ',' << p.iterations << ',' << p.evaluations << ','
       << fmt(p.initial_cost) << ',' << fmt(p.cost) << ',' << fmt(p.terms.tracking) << ',' << fmt(p.terms.input)
       << ',' << fmt(p.terms.infrastructure) << ',' << fmt(p.terms.objects) << ',' << fmt(p.terms.hidden) << ','
       << fmt(p.stationarity) << ',' << fmt(s.bound_violation) << ',' << (s.fallback ? 1 : 0) << ','
       << (s.warm_started ? 1 : 0) << ',' << to_string(s.start) << ',' << fmt(s.warm_cost) << ','
       << s.max_iterations << ',' << fmt(s.wall_ms) << '\n';
  }
}

/// Parameter header listing the planner and risk settings in effect.
inline void write_parameter_header(std::ostream& os, const ScenarioConfig& cfg) {
  using detail::fmt;
  const auto& p = cfg.planner;
  const auto& vp = p.vehicle;
  const auto vec = [](const auto& a) {
    std::string s = "[";
    for (std::size_t i = 0; i < a.size(); ++i) s += (i ? ", " : "") + fmt(a[i]);
    return s + "]";
  };
  const auto iv = [](const Interval& i) { return "[" + fmt(i.lo) + ", " + fmt(i.hi) + "]"; };
  os << "scenario: " << cfg.name << "\n"
     << "occlusion_tracking: " << (cfg.occlusion_tracking ? "on" : "off") << "\n"
     << "t_s: " << fmt(vp.t_s) << " s\n"
     << "N: " << p.N << "\n"
     << "input_weights: " << vec(p.input_weights) << "\n"
     << "stage_weights: " << vec(p.stage_weights) << "\n"
     << "terminal_weights: " << vec(p.terminal_weights) << "\n"
     << "a_bounds: " << iv(vp.a) << " m/s^2\n"
     << "delta_bounds: " << iv(vp.delta) << " rad\n"
     << "v_bounds: " << iv(vp.v) << " m/s\n"
     << "omega_bounds: " << iv(vp.omega) << " rad/s\n"
     << "amplitude o/i/h: " << fmt(cfg.risk.object.a) << ", " << fmt(cfg.risk.infrastructure.a) << ", "
     << fmt(cfg.risk.hidden.a) << "\n"
     << "sigma o/i/h: " << fmt(cfg.risk.object.sigma) << ", " << fmt(cfg.risk.infrastructure.sigma) << ", "
     << fmt(cfg.risk.hidden.sigma) << " m\n"
     << "resolution o/i/h: " << fmt(cfg.risk.object.resolution) << ", " << fmt(cfg.risk.infrastructure.resolution)
     << ", " << fmt(cfg.risk.hidden.resolution) << " m\n"
     << "wheelbase: " << fmt(vp.wheelbase) << " m\n"
     << "sensor_radius: " << fmt(cfg.sensor.radius) << " m\n";
}

inline void write_summary(std::ostream& os, const ScenarioConfig& cfg, const RunMetrics& m) {
  using detail::fmt;
  write_parameter_header(os, cfg);
  os << "\nsteps: " << m.steps << "\n"
     << "collision: " << (m.collision ? "yes (" + m.collided_with + " at t=" + fmt(m.collision_time) + ")" : "no")
     << "\n"
     << "min_clearance: " << fmt(m.min_clearance) << " m\n"
     << "soundness_violations: " << m.soundness_violations << "\n"
     << "solves: " << m.solves << " (fallbacks " << m.fallbacks << ", max iterations " << m.max_iterations
     << ", cost increases " << m.cost_increases << ", max bound violation " << fmt(m.max_bound_violation) << ")\n"
     << "solve_ms mean/median/max: " << fmt(m.mean_solve_ms) << " / " << fmt(m.median_solve_ms) << " / "
     << fmt(m.max_solve_ms) << "\n";
  for (const auto& [a, b] : m.standstill) os << "standstill: " << fmt(a) << " - " << fmt(b) << " s\n";
  for (const auto& a : m.agents) {
    os << "agent " << a.id << ": min_clearance " << fmt(a.min_clearance);
    if (a.first_detection) {
      os << ", detected at t=" << fmt(a.detection_time) << " distance " << fmt(a.detection_distance)
         << " ego v " << fmt(a.ego_speed_at_detection) << " (step before " << fmt(a.ego_speed_before_detection)
         << ")";
    } else {
      os << ", never detected";
    }
    os << "\n";
  }
}

}  // namespace occrisk
