#pragma once

// Scenario description: map, hidden-object areas, scripted agents, planner
// and risk settings. Read from JSON with strict key checking; every field
// left out takes its default, and defaults are the published parameter set.

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "occrisk/errors.hpp"
#include "occrisk/geometry.hpp"
#include "occrisk/occlusion.hpp"
#include "occrisk/planner.hpp"

namespace occrisk {

using Json = nlohmann::ordered_json;

struct KernelConfig {
  double a{1.0};
  double sigma{1.0};
  double resolution{0.2};
  friend bool operator==(const KernelConfig&, const KernelConfig&) = default;
};

struct RiskConfig {
  KernelConfig object{1300.0, 0.36, 0.2};
  KernelConfig infrastructure{200.0, 0.25, 0.2};
  KernelConfig hidden{110.0, 0.2, 0.2};
  double support{3.0};       // kernel half-width in standard deviations
  int pad{3};                // zero nodes around every DRF before fitting
  double focus_margin{5.0};  // hidden fields are cropped to the horizon reach plus this
  friend bool operator==(const RiskConfig&, const RiskConfig&) = default;
};

struct SensorConfig {
  double radius{100.0};
  double angular_resolution_deg{0.5};
  friend bool operator==(const SensorConfig&, const SensorConfig&) = default;
};

struct EgoConfig {
  VehicleState start;
  double length{4.5};
  double width{1.8};
  std::vector<Point2> route;
  double v_ref{5.0};
  friend bool operator==(const EgoConfig&, const EgoConfig&) = default;
};

struct LaneConfig {
  std::vector<Point2> centerline;
  double width{3.5};
  double segment_length{10.0};
  friend bool operator==(const LaneConfig&, const LaneConfig&) = default;
};

/// Exactly one of `lane` (directional) and `polygon` (undirected) is set.
struct AreaConfig {
  std::string cls;
  std::optional<LaneConfig> lane;
  std::optional<Polygon2> polygon;
  friend bool operator==(const AreaConfig&, const AreaConfig&) = default;
};

struct ClassConfig {
  std::string name;
  double v_max{1.0};
  ElementShape shape{ElementShape::kDisk};
  friend bool operator==(const ClassConfig&, const ClassConfig&) = default;
};

struct SpeedKnot {
  double t{0.0};
  double v{0.0};
  friend bool operator==(const SpeedKnot&, const SpeedKnot&) = default;
};

struct AgentConfig {
  std::string id;
  std::string cls;
  double length{4.5};
  double width{1.8};
  std::vector<Point2> path;
  std::vector<SpeedKnot> speed;  // piecewise linear in time, held outside the knots
  friend bool operator==(const AgentConfig&, const AgentConfig&) = default;
};

struct MapConfig {
  std::vector<Polygon2> infrastructure;
  std::vector<Polygon2> buildings;
  std::vector<Polygon2> static_objects;
  friend bool operator==(const MapConfig&, const MapConfig&) = default;
};

struct ScenarioConfig {
  std::string name;
  double duration{20.0};
  bool occlusion_tracking{true};
  SensorConfig sensor;
  PlannerConfig planner;
  RiskConfig risk;
  EgoConfig ego;
  MapConfig map;
  std::vector<ClassConfig> classes;
  std::vector<AreaConfig> areas;
  std::vector<AgentConfig> agents;
  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

namespace detail {

inline std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

inline std::string index(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

inline void require_object(const Json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
}

inline void check_keys(const Json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  require_object(j, path);
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError(join(path, key), "unknown key");
  }
}

inline double number(const Json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(path, "expected a finite number");
  return v;
}

inline int integer(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
  return j.get<int>();
}

inline std::string string(const Json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path, "expected a string");
  return j.get<std::string>();
}

inline bool boolean(const Json& j, const std::string& path) {
  if (!j.is_boolean()) throw ConfigError(path, "expected true or false");
  return j.get<bool>();
}

template <class F>
void optional_field(const Json& obj, const char* key, const std::string& path, F&& f) {
  if (auto it = obj.find(key); it != obj.end()) f(*it, join(path, key));
}

inline const Json& required_field(const Json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(join(path, key), "missing required key");
  return *it;
}

template <std::size_t K>
std::array<double, K> fixed_vector(const Json& j, const std::string& path) {
  if (!j.is_array() || j.size() != K) throw ConfigError(path, "expected an array of " + std::to_string(K) + " numbers");
  std::array<double, K> out{};
  for (std::size_t i = 0; i < K; ++i) out[i] = number(j[i], index(path, i));
  return out;
}

inline Point2 point(const Json& j, const std::string& path) {
  const auto a = fixed_vector<2>(j, path);
  return {a[0], a[1]};
}

/// Point list; entries are [x, y] or {"arc": {...}} expanded to points no
/// more than 0.25 m apart.
inline std::vector<Point2> point_list(const Json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected an array of points");
  std::vector<Point2> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = index(path, i);
    if (j[i].is_object()) {
      check_keys(j[i], p, {"arc"});
      const Json& arc = required_field(j[i], "arc", p);
      const std::string ap = join(p, "arc");
      check_keys(arc, ap, {"center", "radius", "start_deg", "end_deg"});
      const Point2 c = point(required_field(arc, "center", ap), join(ap, "center"));
      const double r = number(required_field(arc, "radius", ap), join(ap, "radius"));
      if (!(r > 0.0)) throw ConfigError(join(ap, "radius"), "must be > 0");
      const double a0 = number(required_field(arc, "start_deg", ap), join(ap, "start_deg")) * std::numbers::pi / 180;
      const double a1 = number(required_field(arc, "end_deg", ap), join(ap, "end_deg")) * std::numbers::pi / 180;
      const int steps = std::max(1, static_cast<int>(std::ceil(std::abs(a1 - a0) * r / 0.25)));
      for (int k = 0; k <= steps; ++k) {
        const Point2 q = c + r * unit_vector(a0 + (a1 - a0) * k / steps);
        if (out.empty() || distance(out.back(), q) > 1e-9) out.push_back(q);
      }
    } else {
      const Point2 q = point(j[i], p);
      if (out.empty() || distance(out.back(), q) > 1e-9) out.push_back(q);
    }
  }
  return out;
}

inline Polygon2 shape(const Json& j, const std::string& path) {
  require_object(j, path);
  try {
    if (j.contains("polygon")) {
      check_keys(j, path, {"polygon"});
      return Polygon2(point_list(j["polygon"], join(path, "polygon")));
    }
    if (j.contains("rect")) {
      check_keys(j, path, {"rect"});
      const Json& r = j["rect"];
      const std::string rp = join(path, "rect");
      check_keys(r, rp, {"center", "length", "width", "heading_deg"});
      double heading = 0.0;
      optional_field(r, "heading_deg", rp,
                     [&](const Json& v, const std::string& p) { heading = number(v, p) * std::numbers::pi / 180; });
      return make_rectangle(point(required_field(r, "center", rp), join(rp, "center")),
                            number(required_field(r, "length", rp), join(rp, "length")),
                            number(required_field(r, "width", rp), join(rp, "width")), heading);
    }
    if (j.contains("polyline")) {
      check_keys(j, path, {"polyline", "width"});
      const auto pts = point_list(j["polyline"], join(path, "polyline"));
      return thick_polyline(pts, number(required_field(j, "width", path), join(path, "width")));
    }
  } catch (const StructuralError& e) {
    throw ConfigError(path, e.what());
  } catch (const ContractViolation& e) {
    throw ConfigError(path, e.what());
  }
  throw ConfigError(path, "expected one of polygon, rect, polyline");
}

inline std::vector<Polygon2> shape_list(const Json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected an array of shapes");
  std::vector<Polygon2> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(shape(j[i], index(path, i)));
  return out;
}

inline Interval interval(const Json& j, const std::string& path, Interval def) {
  check_keys(j, path, {"lo", "hi"});
  optional_field(j, "lo", path, [&](const Json& v, const std::string& p) { def.lo = number(v, p); });
  optional_field(j, "hi", path, [&](const Json& v, const std::string& p) { def.hi = number(v, p); });
  if (!(def.lo <= def.hi)) throw ConfigError(path, "lo must not exceed hi");
  return def;
}

inline KernelConfig kernel(const Json& j, const std::string& path, KernelConfig k) {
  check_keys(j, path, {"a", "sigma", "resolution"});
  optional_field(j, "a", path, [&](const Json& v, const std::string& p) { k.a = number(v, p); });
  optional_field(j, "sigma", path, [&](const Json& v, const std::string& p) { k.sigma = number(v, p); });
  optional_field(j, "resolution", path, [&](const Json& v, const std::string& p) { k.resolution = number(v, p); });
  if (!(k.a >= 0.0)) throw ConfigError(join(path, "a"), "must be >= 0");
  if (!(k.sigma > 0.0)) throw ConfigError(join(path, "sigma"), "must be > 0");
  if (!(k.resolution > 0.0)) throw ConfigError(join(path, "resolution"), "must be > 0");
  return k;
}

inline void parse_planner(const Json& j, const std::string& path, PlannerConfig& c) {
  check_keys(j, path,
             {"t_s", "N", "wheelbase", "stage_weights", "input_weights", "terminal_weights", "bounds", "solver"});
  auto& vp = c.vehicle;
  optional_field(j, "t_s", path, [&](const Json& v, const std::string& p) { vp.t_s = number(v, p); });
  optional_field(j, "N", path, [&](const Json& v, const std::string& p) { c.N = integer(v, p); });
  optional_field(j, "wheelbase", path, [&](const Json& v, const std::string& p) { vp.wheelbase = number(v, p); });
  optional_field(j, "stage_weights", path,
                 [&](const Json& v, const std::string& p) { c.stage_weights = fixed_vector<5>(v, p); });
  optional_field(j, "input_weights", path,
                 [&](const Json& v, const std::string& p) { c.input_weights = fixed_vector<2>(v, p); });
  optional_field(j, "terminal_weights", path,
                 [&](const Json& v, const std::string& p) { c.terminal_weights = fixed_vector<5>(v, p); });
  optional_field(j, "bounds", path, [&](const Json& b, const std::string& bp) {
    check_keys(b, bp, {"a", "delta", "v", "omega"});
    optional_field(b, "a", bp, [&](const Json& v, const std::string& p) { vp.a = interval(v, p, vp.a); });
    optional_field(b, "delta", bp, [&](const Json& v, const std::string& p) { vp.delta = interval(v, p, vp.delta); });
    optional_field(b, "v", bp, [&](const Json& v, const std::string& p) { vp.v = interval(v, p, vp.v); });
    optional_field(b, "omega", bp, [&](const Json& v, const std::string& p) { vp.omega = interval(v, p, vp.omega); });
  });
  optional_field(j, "solver", path, [&](const Json& s, const std::string& sp) {
    auto& so = c.solver;
    check_keys(s, sp, {"max_iter", "stationarity_tol", "step_tol", "memory", "max_step"});
    optional_field(s, "max_iter", sp, [&](const Json& v, const std::string& p) { so.max_iter = integer(v, p); });
    optional_field(s, "stationarity_tol", sp,
                   [&](const Json& v, const std::string& p) { so.stationarity_tol = number(v, p); });
    optional_field(s, "step_tol", sp, [&](const Json& v, const std::string& p) { so.step_tol = number(v, p); });
    optional_field(s, "memory", sp, [&](const Json& v, const std::string& p) { so.memory = integer(v, p); });
    optional_field(s, "max_step", sp, [&](const Json& v, const std::string& p) { so.max_step = number(v, p); });
    if (so.max_iter < 1) throw ConfigError(join(sp, "max_iter"), "must be >= 1");
    if (so.memory < 1) throw ConfigError(join(sp, "memory"), "must be >= 1");
    if (!(so.max_step > 0.0)) throw ConfigError(join(sp, "max_step"), "must be > 0");
  });
  if (c.N < 1) throw ConfigError(join(path, "N"), "must be >= 1");
  if (!(vp.t_s > 0.0)) throw ConfigError(join(path, "t_s"), "must be > 0");
  if (!(vp.wheelbase > 0.0)) throw ConfigError(join(path, "wheelbase"), "must be > 0");
  for (const auto* w : {&c.stage_weights, &c.terminal_weights}) {
    for (double x : *w) {
      if (x < 0.0) throw ConfigError(path, "weights must be >= 0");
    }
  }
  for (double x : c.input_weights) {
    if (x < 0.0) throw ConfigError(join(path, "input_weights"), "weights must be >= 0");
  }
}

inline Json to_json(Point2 p) { return Json::array({p.x, p.y}); }

inline Json to_json(const std::vector<Point2>& pts) {
  Json a = Json::array();
  for (const auto& p : pts) a.push_back(to_json(p));
  return a;
}

inline Json to_json(const Polygon2& poly) {
  if (!poly.holes().empty()) throw ContractViolation("scenario shapes cannot have holes");
  return Json{{"polygon", to_json(poly.outer())}};
}

inline Json to_json(const std::vector<Polygon2>& polys) {
  Json a = Json::array();
  for (const auto& p : polys) a.push_back(to_json(p));
  return a;
}

inline Json to_json(Interval i) { return Json{{"lo", i.lo}, {"hi", i.hi}}; }

inline Json to_json(const KernelConfig& k) { return Json{{"a", k.a}, {"sigma", k.sigma}, {"resolution", k.resolution}}; }

}  // namespace detail

inline ScenarioConfig parse_config(const Json& j) {
  using namespace detail;
  check_keys(j, "",
             {"name", "duration", "occlusion_tracking", "sensor", "planner", "risk", "ego", "map", "classes", "areas",
              "agents"});
  ScenarioConfig c;
  optional_field(j, "name", "", [&](const Json& v, const std::string& p) { c.name = string(v, p); });
  optional_field(j, "duration", "", [&](const Json& v, const std::string& p) { c.duration = number(v, p); });
  if (!(c.duration > 0.0)) throw ConfigError("duration", "must be > 0");
  optional_field(j, "occlusion_tracking", "",
                 [&](const Json& v, const std::string& p) { c.occlusion_tracking = boolean(v, p); });
  optional_field(j, "sensor", "", [&](const Json& s, const std::string& sp) {
    check_keys(s, sp, {"radius", "angular_resolution_deg"});
    optional_field(s, "radius", sp, [&](const Json& v, const std::string& p) { c.sensor.radius = number(v, p); });
    optional_field(s, "angular_resolution_deg", sp,
                   [&](const Json& v, const std::string& p) { c.sensor.angular_resolution_deg = number(v, p); });
    if (!(c.sensor.radius > 0.0)) throw ConfigError(join(sp, "radius"), "must be > 0");
    if (!(c.sensor.angular_resolution_deg > 0.0)) throw ConfigError(join(sp, "angular_resolution_deg"), "must be > 0");
  });
  optional_field(j, "planner", "", [&](const Json& v, const std::string& p) { parse_planner(v, p, c.planner); });
  optional_field(j, "risk", "", [&](const Json& r, const std::string& rp) {
    check_keys(r, rp, {"object", "infrastructure", "hidden", "support", "pad", "focus_margin"});
    optional_field(r, "object", rp, [&](const Json& v, const std::string& p) { c.risk.object = kernel(v, p, c.risk.object); });
    optional_field(r, "infrastructure", rp,
                   [&](const Json& v, const std::string& p) { c.risk.infrastructure = kernel(v, p, c.risk.infrastructure); });
    optional_field(r, "hidden", rp, [&](const Json& v, const std::string& p) { c.risk.hidden = kernel(v, p, c.risk.hidden); });
    optional_field(r, "support", rp, [&](const Json& v, const std::string& p) { c.risk.support = number(v, p); });
    optional_field(r, "pad", rp, [&](const Json& v, const std::string& p) { c.risk.pad = integer(v, p); });
    optional_field(r, "focus_margin", rp,
                   [&](const Json& v, const std::string& p) { c.risk.focus_margin = number(v, p); });
    if (!(c.risk.support > 0.0)) throw ConfigError(join(rp, "support"), "must be > 0");
    if (c.risk.pad < 0) throw ConfigError(join(rp, "pad"), "must be >= 0");
    if (!(c.risk.focus_margin >= 0.0)) throw ConfigError(join(rp, "focus_margin"), "must be >= 0");
  });

  const Json& ego = required_field(j, "ego", "");
  check_keys(ego, "ego", {"start", "length", "width", "route", "v_ref"});
  {
    const Json& s = required_field(ego, "start", "ego");
    check_keys(s, "ego.start", {"x", "y", "theta", "theta_deg", "v", "delta"});
    if (s.contains("theta") && s.contains("theta_deg")) throw ConfigError("ego.start", "give theta or theta_deg, not both");
    auto& st = c.ego.start;
    optional_field(s, "x", "ego.start", [&](const Json& v, const std::string& p) { st.x = number(v, p); });
    optional_field(s, "y", "ego.start", [&](const Json& v, const std::string& p) { st.y = number(v, p); });
    optional_field(s, "theta", "ego.start", [&](const Json& v, const std::string& p) { st.theta = number(v, p); });
    optional_field(s, "theta_deg", "ego.start",
                   [&](const Json& v, const std::string& p) { st.theta = number(v, p) * std::numbers::pi / 180; });
    optional_field(s, "v", "ego.start", [&](const Json& v, const std::string& p) { st.v = number(v, p); });
    optional_field(s, "delta", "ego.start", [&](const Json& v, const std::string& p) { st.delta = number(v, p); });
  }
  optional_field(ego, "length", "ego", [&](const Json& v, const std::string& p) { c.ego.length = number(v, p); });
  optional_field(ego, "width", "ego", [&](const Json& v, const std::string& p) { c.ego.width = number(v, p); });
  c.ego.route = point_list(required_field(ego, "route", "ego"), "ego.route");
  if (c.ego.route.size() < 2) throw ConfigError("ego.route", "needs at least two distinct points");
  c.ego.v_ref = c.planner.vehicle.v.hi;
  optional_field(ego, "v_ref", "ego", [&](const Json& v, const std::string& p) { c.ego.v_ref = number(v, p); });
  if (!(c.ego.length > 0.0 && c.ego.width > 0.0)) throw ConfigError("ego", "length and width must be > 0");
  if (!(c.ego.v_ref >= 0.0)) throw ConfigError("ego.v_ref", "must be >= 0");

  optional_field(j, "map", "", [&](const Json& m, const std::string& mp) {
    check_keys(m, mp, {"infrastructure", "buildings", "static_objects"});
    optional_field(m, "infrastructure", mp,
                   [&](const Json& v, const std::string& p) { c.map.infrastructure = shape_list(v, p); });
    optional_field(m, "buildings", mp, [&](const Json& v, const std::string& p) { c.map.buildings = shape_list(v, p); });
    optional_field(m, "static_objects", mp,
                   [&](const Json& v, const std::string& p) { c.map.static_objects = shape_list(v, p); });
  });

  optional_field(j, "classes", "", [&](const Json& cl, const std::string& cp) {
    if (!cl.is_array()) throw ConfigError(cp, "expected an array");
    for (std::size_t i = 0; i < cl.size(); ++i) {
      const std::string p = index(cp, i);
      check_keys(cl[i], p, {"name", "v_max", "shape"});
      ClassConfig k;
      k.name = string(required_field(cl[i], "name", p), join(p, "name"));
      k.v_max = number(required_field(cl[i], "v_max", p), join(p, "v_max"));
      if (!(k.v_max >= 0.0)) throw ConfigError(join(p, "v_max"), "must be >= 0");
      const std::string sh = string(required_field(cl[i], "shape", p), join(p, "shape"));
      if (sh == "disk") {
        k.shape = ElementShape::kDisk;
      } else if (sh == "semicircle") {
        k.shape = ElementShape::kSemicircle;
      } else {
        throw ConfigError(join(p, "shape"), "expected disk or semicircle");
      }
      for (const auto& other : c.classes) {
        if (other.name == k.name) throw ConfigError(join(p, "name"), "duplicate class name");
      }
      c.classes.push_back(k);
    }
  });
  const auto known_class = [&](const std::string& name) {
    for (const auto& k : c.classes) {
      if (k.name == name) return true;
    }
    return false;
  };

  optional_field(j, "areas", "", [&](const Json& ar, const std::string& ap) {
    if (!ar.is_array()) throw ConfigError(ap, "expected an array");
    for (std::size_t i = 0; i < ar.size(); ++i) {
      const std::string p = index(ap, i);
      check_keys(ar[i], p, {"class", "lane", "polygon"});
      AreaConfig a;
      a.cls = string(required_field(ar[i], "class", p), join(p, "class"));
      if (!known_class(a.cls)) throw ConfigError(join(p, "class"), "unknown class '" + a.cls + "'");
      if (ar[i].contains("lane") == ar[i].contains("polygon")) {
        throw ConfigError(p, "give exactly one of lane and polygon");
      }
      if (ar[i].contains("lane")) {
        const std::string lp = join(p, "lane");
        const Json& l = ar[i]["lane"];
        check_keys(l, lp, {"centerline", "width", "segment_length"});
        LaneConfig lane;
        lane.centerline = point_list(required_field(l, "centerline", lp), join(lp, "centerline"));
        if (lane.centerline.size() < 2) throw ConfigError(join(lp, "centerline"), "needs at least two points");
        optional_field(l, "width", lp, [&](const Json& v, const std::string& q) { lane.width = number(v, q); });
        optional_field(l, "segment_length", lp,
                       [&](const Json& v, const std::string& q) { lane.segment_length = number(v, q); });
        if (!(lane.width > 0.0)) throw ConfigError(join(lp, "width"), "must be > 0");
        if (!(lane.segment_length > 0.0)) throw ConfigError(join(lp, "segment_length"), "must be > 0");
        a.lane = lane;
      } else {
        try {
          a.polygon = Polygon2(point_list(ar[i]["polygon"], join(p, "polygon")));
        } catch (const StructuralError& e) {
          throw ConfigError(join(p, "polygon"), e.what());
        }
      }
      c.areas.push_back(std::move(a));
    }
  });

  optional_field(j, "agents", "", [&](const Json& ag, const std::string& gp) {
    if (!ag.is_array()) throw ConfigError(gp, "expected an array");
    for (std::size_t i = 0; i < ag.size(); ++i) {
      const std::string p = index(gp, i);
      check_keys(ag[i], p, {"id", "class", "length", "width", "path", "speed", "speed_profile"});
      AgentConfig a;
      a.id = string(required_field(ag[i], "id", p), join(p, "id"));
      a.cls = string(required_field(ag[i], "class", p), join(p, "class"));
      if (!known_class(a.cls)) throw ConfigError(join(p, "class"), "unknown class '" + a.cls + "'");
      optional_field(ag[i], "length", p, [&](const Json& v, const std::string& q) { a.length = number(v, q); });
      optional_field(ag[i], "width", p, [&](const Json& v, const std::string& q) { a.width = number(v, q); });
      if (!(a.length > 0.0 && a.width > 0.0)) throw ConfigError(p, "length and width must be > 0");
      a.path = point_list(required_field(ag[i], "path", p), join(p, "path"));
      if (a.path.empty()) throw ConfigError(join(p, "path"), "needs at least one point");
      if (ag[i].contains("speed") == ag[i].contains("speed_profile")) {
        throw ConfigError(p, "give exactly one of speed and speed_profile");
      }
      if (ag[i].contains("speed")) {
        a.speed.push_back({0.0, number(ag[i]["speed"], join(p, "speed"))});
      } else {
        const std::string sp = join(p, "speed_profile");
        const Json& prof = ag[i]["speed_profile"];
        if (!prof.is_array() || prof.empty()) throw ConfigError(sp, "expected a non-empty array of [t, v]");
        for (std::size_t k = 0; k < prof.size(); ++k) {
          const auto tv = fixed_vector<2>(prof[k], index(sp, k));
          if (!a.speed.empty() && !(tv[0] > a.speed.back().t)) {
            throw ConfigError(index(sp, k), "knot times must increase");
          }
          a.speed.push_back({tv[0], tv[1]});
        }
      }
      for (const auto& k : a.speed) {
        if (!(k.v >= 0.0)) throw ConfigError(p, "speeds must be >= 0");
      }
      for (const auto& other : c.agents) {
        if (other.id == a.id) throw ConfigError(join(p, "id"), "duplicate agent id");
      }
      c.agents.push_back(std::move(a));
    }
  });
  return c;
}

inline ScenarioConfig parse_config_text(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(j);
}

/// `key` is a dotted path into the document (array entries by number);
/// `value` is parsed as JSON and taken as a plain string if that fails.
inline void apply_override(Json& doc, const std::string& key, const std::string& value) {
  if (key.empty()) throw ConfigError("", "empty override key");
  Json parsed;
  try {
    parsed = Json::parse(value);
  } catch (const Json::parse_error&) {
    parsed = value;
  }
  Json* node = &doc;
  std::stringstream ss(key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const std::string& k = parts[i];
    const bool last = i + 1 == parts.size();
    if (node->is_array()) {
      std::size_t pos = 0;
      std::size_t idx = 0;
      try {
        idx = std::stoul(k, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos != k.size() || idx >= node->size()) throw ConfigError(key, "bad array index '" + k + "'");
      node = &(*node)[idx];
    } else {
      if (node->is_null()) *node = Json::object();
      if (!node->is_object()) throw ConfigError(key, "cannot descend into '" + k + "'");
      node = &(*node)[k];
    }
    if (last) *node = parsed;
  }
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("", path + ": malformed JSON: " + e.what());
  }
}

inline ScenarioConfig load_config(const std::string& path,
                                  const std::vector<std::pair<std::string, std::string>>& overrides = {}) {
  Json j = read_json_file(path);
  for (const auto& [k, v] : overrides) apply_override(j, k, v);
  return parse_config(j);
}

/// Canonical JSON with every field explicit; parse_config of the result
/// gives back an equal config.
inline Json serialize(const ScenarioConfig& c) {
  using detail::to_json;
  const auto& p = c.planner;
  const auto& vp = p.vehicle;
  Json j;
  j["name"] = c.name;
  j["duration"] = c.duration;
  j["occlusion_tracking"] = c.occlusion_tracking;
  j["sensor"] = Json{{"radius", c.sensor.radius}, {"angular_resolution_deg", c.sensor.angular_resolution_deg}};
  j["planner"] = Json{{"t_s", vp.t_s},
                      {"N", p.N},
                      {"wheelbase", vp.wheelbase},
                      {"stage_weights", p.stage_weights},
                      {"input_weights", p.input_weights},
                      {"terminal_weights", p.terminal_weights},
                      {"bounds",
                       Json{{"a", to_json(vp.a)}, {"delta", to_json(vp.delta)}, {"v", to_json(vp.v)},
                            {"omega", to_json(vp.omega)}}},
                      {"solver",
                       Json{{"max_iter", p.solver.max_iter},
                            {"stationarity_tol", p.solver.stationarity_tol},
                            {"step_tol", p.solver.step_tol},
                            {"memory", p.solver.memory},
                            {"max_step", p.solver.max_step}}}};
  j["risk"] = Json{{"object", to_json(c.risk.object)},
                   {"infrastructure", to_json(c.risk.infrastructure)},
                   {"hidden", to_json(c.risk.hidden)},
                   {"support", c.risk.support},
                   {"pad", c.risk.pad},
                   {"focus_margin", c.risk.focus_margin}};
  const auto& s = c.ego.start;
  j["ego"] = Json{{"start",
                   Json{{"x", s.x}, {"y", s.y}, {"theta", s.theta}, {"v", s.v},
                        {"delta", s.delta}}},
                  {"length", c.ego.length},
                  {"width", c.ego.width},
                  {"route", to_json(c.ego.route)},
                  {"v_ref", c.ego.v_ref}};
  j["map"] = Json{{"infrastructure", to_json(c.map.infrastructure)},
                  {"buildings", to_json(c.map.buildings)},
                  {"static_objects", to_json(c.map.static_objects)}};
  j["classes"] = Json::array();
  for (const auto& k : c.classes) {
    j["classes"].push_back(
        Json{{"name", k.name}, {"v_max", k.v_max}, {"shape", k.shape == ElementShape::kDisk ? "disk" : "semicircle"}});
  }
  j["areas"] = Json::array();
  for (const auto& a : c.areas) {
    Json e{{"class", a.cls}};
    if (a.lane) {
      e["lane"] = Json{{"centerline", to_json(a.lane->centerline)},
                       {"width", a.lane->width},
                       {"segment_length", a.lane->segment_length}};
    } else {
      e["polygon"] = to_json(a.polygon->outer());
    }
    j["areas"].push_back(e);
  }
  j["agents"] = Json::array();
  for (const auto& a : c.agents) {
    Json prof = Json::array();
    for (const auto& k : a.speed) prof.push_back(Json::array({k.t, k.v}));
    j["agents"].push_back(Json{{"id", a.id},
                               {"class", a.cls},
                               {"length", a.length},
                               {"width", a.width},
                               {"path", to_json(a.path)},
                               {"speed_profile", prof}});
  }
  return j;
}

}  // namespace occrisk
