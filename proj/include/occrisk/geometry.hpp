#pragma once

// Planar primitives, point-in-polygon, and the angular-sweep visibility model
// used as the free-space sensor.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "occrisk/errors.hpp"

namespace occrisk {

struct Point2 {
  double x{0.0};
  double y{0.0};

  friend constexpr Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
  friend constexpr Point2 operator*(Point2 a, double s) { return {s * a.x, s * a.y}; }
  friend constexpr bool operator==(Point2, Point2) = default;
};

constexpr double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 a) { return std::hypot(a.x, a.y); }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }
inline bool is_finite(Point2 p) { return std::isfinite(p.x) && std::isfinite(p.y); }
inline Point2 unit_vector(double heading) { return {std::cos(heading), std::sin(heading)}; }

/// Rotates `p` by `heading` and then translates by `offset`.
inline Point2 to_world(Point2 p, Point2 offset, double heading) {
  const double c = std::cos(heading);
  const double s = std::sin(heading);
  return {offset.x + c * p.x - s * p.y, offset.y + s * p.x + c * p.y};
}

struct Box2 {
  Point2 min{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  Point2 max{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};

  void extend(Point2 p) {
    min = {std::min(min.x, p.x), std::min(min.y, p.y)};
    max = {std::max(max.x, p.x), std::max(max.y, p.y)};
  }
  bool empty() const { return min.x > max.x || min.y > max.y; }
  bool intersects(const Box2& o) const {
    return !(o.min.x > max.x || o.max.x < min.x || o.min.y > max.y || o.max.y < min.y);
  }
};

using Ring = std::vector<Point2>;

namespace detail {

inline double signed_area(std::span<const Point2> ring) {
  double acc = 0.0;
  for (std::size_t i = 0, n = ring.size(); i < n; ++i) acc += cross(ring[i], ring[(i + 1) % n]);
  return 0.5 * acc;
}

// Relative tolerance for orientation tests against the segment length scale.
inline double orient_eps(Point2 a, Point2 b) { return 1e-12 * std::max(1.0, dot(b - a, b - a)); }

inline bool on_segment(Point2 p, Point2 a, Point2 b) {
  const Point2 ab = b - a;
  const Point2 ap = p - a;
  if (std::abs(cross(ab, ap)) > orient_eps(a, b)) return false;
  const double t = dot(ap, ab);
  return t >= -1e-12 && t <= dot(ab, ab) + 1e-12;
}

inline int orientation(Point2 a, Point2 b, Point2 c) {
  const double v = cross(b - a, c - a);
  const double eps = orient_eps(a, b);
  return v > eps ? 1 : (v < -eps ? -1 : 0);
}

/// Closed segment intersection test (touching counts).
inline bool segments_intersect(Point2 p1, Point2 p2, Point2 q1, Point2 q2) {
  const int o1 = orientation(p1, p2, q1);
  const int o2 = orientation(p1, p2, q2);
  const int o3 = orientation(q1, q2, p1);
  const int o4 = orientation(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(q1, p1, p2)) return true;
  if (o2 == 0 && on_segment(q2, p1, p2)) return true;
  if (o3 == 0 && on_segment(p1, q1, q2)) return true;
  if (o4 == 0 && on_segment(p2, q1, q2)) return true;
  return false;
}

/// Proper crossing: the segments intersect at a single point interior to both.
inline bool segments_cross(Point2 p1, Point2 p2, Point2 q1, Point2 q2) {
  const int o1 = orientation(p1, p2, q1);
  const int o2 = orientation(p1, p2, q2);
  const int o3 = orientation(q1, q2, p1);
  const int o4 = orientation(q1, q2, p2);
  return o1 * o2 < 0 && o3 * o4 < 0;
}

inline double point_segment_distance(Point2 p, Point2 a, Point2 b) {
  const Point2 ab = b - a;
  const double len2 = dot(ab, ab);
  double t = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return distance(p, a + t * ab);
}

inline double segment_distance(Point2 p1, Point2 p2, Point2 q1, Point2 q2) {
  if (segments_intersect(p1, p2, q1, q2)) return 0.0;
  return std::min({point_segment_distance(p1, q1, q2), point_segment_distance(p2, q1, q2),
                   point_segment_distance(q1, p1, p2), point_segment_distance(q2, p1, p2)});
}

enum class RingSide { kOutside, kBoundary, kInside };

inline RingSide classify_in_ring(Point2 p, std::span<const Point2> ring) {
  bool inside = false;
  for (std::size_t i = 0, n = ring.size(), j = n - 1; i < n; j = i++) {
    const Point2 a = ring[j];
    const Point2 b = ring[i];
    if (on_segment(p, a, b)) return RingSide::kBoundary;
    if ((b.y > p.y) != (a.y > p.y)) {
      const double x_cross = b.x + (p.y - b.y) * (a.x - b.x) / (a.y - b.y);
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside ? RingSide::kInside : RingSide::kOutside;
}

inline bool ring_self_intersects(std::span<const Point2> ring) {
  const std::size_t n = ring.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 a1 = ring[i];
    const Point2 a2 = ring[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      const Point2 b1 = ring[j];
      const Point2 b2 = ring[(j + 1) % n];
      if (adjacent) {
        // Adjacent edges may only share their common vertex; a collinear
        // fold-back would overlap.
        const Point2 shared = (j == i + 1) ? a2 : a1;
        const Point2 other_a = (j == i + 1) ? a1 : a2;
        const Point2 other_b = (j == i + 1) ? b2 : b1;
        if (orientation(other_a, shared, other_b) == 0 &&
            dot(other_a - shared, other_b - shared) > 0.0) {
          return true;
        }
        continue;
      }
      if (segments_intersect(a1, a2, b1, b2)) return true;
    }
  }
  return false;
}

}  // namespace detail

/// Simple polygon with optional holes. The outer ring is stored
/// counter-clockwise and holes clockwise.
class Polygon2 {
 public:
  Polygon2() = default;

  /// Builds and validates a polygon, re-orienting rings as needed.
  explicit Polygon2(Ring outer, std::vector<Ring> holes = {}) : outer_(std::move(outer)), holes_(std::move(holes)) {
    validate();
    finish();
  }

  /// Skips the quadratic self-intersection check; for rings produced by
  /// construction (sweeps, rigid transforms of validated polygons).
  static Polygon2 trusted(Ring outer) {
    if (outer.size() < 3) throw StructuralError("polygon needs at least 3 vertices");
    Polygon2 p;
    p.outer_ = std::move(outer);
    p.finish();
    return p;
  }

  const Ring& outer() const { return outer_; }
  const std::vector<Ring>& holes() const { return holes_; }
  const Box2& bbox() const { return bbox_; }

  std::vector<std::span<const Point2>> rings() const {
    std::vector<std::span<const Point2>> out;
    out.emplace_back(outer_);
    for (const auto& h : holes_) out.emplace_back(h);
    return out;
  }

  double area() const {
    double a = detail::signed_area(outer_);
    for (const auto& h : holes_) a += detail::signed_area(h);
    return a;
  }

  Point2 centroid() const {
    // Area-weighted centroid of the outer ring; holes are not subtracted.
    double a = 0.0;
    Point2 c{};
    for (std::size_t i = 0, n = outer_.size(); i < n; ++i) {
      const Point2 p = outer_[i];
      const Point2 q = outer_[(i + 1) % n];
      const double w = cross(p, q);
      a += w;
      c = c + w * (p + q);
    }
    return (1.0 / (3.0 * a)) * c;
  }

  Polygon2 translated(Point2 d) const {
    Polygon2 out = *this;
    for (auto& p : out.outer_) p = p + d;
    for (auto& h : out.holes_) {
      for (auto& p : h) p = p + d;
    }
    out.finish();
    return out;
  }

  friend bool operator==(const Polygon2& a, const Polygon2& b) {
    return a.outer_ == b.outer_ && a.holes_ == b.holes_;
  }

 private:
  void finish() {
    if (detail::signed_area(outer_) < 0.0) std::reverse(outer_.begin(), outer_.end());
    for (auto& h : holes_) {
      if (detail::signed_area(h) > 0.0) std::reverse(h.begin(), h.end());
    }
    bbox_ = Box2{};
    for (const auto& ring : rings()) {
      for (const Point2 p : ring) bbox_.extend(p);
    }
  }

  void validate() const {
    if (outer_.size() < 3) throw StructuralError("polygon needs at least 3 vertices");
    for (const auto& p : outer_) {
      if (!is_finite(p)) throw StructuralError("polygon vertex is not finite");
    }
    if (detail::ring_self_intersects(outer_)) throw StructuralError("polygon outer ring self-intersects");
    if (std::abs(detail::signed_area(outer_)) <= 0.0) throw StructuralError("polygon has zero area");
    for (const auto& h : holes_) {
      if (h.size() < 3) throw StructuralError("polygon hole needs at least 3 vertices");
      if (detail::ring_self_intersects(h)) throw StructuralError("polygon hole self-intersects");
      for (const Point2 p : h) {
        if (!is_finite(p)) throw StructuralError("polygon hole vertex is not finite");
        if (detail::classify_in_ring(p, outer_) != detail::RingSide::kInside) {
          throw StructuralError("polygon hole is not strictly inside the outer ring");
        }
      }
    }
  }

  Ring outer_;
  std::vector<Ring> holes_;
  Box2 bbox_;
};

/// Closed-set membership: boundary points (outer ring or hole rings) count as inside.
inline bool point_in_polygon(Point2 p, const Polygon2& poly) {
  if (!is_finite(p)) throw ContractViolation("point_in_polygon: non-finite query point");
  if (poly.outer().size() < 3) throw StructuralError("point_in_polygon: invalid polygon");
  const auto& bb = poly.bbox();
  if (p.x < bb.min.x - 1e-12 || p.x > bb.max.x + 1e-12 || p.y < bb.min.y - 1e-12 || p.y > bb.max.y + 1e-12) {
    return false;
  }
  const auto outer = detail::classify_in_ring(p, poly.outer());
  if (outer == detail::RingSide::kOutside) return false;
  if (outer == detail::RingSide::kBoundary) return true;
  for (const auto& h : poly.holes()) {
    const auto side = detail::classify_in_ring(p, h);
    if (side == detail::RingSide::kInside) return false;
  }
  return true;
}

/// Open-set membership: true only for points in the interior.
inline bool point_strictly_inside(Point2 p, const Polygon2& poly) {
  if (detail::classify_in_ring(p, poly.outer()) != detail::RingSide::kInside) return false;
  for (const auto& h : poly.holes()) {
    if (detail::classify_in_ring(p, h) != detail::RingSide::kOutside) return false;
  }
  return true;
}

/// Oriented rectangle centered at `center`.
inline Polygon2 make_rectangle(Point2 center, double length, double width, double heading = 0.0) {
  const double hl = 0.5 * length;
  const double hw = 0.5 * width;
  Ring r{{-hl, -hw}, {hl, -hw}, {hl, hw}, {-hl, hw}};
  for (auto& p : r) p = to_world(p, center, heading);
  return Polygon2(std::move(r));
}

/// Rigid transform of a body-frame polygon (outer ring only).
inline Polygon2 place(const Polygon2& body, Point2 position, double heading) {
  Ring r;
  r.reserve(body.outer().size());
  for (const Point2 p : body.outer()) r.push_back(to_world(p, position, heading));
  return Polygon2::trusted(std::move(r));
}

/// Polygon covering a polyline swept by a band of the given width
/// (mitred joins). The polyline must not fold back on itself.
inline Polygon2 thick_polyline(std::span<const Point2> line, double width) {
  if (line.size() < 2) throw StructuralError("thick_polyline needs at least 2 points");
  const double hw = 0.5 * width;
  const std::size_t n = line.size();
  std::vector<Point2> normals(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const Point2 d = line[i + 1] - line[i];
    const double len = norm(d);
    if (len <= 0.0) throw StructuralError("thick_polyline has repeated points");
    normals[i] = {-d.y / len, d.x / len};
  }
  Ring left;
  Ring right;
  for (std::size_t i = 0; i < n; ++i) {
    Point2 nrm;
    double scale = 1.0;
    if (i == 0) {
      nrm = normals.front();
    } else if (i == n - 1) {
      nrm = normals.back();
    } else {
      const Point2 sum = normals[i - 1] + normals[i];
      const double len = norm(sum);
      nrm = len > 1e-12 ? (1.0 / len) * sum : normals[i];
      const double c = dot(nrm, normals[i]);
      scale = c > 0.2 ? 1.0 / c : 5.0;
    }
    left.push_back(line[i] + (hw * scale) * nrm);
    right.push_back(line[i] - (hw * scale) * nrm);
  }
  Ring ring = std::move(right);
  ring.insert(ring.end(), left.rbegin(), left.rend());
  return Polygon2(std::move(ring));
}

/// Minimum distance between two polygons' boundaries; 0 when they touch or overlap.
inline double polygon_distance(const Polygon2& a, const Polygon2& b) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& ra : a.rings()) {
    for (std::size_t i = 0; i < ra.size(); ++i) {
      const Point2 p1 = ra[i];
      const Point2 p2 = ra[(i + 1) % ra.size()];
      for (const auto& rb : b.rings()) {
        for (std::size_t j = 0; j < rb.size(); ++j) {
          best = std::min(best, detail::segment_distance(p1, p2, rb[j], rb[(j + 1) % rb.size()]));
          if (best == 0.0) return 0.0;
        }
      }
    }
  }
  // One polygon strictly inside the other.
  if (point_in_polygon(a.outer().front(), b) || point_in_polygon(b.outer().front(), a)) return 0.0;
  return best;
}

/// Positive-area intersection test.
inline bool polygons_overlap(const Polygon2& a, const Polygon2& b) {
  if (!a.bbox().intersects(b.bbox())) return false;
  for (const auto& ra : a.rings()) {
    for (std::size_t i = 0; i < ra.size(); ++i) {
      for (const auto& rb : b.rings()) {
        for (std::size_t j = 0; j < rb.size(); ++j) {
          if (detail::segments_cross(ra[i], ra[(i + 1) % ra.size()], rb[j], rb[(j + 1) % rb.size()])) return true;
        }
      }
    }
  }
  for (const Point2 p : a.outer()) {
    if (point_strictly_inside(p, b)) return true;
  }
  for (const Point2 p : b.outer()) {
    if (point_strictly_inside(p, a)) return true;
  }
  // Only touching contacts are left: split each edge where it meets the
  // other boundary and probe the pieces.
  const auto pieces_inside = [](const Polygon2& p, const Polygon2& q) {
    for (const auto& rp : p.rings()) {
      for (std::size_t i = 0; i < rp.size(); ++i) {
        const Point2 s0 = rp[i];
        const Point2 s1 = rp[(i + 1) % rp.size()];
        const Point2 d = s1 - s0;
        const double len2 = dot(d, d);
        std::vector<double> ts{0.0, 1.0};
        for (const auto& rq : q.rings()) {
          for (const Point2 v : rq) {
            if (detail::on_segment(v, s0, s1)) ts.push_back(dot(v - s0, d) / len2);
          }
        }
        std::sort(ts.begin(), ts.end());
        for (std::size_t k = 0; k + 1 < ts.size(); ++k) {
          if (ts[k + 1] - ts[k] < 1e-12) continue;
          if (point_strictly_inside(s0 + 0.5 * (ts[k] + ts[k + 1]) * d, q)) return true;
        }
      }
    }
    return false;
  };
  if (pieces_inside(a, b) || pieces_inside(b, a)) return true;
  return point_strictly_inside(a.centroid(), b) || point_strictly_inside(b.centroid(), a);
}

/// True when the segment `from`→`to` stays clear of every occluder interior.
/// Grazing edges or vertices does not block.
inline bool line_of_sight(Point2 from, Point2 to, std::span<const Polygon2> occluders) {
  Box2 seg_box;
  seg_box.extend(from);
  seg_box.extend(to);
  const Point2 d = to - from;
  std::vector<double> ts;
  for (const auto& occ : occluders) {
    if (!occ.bbox().intersects(seg_box)) continue;
    ts.assign({0.0, 1.0});
    for (const auto& ring : occ.rings()) {
      for (std::size_t i = 0; i < ring.size(); ++i) {
        const Point2 a = ring[i];
        const Point2 b = ring[(i + 1) % ring.size()];
        const Point2 e = b - a;
        const double den = cross(d, e);
        if (std::abs(den) < 1e-15) {
          // Parallel edge: its endpoints may split the segment.
          for (const Point2 q : {a, b}) {
            if (detail::on_segment(q, from, to) && dot(d, d) > 0.0) ts.push_back(dot(q - from, d) / dot(d, d));
          }
          continue;
        }
        const double t = cross(a - from, e) / den;
        const double s = cross(a - from, d) / den;
        if (t >= 0.0 && t <= 1.0 && s >= -1e-12 && s <= 1.0 + 1e-12) ts.push_back(t);
      }
    }
    std::sort(ts.begin(), ts.end());
    for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
      if (ts[i + 1] - ts[i] < 1e-12) continue;
      const Point2 mid = from + (0.5 * (ts[i] + ts[i + 1])) * d;
      if (point_strictly_inside(mid, occ)) return false;
    }
  }
  return true;
}

/// Star-shaped free-space region around a sensor origin. The region is the
/// union of circular sectors of fixed angular width, each truncated at the
/// nearest occluder edge within the sector, which under-approximates the
/// true free space. `boundary` is the inscribed polygon through the sector
/// endpoints.
struct VisibilityRegion {
  Point2 origin;
  double radius{0.0};
  double sector_width{0.0};
  std::vector<double> sector_radius;
  Polygon2 boundary;

  std::size_t sector_of(double angle) const {
    double a = std::fmod(angle, 2.0 * std::numbers::pi);
    if (a < 0.0) a += 2.0 * std::numbers::pi;
    auto j = static_cast<std::size_t>(a / sector_width);
    return std::min(j, sector_radius.size() - 1);
  }

  /// Closed membership in the union of sectors.
  bool contains(Point2 q) const {
    const Point2 d = q - origin;
    const double r = norm(d);
    if (r == 0.0) return true;
    if (r > radius) return false;
    const double ang = std::atan2(d.y, d.x);
    const std::size_t j = sector_of(ang);
    double allowed = sector_radius[j];
    // Points on a sector edge may use the larger neighbour.
    double a = std::fmod(ang, 2.0 * std::numbers::pi);
    if (a < 0.0) a += 2.0 * std::numbers::pi;
    const double rel = a / sector_width - static_cast<double>(j);
    const std::size_t m = sector_radius.size();
    if (rel < 1e-9) allowed = std::max(allowed, sector_radius[(j + m - 1) % m]);
    if (rel > 1.0 - 1e-9) allowed = std::max(allowed, sector_radius[(j + 1) % m]);
    return r <= allowed;
  }

  /// Conservative test that the closed box [lo, hi] lies inside the region.
  bool contains_box(Point2 lo, Point2 hi) const {
    const Point2 corners[4] = {lo, {hi.x, lo.y}, hi, {lo.x, hi.y}};
    double far = 0.0;
    for (const Point2 c : corners) far = std::max(far, distance(c, origin));
    if (far > radius) return false;
    if (origin.x >= lo.x && origin.x <= hi.x && origin.y >= lo.y && origin.y <= hi.y) {
      return far <= *std::min_element(sector_radius.begin(), sector_radius.end());
    }
    // Angular span of the box as seen from the origin (< pi since the
    // origin is outside the box).
    double base = std::atan2(corners[0].y - origin.y, corners[0].x - origin.x);
    double lo_rel = 0.0;
    double hi_rel = 0.0;
    for (int i = 1; i < 4; ++i) {
      double rel = std::atan2(corners[i].y - origin.y, corners[i].x - origin.x) - base;
      while (rel > std::numbers::pi) rel -= 2.0 * std::numbers::pi;
      while (rel < -std::numbers::pi) rel += 2.0 * std::numbers::pi;
      lo_rel = std::min(lo_rel, rel);
      hi_rel = std::max(hi_rel, rel);
    }
    double start = base + lo_rel;
    if (start < 0.0) start += 2.0 * std::numbers::pi;
    const std::size_t m = sector_radius.size();
    const std::size_t j0 = sector_of(start);
    const auto count = static_cast<std::size_t>(std::floor((start + (hi_rel - lo_rel)) / sector_width)) -
                       static_cast<std::size_t>(std::floor(start / sector_width)) + 1;
    for (std::size_t k = 0; k < std::min(count, m); ++k) {
      if (far > sector_radius[(j0 + k) % m]) return false;
    }
    return true;
  }
};

namespace detail {

// Distance from the origin to the part of segment [a, b] inside the wedge
// between unit directions ea and eb (counter-clockwise, opening < pi).
inline double wedge_segment_distance(Point2 a, Point2 b, Point2 ea, Point2 eb) {
  double t0 = 0.0;
  double t1 = 1.0;
  const Point2 d = b - a;
  // cross(ea, p) >= 0 and cross(p, eb) >= 0, each linear in t.
  const auto clip = [&](double c0, double c1) {
    // c0 + t * c1 >= 0
    if (std::abs(c1) < 1e-18) return c0 >= 0.0;
    const double t = -c0 / c1;
    if (c1 > 0.0) {
      t0 = std::max(t0, t);
    } else {
      t1 = std::min(t1, t);
    }
    return t0 <= t1;
  };
  if (!clip(cross(ea, a), cross(ea, d))) return std::numeric_limits<double>::infinity();
  if (!clip(cross(a, eb), cross(d, eb))) return std::numeric_limits<double>::infinity();
  const double len2 = dot(d, d);
  double t = len2 > 0.0 ? -dot(a, d) / len2 : t0;
  t = std::clamp(t, t0, t1);
  return norm(a + t * d);
}

}  // namespace detail

/// Free space seen from `origin` out to `radius`, blocked by `occluders`.
/// `angular_resolution` is the sector width in radians.
inline VisibilityRegion visibility_region(Point2 origin, double radius, std::span<const Polygon2> occluders,
                                          double angular_resolution = 0.5 * std::numbers::pi / 180.0) {
  if (!(radius > 0.0) || !std::isfinite(radius)) throw ContractViolation("visibility_region: radius must be > 0");
  if (!is_finite(origin)) throw ContractViolation("visibility_region: non-finite origin");
  if (!(angular_resolution > 0.0)) throw ContractViolation("visibility_region: angular resolution must be > 0");
  for (const auto& occ : occluders) {
    if (point_strictly_inside(origin, occ)) throw DegenerateObserver("visibility_region: origin inside an occluder");
  }
  const auto sectors = static_cast<std::size_t>(std::ceil(2.0 * std::numbers::pi / angular_resolution));
  VisibilityRegion out;
  out.origin = origin;
  out.radius = radius;
  out.sector_width = 2.0 * std::numbers::pi / static_cast<double>(sectors);
  out.sector_radius.assign(sectors, radius);

  Box2 reach;
  reach.extend({origin.x - radius, origin.y - radius});
  reach.extend({origin.x + radius, origin.y + radius});
  for (const auto& occ : occluders) {
    if (!occ.bbox().intersects(reach)) continue;
    for (const auto& ring : occ.rings()) {
      for (std::size_t i = 0; i < ring.size(); ++i) {
        const Point2 a = ring[i] - origin;
        const Point2 b = ring[(i + 1) % ring.size()] - origin;
        const double edge_dist = detail::point_segment_distance({0.0, 0.0}, a, b);
        if (edge_dist >= radius) continue;
        // Only sectors within the edge's angular span can see it.
        double aa = std::atan2(a.y, a.x);
        double span = std::atan2(b.y, b.x) - aa;
        while (span > std::numbers::pi) span -= 2.0 * std::numbers::pi;
        while (span < -std::numbers::pi) span += 2.0 * std::numbers::pi;
        double start = span >= 0.0 ? aa : aa + span;
        if (start < 0.0) start += 2.0 * std::numbers::pi;
        const std::size_t j0 = out.sector_of(start);
        auto count = static_cast<std::size_t>(std::abs(span) / out.sector_width) + 2;
        if (edge_dist < 1e-9) count = sectors;  // origin on the edge: span is ambiguous
        for (std::size_t k = 0; k < std::min(count, sectors); ++k) {
          const std::size_t j = (j0 + k) % sectors;
          const double th0 = out.sector_width * static_cast<double>(j);
          const double th1 = th0 + out.sector_width;
          const double dist = detail::wedge_segment_distance(a, b, unit_vector(th0), unit_vector(th1));
          out.sector_radius[j] = std::min(out.sector_radius[j], dist);
        }
      }
    }
  }

  Ring ring;
  ring.reserve(2 * sectors);
  const auto push = [&ring](Point2 p) {
    if (ring.empty() || distance(ring.back(), p) > 1e-12) ring.push_back(p);
  };
  for (std::size_t j = 0; j < sectors; ++j) {
    const double r = std::max(out.sector_radius[j], 1e-9);
    const double th0 = out.sector_width * static_cast<double>(j);
    push(origin + r * unit_vector(th0));
    push(origin + r * unit_vector(th0 + out.sector_width));
  }
  if (ring.size() > 1 && distance(ring.front(), ring.back()) <= 1e-12) ring.pop_back();
  out.boundary = Polygon2::trusted(std::move(ring));
  return out;
}

}  // namespace occrisk
