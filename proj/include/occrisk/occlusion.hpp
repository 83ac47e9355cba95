#pragma once

// Reachable-set tracking of objects that may be hidden behind occluders.
// Each (area, class) pair keeps a grid of cells an unseen object could
// occupy; the grid is grown by a one-step reach element and cut back to the
// currently unobserved space.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "occrisk/errors.hpp"
#include "occrisk/geometry.hpp"
#include "occrisk/grid.hpp"

namespace occrisk {

enum class ElementShape { kDisk, kSemicircle };

/// How an element over-approximates the reach disk.
/// kCellCenter keeps offsets whose cell square meets the disk around the
/// origin cell's center. kCellExtent keeps offsets reachable from any point
/// of the origin cell to any point of the target cell, which is what whole
/// cell reachability needs when objects start off-center.
enum class ReachMode { kCellCenter, kCellExtent };

struct HiddenClassParams {
  int class_id{0};
  std::string name;
  double v_max{1.0};
  ElementShape shape{ElementShape::kDisk};

  friend bool operator==(const HiddenClassParams&, const HiddenClassParams&) = default;
};

/// Piece of a directional area with a single driving heading.
struct AreaSegment {
  Polygon2 region;
  double heading{0.0};
};

/// Region a hidden object of one class is confined to. Directional areas
/// list their segments in driving order and the segments must cover the
/// region; undirected areas leave `segments` empty.
struct AreaDef {
  int id{0};
  int class_id{0};
  Polygon2 region;
  std::vector<AreaSegment> segments;
};

namespace detail {

// Sutherland-Hodgman clip of a convex polygon to {q : dot(q, n) >= eps}.
inline Ring clip_half_plane(const Ring& poly, Point2 n, double eps = 0.0) {
  Ring out;
  const std::size_t m = poly.size();
  for (std::size_t i = 0; i < m; ++i) {
    const Point2 a = poly[i];
    const Point2 b = poly[(i + 1) % m];
    const double da = dot(a, n) - eps;
    const double db = dot(b, n) - eps;
    if (da >= 0.0) out.push_back(a);
    if ((da >= 0.0) != (db >= 0.0)) {
      const double t = da / (da - db);
      out.push_back(a + t * (b - a));
    }
  }
  return out;
}

// Distance from the origin to a convex polygon (0 when it contains it).
inline double convex_origin_distance(const Ring& poly) {
  if (poly.empty()) return std::numeric_limits<double>::infinity();
  if (poly.size() == 1) return norm(poly[0]);
  bool inside = poly.size() >= 3;
  double best = std::numeric_limits<double>::infinity();
  int sign = 0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point2 a = poly[i];
    const Point2 b = poly[(i + 1) % poly.size()];
    best = std::min(best, point_segment_distance({0.0, 0.0}, a, b));
    const double c = cross(b - a, Point2{0.0, 0.0} - a);
    const int s = c > 0.0 ? 1 : (c < 0.0 ? -1 : 0);
    if (s != 0) {
      if (sign == 0) sign = s;
      if (s != sign) inside = false;
    }
  }
  return inside ? 0.0 : best;
}

}  // namespace detail

/// Offsets covering one step of motion at v_max over t_s, in cells of `spec`.
/// A heading turns the disk into the half-disk facing that way; moves exactly
/// sideways to the heading are left to the stationary offset, so an element
/// never reaches backwards.
inline StructuringElement build_structuring_element(const HiddenClassParams& p, double t_s, const GridSpec& spec,
                                                    std::optional<double> heading = std::nullopt,
                                                    ReachMode mode = ReachMode::kCellCenter) {
  if (!(t_s > 0.0)) throw ContractViolation("build_structuring_element: t_s must be > 0");
  if (!(p.v_max > 0.0)) throw ContractViolation("build_structuring_element: v_max must be > 0");
  const double radius = p.v_max * t_s / spec.resolution;
  const double half = mode == ReachMode::kCellCenter ? 0.5 : 1.0;
  const int reach = static_cast<int>(std::ceil(radius + half));
  const std::optional<Point2> dir = heading ? std::optional<Point2>(unit_vector(*heading)) : std::nullopt;
  std::vector<Cell> offsets{{0, 0}};
  for (int v = -reach; v <= reach; ++v) {
    for (int u = -reach; u <= reach; ++u) {
      Ring sq{{u - half, v - half}, {u + half, v - half}, {u + half, v + half}, {u - half, v + half}};
      if (dir) sq = detail::clip_half_plane(sq, *dir, 1e-9);
      if (detail::convex_origin_distance(sq) <= radius + 1e-12) offsets.push_back({u, v});
    }
  }
  return StructuringElement(std::move(offsets));
}

/// Cells whose closed square lies inside the observed free space. Only cells
/// set in `mask` are tested; everything else is reported as not free.
inline OccupancyGrid free_cells(const VisibilityRegion& fs, const OccupancyGrid& mask) {
  const GridSpec& spec = mask.spec();
  OccupancyGrid out(spec);
  const double h = 0.5 * spec.resolution;
  for (int j = 0; j < spec.ny; ++j) {
    const auto* m = mask.row(j);
    for (int i = 0; i < spec.nx; ++i) {
      if (!m[i]) continue;
      const Point2 c = spec.center(i, j);
      if (fs.contains_box({c.x - h, c.y - h}, {c.x + h, c.y + h})) out.set(i, j);
    }
  }
  return out;
}

/// Hidden-set state of one (area, class) pair. `predictions[n - 1]` holds the
/// set n steps ahead.
struct AreaHiddenState {
  OccupancyGrid current;
  std::vector<OccupancyGrid> predictions;
};

class HiddenSetTracker {
 public:
  /// `lattice` fixes resolution and origin; each area gets its own window on
  /// that lattice around its bounding box.
  HiddenSetTracker(const GridSpec& lattice, std::vector<AreaDef> areas, std::vector<HiddenClassParams> classes,
                   double t_s, ReachMode mode = ReachMode::kCellExtent)
      : lattice_(lattice), classes_(std::move(classes)) {
    lattice_.validate();
    for (auto& a : areas) {
      const HiddenClassParams* cls = find_class(a.class_id);
      if (!cls) throw ContractViolation("HiddenSetTracker: area " + std::to_string(a.id) + " has unknown class");
      Track t;
      t.def = std::move(a);
      Box2 extent = t.def.region.bbox();
      for (const auto& seg : t.def.segments) {
        extent.extend(seg.region.bbox().min);
        extent.extend(seg.region.bbox().max);
      }
      t.spec = covering_window(lattice_, extent);
      t.mask = rasterize(t.def.region, t.spec);
      if (t.def.segments.empty()) {
        t.element = build_structuring_element(*cls, t_s, lattice_, std::nullopt, mode);
      } else {
        for (const auto& seg : t.def.segments) {
          OccupancyGrid sm = rasterize(seg.region, t.spec);
          t.mask = unite(t.mask, sm);
          t.seg_masks.push_back(std::move(sm));
          t.seg_elements.push_back(build_structuring_element(*cls, t_s, lattice_, seg.heading, mode));
        }
        for (std::size_t s = 1; s < t.seg_elements.size(); ++s) {
          t.seg_bridge.push_back(t.seg_elements[s].merged(t.seg_elements[s - 1]));
        }
      }
      tracks_.push_back(std::move(t));
    }
    for (const auto& t : tracks_) {
      const Point2 lo = t.spec.center(0, 0);
      const Point2 hi = t.spec.center(t.spec.nx - 1, t.spec.ny - 1);
      auto [it, fresh] = class_windows_.try_emplace(t.def.class_id, Box2{lo, hi});
      if (!fresh) {
        it->second.extend(lo);
        it->second.extend(hi);
      }
    }
  }

  bool initialized() const { return initialized_; }
  std::size_t area_count() const { return tracks_.size(); }
  const AreaDef& area(std::size_t i) const { return tracks_[i].def; }
  const AreaHiddenState& state(std::size_t i) const { return tracks_[i].state; }
  const OccupancyGrid& area_mask(std::size_t i) const { return tracks_[i].mask; }
  const std::vector<HiddenClassParams>& classes() const { return classes_; }
  const GridSpec& lattice() const { return lattice_; }

  /// First call initializes from the unobserved part of each area, later
  /// calls propagate the previous set and cut it back to unobserved space.
  void observe(const VisibilityRegion& fs) {
    for (auto& t : tracks_) {
      const OccupancyGrid unobserved = complement(free_cells(fs, t.mask));
      OccupancyGrid base = initialized_ ? propagate(t, t.state.current) : t.mask;
      t.state.current = intersect(base, unobserved);
      t.state.predictions.clear();
    }
    initialized_ = true;
  }

  /// Free-space-less propagation for n = 1..steps.
  void predict(int steps) {
    if (steps < 1) throw ContractViolation("predict: steps must be >= 1");
    if (!initialized_) throw ContractViolation("predict: tracker has no observation yet");
    for (auto& t : tracks_) {
      t.state.predictions.clear();
      const OccupancyGrid* prev = &t.state.current;
      for (int n = 1; n <= steps; ++n) {
        t.state.predictions.push_back(propagate(t, *prev));
        prev = &t.state.predictions.back();
      }
    }
  }

  /// Per-class union over areas for n = 0..N (index 0 is the current set).
  /// Grids share a class-wide window covering every area of that class.
  std::vector<OccupancyGrid> merged(int class_id) const {
    auto it = class_windows_.find(class_id);
    if (it == class_windows_.end()) return {};
    return merged(class_id, covering_window(lattice_, it->second));
  }

  /// Same union restricted to `window` (a window on the tracker lattice).
  std::vector<OccupancyGrid> merged(int class_id, const GridSpec& window) const {
    if (window.resolution != lattice_.resolution) throw ContractViolation("merged: window is not on the lattice");
    std::size_t depth = std::numeric_limits<std::size_t>::max();
    for (const auto& t : tracks_) {
      if (t.def.class_id == class_id) depth = std::min(depth, t.state.predictions.size());
    }
    if (depth == std::numeric_limits<std::size_t>::max()) return {};
    std::vector<OccupancyGrid> out(depth + 1, OccupancyGrid(window));
    for (const auto& t : tracks_) {
      if (t.def.class_id != class_id) continue;
      for (std::size_t n = 0; n <= depth; ++n) {
        const OccupancyGrid& g = n == 0 ? t.state.current : t.state.predictions[n - 1];
        out[n] = unite(out[n], resample_window(g, window));
      }
    }
    return out;
  }

  /// Class mask G(A) over all areas of a class, on the merged window.
  OccupancyGrid class_mask(int class_id) const {
    auto it = class_windows_.find(class_id);
    if (it == class_windows_.end()) throw ContractViolation("class_mask: unknown class");
    const GridSpec window = covering_window(lattice_, it->second);
    OccupancyGrid out(window);
    for (const auto& t : tracks_) {
      if (t.def.class_id == class_id) out = unite(out, resample_window(t.mask, window));
    }
    return out;
  }

  std::size_t hidden_cell_count(int class_id) const {
    std::size_t n = 0;
    for (const auto& m : merged_current(class_id)) n += m.count();
    return n;
  }

 private:
  struct Track {
    AreaDef def;
    GridSpec spec;
    OccupancyGrid mask;
    StructuringElement element;
    std::vector<OccupancyGrid> seg_masks;
    std::vector<StructuringElement> seg_elements;
    std::vector<StructuringElement> seg_bridge;  // [s - 1] joins segments s - 1 and s
    AreaHiddenState state;
  };

  const HiddenClassParams* find_class(int id) const {
    for (const auto& c : classes_) {
      if (c.class_id == id) return &c;
    }
    return nullptr;
  }

  std::vector<OccupancyGrid> merged_current(int class_id) const {
    std::vector<OccupancyGrid> out;
    for (const auto& t : tracks_) {
      if (t.def.class_id == class_id) out.push_back(t.state.current);
    }
    return out;
  }

  // One step of reach, confined to the area. Directional areas move mass
  // only forward: within a segment along its heading, and from the previous
  // segment into this one along either heading.
  static OccupancyGrid propagate(const Track& t, const OccupancyGrid& h) {
    if (t.seg_masks.empty()) return intersect(dilate(h, t.element), t.mask);
    OccupancyGrid out(t.spec);
    for (std::size_t s = 0; s < t.seg_masks.size(); ++s) {
      OccupancyGrid seg = dilate(intersect(h, t.seg_masks[s]), t.seg_elements[s]);
      if (s > 0) seg = unite(seg, dilate(intersect(h, t.seg_masks[s - 1]), t.seg_bridge[s - 1]));
      out = unite(out, intersect(seg, t.seg_masks[s]));
    }
    return intersect(out, t.mask);
  }

  GridSpec lattice_;
  std::vector<HiddenClassParams> classes_;
  std::vector<Track> tracks_;
  std::map<int, Box2> class_windows_;
  bool initialized_{false};
};

}  // namespace occrisk
