#pragma once

// Occupancy grids over a fixed world lattice: cell mapping, closed-set
// rasterization, Boolean algebra and dilation by structuring elements.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <ostream>
#include <string>
#include <vector>

#include "occrisk/errors.hpp"
#include "occrisk/geometry.hpp"

namespace occrisk {

struct Cell {
  int x{0};
  int y{0};
  friend constexpr auto operator<=>(Cell, Cell) = default;
};

/// Lattice description. Cell (i, j) is centered at origin + r * (i, j) and
/// covers the closed square of side r around that center. The window holds
/// cells 0 <= i < nx, 0 <= j < ny.
struct GridSpec {
  double resolution{0.2};
  Point2 origin{};
  int nx{1};
  int ny{1};

  void validate() const {
    if (!(resolution > 0.0) || !std::isfinite(resolution)) throw ContractViolation("GridSpec: resolution must be > 0");
    if (nx < 1 || ny < 1) throw ContractViolation("GridSpec: nx and ny must be >= 1");
    if (!is_finite(origin)) throw ContractViolation("GridSpec: non-finite origin");
  }

  Point2 center(int i, int j) const { return {origin.x + resolution * i, origin.y + resolution * j}; }
  bool in_window(int i, int j) const { return i >= 0 && j >= 0 && i < nx && j < ny; }
  std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }

  /// Sub-window on the same lattice starting at cell (i0, j0) of this one.
  GridSpec window(int i0, int j0, int wx, int wy) const { return {resolution, center(i0, j0), wx, wy}; }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Round-to-nearest cell index; out-of-window indices are returned as-is.
inline Cell world_to_cell(Point2 p, const GridSpec& spec) {
  if (!is_finite(p)) throw ContractViolation("world_to_cell: non-finite point");
  return {static_cast<int>(std::floor((p.x - spec.origin.x) / spec.resolution + 0.5)),
          static_cast<int>(std::floor((p.y - spec.origin.y) / spec.resolution + 0.5))};
}

/// Smallest window on `lattice`'s grid lines whose cells cover `box`.
inline GridSpec covering_window(const GridSpec& lattice, const Box2& box, int margin_cells = 0) {
  const double r = lattice.resolution;
  const int i0 = static_cast<int>(std::ceil((box.min.x - lattice.origin.x) / r - 0.5)) - margin_cells;
  const int j0 = static_cast<int>(std::ceil((box.min.y - lattice.origin.y) / r - 0.5)) - margin_cells;
  const int i1 = static_cast<int>(std::floor((box.max.x - lattice.origin.x) / r + 0.5)) + margin_cells;
  const int j1 = static_cast<int>(std::floor((box.max.y - lattice.origin.y) / r + 0.5)) + margin_cells;
  return lattice.window(i0, j0, std::max(1, i1 - i0 + 1), std::max(1, j1 - j0 + 1));
}

/// Sorted, duplicate-free set of cell coordinates.
class CellSet {
 public:
  CellSet() = default;
  explicit CellSet(std::vector<Cell> cells) : cells_(std::move(cells)) {
    std::sort(cells_.begin(), cells_.end());
    cells_.erase(std::unique(cells_.begin(), cells_.end()), cells_.end());
  }

  bool contains(Cell c) const { return std::binary_search(cells_.begin(), cells_.end(), c); }
  std::size_t size() const { return cells_.size(); }
  bool empty() const { return cells_.empty(); }
  auto begin() const { return cells_.begin(); }
  auto end() const { return cells_.end(); }
  const std::vector<Cell>& cells() const { return cells_; }

  friend bool operator==(const CellSet&, const CellSet&) = default;

 private:
  std::vector<Cell> cells_;
};

namespace detail {

// Closed axis-aligned square vs closed polygon region.
inline bool square_intersects_polygon(Point2 lo, Point2 hi, const Polygon2& poly) {
  const Point2 c{0.5 * (lo.x + hi.x), 0.5 * (lo.y + hi.y)};
  if (point_in_polygon(c, poly)) return true;
  const Point2 corners[4] = {lo, {hi.x, lo.y}, hi, {lo.x, hi.y}};
  for (const Point2 q : corners) {
    if (point_in_polygon(q, poly)) return true;
  }
  for (const auto& ring : poly.rings()) {
    const std::size_t n = ring.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Point2 a = ring[i];
      const Point2 b = ring[(i + 1) % n];
      if (std::max(a.x, b.x) < lo.x || std::min(a.x, b.x) > hi.x || std::max(a.y, b.y) < lo.y ||
          std::min(a.y, b.y) > hi.y) {
        continue;
      }
      if (a.x >= lo.x && a.x <= hi.x && a.y >= lo.y && a.y <= hi.y) return true;
      for (int k = 0; k < 4; ++k) {
        if (segments_intersect(a, b, corners[k], corners[(k + 1) % 4])) return true;
      }
    }
  }
  return false;
}

}  // namespace detail

/// Binary raster over a GridSpec window, stored row-major (row = fixed y).
class OccupancyGrid {
 public:
  OccupancyGrid() = default;
  explicit OccupancyGrid(GridSpec spec, bool fill = false) : spec_(spec) {
    spec_.validate();
    cells_.assign(spec_.size(), fill ? 1 : 0);
  }

  const GridSpec& spec() const { return spec_; }
  int nx() const { return spec_.nx; }
  int ny() const { return spec_.ny; }

  bool at(int i, int j) const { return cells_[index(i, j)] != 0; }
  bool contains(Cell c) const { return spec_.in_window(c.x, c.y) && at(c.x, c.y); }
  void set(int i, int j, bool v = true) { cells_[index(i, j)] = v ? 1 : 0; }

  std::uint8_t* row(int j) { return cells_.data() + static_cast<std::size_t>(j) * spec_.nx; }
  const std::uint8_t* row(int j) const { return cells_.data() + static_cast<std::size_t>(j) * spec_.nx; }
  const std::vector<std::uint8_t>& raw() const { return cells_; }

  std::size_t count() const {
    std::size_t n = 0;
    for (const auto v : cells_) n += v;
    return n;
  }
  bool empty() const { return std::none_of(cells_.begin(), cells_.end(), [](auto v) { return v != 0; }); }

  CellSet cell_set() const {
    std::vector<Cell> out;
    for (int j = 0; j < spec_.ny; ++j) {
      for (int i = 0; i < spec_.nx; ++i) {
        if (at(i, j)) out.push_back({i, j});
      }
    }
    return CellSet(std::move(out));
  }

  /// True when every set cell of this grid is set in `other` (same spec).
  bool subset_of(const OccupancyGrid& other) const {
    require_same_spec(other, "subset_of");
    for (std::size_t k = 0; k < cells_.size(); ++k) {
      if (cells_[k] && !other.cells_[k]) return false;
    }
    return true;
  }

  void require_same_spec(const OccupancyGrid& other, const char* op) const {
    if (!(spec_ == other.spec_)) throw ContractViolation(std::string(op) + ": grid specs differ");
  }

  friend bool operator==(const OccupancyGrid&, const OccupancyGrid&) = default;

 private:
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * spec_.nx + static_cast<std::size_t>(i); }

  GridSpec spec_;
  std::vector<std::uint8_t> cells_;
};

/// Cells whose closed square intersects the closed region, clipped to the
/// window. Always an over-approximation of the region.
inline OccupancyGrid rasterize(const Polygon2& region, const GridSpec& spec) {
  OccupancyGrid out(spec);
  const double r = spec.resolution;
  const Box2& bb = region.bbox();
  const int i0 = std::max(0, static_cast<int>(std::ceil((bb.min.x - spec.origin.x) / r - 0.5)));
  const int j0 = std::max(0, static_cast<int>(std::ceil((bb.min.y - spec.origin.y) / r - 0.5)));
  const int i1 = std::min(spec.nx - 1, static_cast<int>(std::floor((bb.max.x - spec.origin.x) / r + 0.5)));
  const int j1 = std::min(spec.ny - 1, static_cast<int>(std::floor((bb.max.y - spec.origin.y) / r + 0.5)));
  for (int j = j0; j <= j1; ++j) {
    for (int i = i0; i <= i1; ++i) {
      const Point2 c = spec.center(i, j);
      const Point2 lo{c.x - 0.5 * r, c.y - 0.5 * r};
      const Point2 hi{c.x + 0.5 * r, c.y + 0.5 * r};
      if (detail::square_intersects_polygon(lo, hi, region)) out.set(i, j);
    }
  }
  return out;
}

/// Set-builder form of `rasterize`.
inline CellSet cells_of_set(const Polygon2& region, const GridSpec& spec) { return rasterize(region, spec).cell_set(); }

inline OccupancyGrid occupancy_matrix(const CellSet& cs, const GridSpec& spec) {
  OccupancyGrid out(spec);
  for (const Cell c : cs) {
    if (!spec.in_window(c.x, c.y)) throw ContractViolation("occupancy_matrix: cell outside window");
    out.set(c.x, c.y);
  }
  return out;
}

/// Integer offsets relative to the origin cell.
class StructuringElement {
 public:
  StructuringElement() = default;
  explicit StructuringElement(std::vector<Cell> offsets) : offsets_(CellSet(std::move(offsets)).cells()) {}

  const std::vector<Cell>& offsets() const { return offsets_; }
  bool empty() const { return offsets_.empty(); }
  bool contains(Cell c) const { return std::binary_search(offsets_.begin(), offsets_.end(), c); }

  StructuringElement merged(const StructuringElement& other) const {
    std::vector<Cell> all = offsets_;
    all.insert(all.end(), other.offsets_.begin(), other.offsets_.end());
    return StructuringElement(std::move(all));
  }

  friend bool operator==(const StructuringElement&, const StructuringElement&) = default;

 private:
  std::vector<Cell> offsets_;
};

/// Minkowski sum of the set cells with the element, clipped to the window:
/// out(i, j) = 1 iff some offset (u, v) has in(i - u, j - v) = 1.
inline OccupancyGrid dilate(const OccupancyGrid& g, const StructuringElement& d) {
  if (d.empty()) throw ContractViolation("dilate: empty structuring element");
  OccupancyGrid out(g.spec());
  const int nx = g.nx();
  const int ny = g.ny();
  std::vector<char> row_used(static_cast<std::size_t>(ny), 0);
  for (int j = 0; j < ny; ++j) {
    const auto* r = g.row(j);
    row_used[static_cast<std::size_t>(j)] = std::any_of(r, r + nx, [](auto v) { return v != 0; });
  }
  for (const Cell off : d.offsets()) {
    const int u = off.x;
    const int v = off.y;
    if (std::abs(u) >= nx || std::abs(v) >= ny) continue;
    const int dst_i0 = std::max(0, u);
    const int dst_i1 = std::min(nx, nx + u);
    for (int j = std::max(0, v); j < std::min(ny, ny + v); ++j) {
      if (!row_used[static_cast<std::size_t>(j - v)]) continue;
      const std::uint8_t* src = g.row(j - v);
      std::uint8_t* dst = out.row(j);
      for (int i = dst_i0; i < dst_i1; ++i) dst[i] |= src[i - u];
    }
  }
  return out;
}

inline OccupancyGrid complement(const OccupancyGrid& g) {
  OccupancyGrid out(g.spec());
  for (int j = 0; j < g.ny(); ++j) {
    const auto* s = g.row(j);
    auto* d = out.row(j);
    for (int i = 0; i < g.nx(); ++i) d[i] = s[i] ? 0 : 1;
  }
  return out;
}

inline OccupancyGrid intersect(const OccupancyGrid& a, const OccupancyGrid& b) {
  a.require_same_spec(b, "intersect");
  OccupancyGrid out(a.spec());
  for (int j = 0; j < a.ny(); ++j) {
    const auto* pa = a.row(j);
    const auto* pb = b.row(j);
    auto* d = out.row(j);
    for (int i = 0; i < a.nx(); ++i) d[i] = pa[i] & pb[i];
  }
  return out;
}

inline OccupancyGrid unite(const OccupancyGrid& a, const OccupancyGrid& b) {
  a.require_same_spec(b, "unite");
  OccupancyGrid out(a.spec());
  for (int j = 0; j < a.ny(); ++j) {
    const auto* pa = a.row(j);
    const auto* pb = b.row(j);
    auto* d = out.row(j);
    for (int i = 0; i < a.nx(); ++i) d[i] = pa[i] | pb[i];
  }
  return out;
}

/// Copies the part of `g` that falls inside `window` (same lattice); cells of
/// `window` outside `g` stay empty.
inline OccupancyGrid resample_window(const OccupancyGrid& g, const GridSpec& window) {
  OccupancyGrid out(window);
  const Cell shift = world_to_cell(window.origin, g.spec());
  for (int j = 0; j < window.ny; ++j) {
    const int sj = j + shift.y;
    if (sj < 0 || sj >= g.ny()) continue;
    for (int i = 0; i < window.nx; ++i) {
      const int si = i + shift.x;
      if (si >= 0 && si < g.nx() && g.at(si, sj)) out.set(i, j);
    }
  }
  return out;
}

/// Inclusive index bounds of the set cells; nullopt when empty.
struct CellBounds {
  int i0, j0, i1, j1;
};

inline std::optional<CellBounds> occupied_bounds(const OccupancyGrid& g) {
  CellBounds b{g.nx(), g.ny(), -1, -1};
  for (int j = 0; j < g.ny(); ++j) {
    const auto* r = g.row(j);
    for (int i = 0; i < g.nx(); ++i) {
      if (r[i]) {
        b.i0 = std::min(b.i0, i);
        b.i1 = std::max(b.i1, i);
        b.j0 = std::min(b.j0, j);
        b.j1 = std::max(b.j1, j);
      }
    }
  }
  if (b.i1 < 0) return std::nullopt;
  return b;
}

/// Plain-text PGM (P2), values 0/1. The first written row is the top of the
/// window (largest y) so the image reads north-up.
inline void write_pgm(std::ostream& os, const OccupancyGrid& g) {
  os << "P2\n" << g.nx() << ' ' << g.ny() << "\n1\n";
  for (int j = g.ny() - 1; j >= 0; --j) {
    const auto* r = g.row(j);
    for (int i = 0; i < g.nx(); ++i) {
      if (i) os << ' ';
      os << static_cast<int>(r[i]);
    }
    os << '\n';
  }
}

inline void write_pgm(const std::string& path, const OccupancyGrid& g) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_pgm: cannot open " + path);
  write_pgm(os, g);
}

}  // namespace occrisk
