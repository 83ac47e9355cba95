#pragma once

// Brute-force reference implementations shared by unit tests and the
// acceptance binary. Each one is written independently of the library code
// it checks.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "occrisk/geometry.hpp"
#include "occrisk/grid.hpp"
#include "occrisk/riskfield.hpp"

namespace oracle {

using occrisk::Point2;

/// Winding number of `ring` around p; boundary points report `on_boundary`.
inline int winding_number(Point2 p, const std::vector<Point2>& ring, bool& on_boundary) {
  on_boundary = false;
  double total = 0.0;
  for (std::size_t i = 0; i < ring.size(); ++i) {
    const Point2 a = ring[i] - p;
    const Point2 b = ring[(i + 1) % ring.size()] - p;
    const Point2 e = b - a;
    const double len2 = e.x * e.x + e.y * e.y;
    const double t = std::clamp(-(a.x * e.x + a.y * e.y) / len2, 0.0, 1.0);
    const double dx = a.x + t * e.x;
    const double dy = a.y + t * e.y;
    if (std::sqrt(dx * dx + dy * dy) <= 1e-12) on_boundary = true;
    total += std::atan2(a.x * b.y - a.y * b.x, a.x * b.x + a.y * b.y);
  }
  return static_cast<int>(std::lround(total / (2.0 * std::numbers::pi)));
}

/// Closed membership by winding number over outer ring and holes.
inline bool inside_closed(Point2 p, const occrisk::Polygon2& poly) {
  bool edge = false;
  const int w = winding_number(p, poly.outer(), edge);
  if (edge) return true;
  if (w == 0) return false;
  for (const auto& h : poly.holes()) {
    bool hole_edge = false;
    if (winding_number(p, h, hole_edge) != 0 && !hole_edge) return false;
  }
  return true;
}

/// True when no sample along origin->q lies strictly inside an occluder.
inline bool ray_clear(Point2 origin, Point2 q, const std::vector<occrisk::Polygon2>& occluders, int samples = 2000) {
  for (int s = 1; s < samples; ++s) {
    const double t = static_cast<double>(s) / samples;
    const Point2 p = origin + t * (q - origin);
    for (const auto& o : occluders) {
      if (occrisk::point_strictly_inside(p, o)) return false;
    }
  }
  return true;
}

/// Full 2-D convolution in gather form.
inline occrisk::Matrix convolve(const occrisk::OccupancyGrid& g, const occrisk::Matrix& k) {
  const int b = k.nx;
  occrisk::Matrix out(g.nx() + b - 1, g.ny() + k.ny - 1);
  for (int oj = 0; oj < out.ny; ++oj) {
    for (int oi = 0; oi < out.nx; ++oi) {
      long double s = 0.0L;
      for (int v = 0; v < k.ny; ++v) {
        for (int u = 0; u < k.nx; ++u) {
          const int i = oi - u;
          const int j = oj - v;
          if (i >= 0 && j >= 0 && i < g.nx() && j < g.ny() && g.at(i, j)) s += k(u, v);
        }
      }
      out(oi, oj) = static_cast<double>(s);
    }
  }
  return out;
}

/// Minkowski sum by scanning every (cell, offset) pair.
inline occrisk::OccupancyGrid dilate(const occrisk::OccupancyGrid& g, const std::vector<occrisk::Cell>& offsets) {
  occrisk::OccupancyGrid out(g.spec());
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      for (const auto& o : offsets) {
        const int si = i - o.x;
        const int sj = j - o.y;
        if (si >= 0 && sj >= 0 && si < g.nx() && sj < g.ny() && g.at(si, sj)) {
          out.set(i, j);
          break;
        }
      }
    }
  }
  return out;
}

/// Does the closed square [c - half, c + half]^2 meet the closed disk (or
/// half-disk facing `heading`, open along its diameter) of radius r at the
/// origin? Dense sampling of the square; callers avoid radii within the
/// sampling error of a corner.
inline bool square_meets_reach(double cx, double cy, double half, double r, const double* heading) {
  const int n = 400;
  for (int a = 0; a <= n; ++a) {
    for (int b = 0; b <= n; ++b) {
      const double x = cx - half + 2.0 * half * a / n;
      const double y = cy - half + 2.0 * half * b / n;
      if (x * x + y * y > r * r + 1e-12) continue;
      if (heading && x * std::cos(*heading) + y * std::sin(*heading) <= 1e-9) continue;
      return true;
    }
  }
  return false;
}

inline occrisk::OccupancyGrid random_grid(std::mt19937_64& rng, int max_side, double density) {
  std::uniform_int_distribution<int> side(1, max_side);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  occrisk::GridSpec spec{0.2, {0.0, 0.0}, side(rng), side(rng)};
  occrisk::OccupancyGrid g(spec);
  for (int j = 0; j < spec.ny; ++j) {
    for (int i = 0; i < spec.nx; ++i) {
      if (coin(rng) < density) g.set(i, j);
    }
  }
  return g;
}

}  // namespace oracle
