#pragma once

// Gaussian risk kernels, discrete risk fields by convolution with occupancy
// grids, and C1 bicubic spline surfaces fitted to them.

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <optional>
#include <ostream>
#include <vector>

#include "occrisk/errors.hpp"
#include "occrisk/geometry.hpp"
#include "occrisk/grid.hpp"

namespace occrisk {

struct RiskKernelParams {
  double a{1.0};
  double sigma{0.2};
  double support_multiplier{3.0};

  void validate() const {
    if (!(a > 0.0)) throw ContractViolation("RiskKernelParams: a must be > 0");
    if (!(sigma > 0.0)) throw ContractViolation("RiskKernelParams: sigma must be > 0");
    if (!(support_multiplier >= 1.0)) throw ContractViolation("RiskKernelParams: support multiplier must be >= 1");
  }

  friend bool operator==(const RiskKernelParams&, const RiskKernelParams&) = default;
};

/// Dense row-major matrix; (i, j) is column i (x), row j (y).
struct Matrix {
  int nx{0};
  int ny{0};
  std::vector<double> data;

  Matrix() = default;
  Matrix(int nx_, int ny_, double fill = 0.0) : nx(nx_), ny(ny_), data(static_cast<std::size_t>(nx_) * ny_, fill) {}

  double& operator()(int i, int j) { return data[static_cast<std::size_t>(j) * nx + i]; }
  double operator()(int i, int j) const { return data[static_cast<std::size_t>(j) * nx + i]; }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

/// Square kernel sampled on the grid lattice, centered at (0, 0).
struct RiskKernelMatrix {
  int half{0};
  double resolution{0.0};
  std::vector<double> coords;  // shared by x and y
  Matrix values;
  bool under_resolved{false};

  int size() const { return 2 * half + 1; }
};

inline double kernel_value(const RiskKernelParams& p, double z1, double z2) {
  return p.a * std::exp(-(z1 * z1 + z2 * z2) / (2.0 * p.sigma * p.sigma));
}

inline RiskKernelMatrix sample_kernel(const RiskKernelParams& p, double resolution) {
  p.validate();
  if (!(resolution > 0.0)) throw ContractViolation("sample_kernel: resolution must be > 0");
  RiskKernelMatrix k;
  k.half = static_cast<int>(std::ceil(p.support_multiplier * p.sigma / resolution - 1e-12));
  k.resolution = resolution;
  k.under_resolved = p.sigma < 0.5 * resolution;
  const int b = k.size();
  for (int i = 0; i < b; ++i) k.coords.push_back((i - k.half) * resolution);
  k.values = Matrix(b, b);
  for (int j = 0; j < b; ++j) {
    for (int i = 0; i < b; ++i) k.values(i, j) = kernel_value(p, k.coords[i], k.coords[j]);
  }
  return k;
}

/// Full-convolution result. `spec` places node (i, j) in world coordinates;
/// its window is the occupancy window grown by the kernel half-width.
struct DiscreteRiskField {
  GridSpec spec;
  Matrix values;
};

inline DiscreteRiskField convolve(const OccupancyGrid& g, const RiskKernelMatrix& k) {
  const int b = k.size();
  DiscreteRiskField out;
  out.spec = g.spec();
  out.spec.nx = g.nx() + b - 1;
  out.spec.ny = g.ny() + b - 1;
  out.spec.origin = g.spec().origin - Point2{k.half * g.spec().resolution, k.half * g.spec().resolution};
  out.values = Matrix(out.spec.nx, out.spec.ny);
  // Extended accumulation so the result is the correctly rounded sum, independent of summation order.
  std::vector<long double> acc(out.values.data.size(), 0.0L);
  for (int j = 0; j < g.ny(); ++j) {
    const auto* row = g.row(j);
    for (int i = 0; i < g.nx(); ++i) {
      if (!row[i]) continue;
      for (int v = 0; v < b; ++v) {
        long double* dst = &acc[static_cast<std::size_t>(j + v) * out.spec.nx + i];
        const double* src = &k.values.data[static_cast<std::size_t>(v) * b];
        for (int u = 0; u < b; ++u) dst[u] += src[u];
      }
    }
  }
  std::copy(acc.begin(), acc.end(), out.values.data.begin());
  return out;
}

/// DRF of a grid padded by `pad` zero nodes on every side.
inline DiscreteRiskField zero_pad(const DiscreteRiskField& d, int pad) {
  DiscreteRiskField out;
  out.spec = d.spec.window(-pad, -pad, d.spec.nx + 2 * pad, d.spec.ny + 2 * pad);
  out.values = Matrix(out.spec.nx, out.spec.ny);
  for (int j = 0; j < d.values.ny; ++j) {
    for (int i = 0; i < d.values.nx; ++i) out.values(i + pad, j + pad) = d.values(i, j);
  }
  return out;
}

inline void write_csv(std::ostream& os, const DiscreteRiskField& d) {
  os.precision(17);
  for (int j = 0; j < d.values.ny; ++j) {
    for (int i = 0; i < d.values.nx; ++i) {
      if (i) os << ',';
      os << d.values(i, j);
    }
    os << '\n';
  }
}

namespace detail {

/// LU factorization with partial pivoting of a tridiagonal matrix, after
/// LAPACK's dgttrf/dgtts2. Factor once, solve many right-hand sides.
class TridiagonalLU {
 public:
  TridiagonalLU(std::vector<double> dl, std::vector<double> d, std::vector<double> du)
      : dl_(std::move(dl)), d_(std::move(d)), du_(std::move(du)) {
    const std::size_t n = d_.size();
    if (n == 0 || dl_.size() + 1 != n || du_.size() + 1 != n) throw ContractViolation("TridiagonalLU: bad shape");
    du2_.assign(n > 2 ? n - 2 : 0, 0.0);
    swap_.assign(n, 0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (std::abs(d_[i]) >= std::abs(dl_[i])) {
        if (d_[i] == 0.0) throw ContractViolation("TridiagonalLU: singular matrix");
        const double fact = dl_[i] / d_[i];
        dl_[i] = fact;
        d_[i + 1] -= fact * du_[i];
      } else {
        const double fact = d_[i] / dl_[i];
        d_[i] = dl_[i];
        dl_[i] = fact;
        const double temp = du_[i];
        du_[i] = d_[i + 1];
        d_[i + 1] = temp - fact * d_[i + 1];
        if (i + 2 < n) {
          du2_[i] = du_[i + 1];
          du_[i + 1] = -fact * du_[i + 1];
        }
        swap_[i] = 1;
      }
    }
    if (d_[n - 1] == 0.0) throw ContractViolation("TridiagonalLU: singular matrix");
  }

  std::size_t size() const { return d_.size(); }

  /// Solves in place for a right-hand side read with the given stride.
  void solve(double* b, std::size_t stride = 1) const {
    const std::size_t n = d_.size();
    auto at = [&](std::size_t i) -> double& { return b[i * stride]; };
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (!swap_[i]) {
        at(i + 1) -= dl_[i] * at(i);
      } else {
        const double temp = at(i) - dl_[i] * at(i + 1);
        at(i) = at(i + 1);
        at(i + 1) = temp;
      }
    }
    at(n - 1) /= d_[n - 1];
    if (n > 1) at(n - 2) = (at(n - 2) - du_[n - 2] * at(n - 1)) / d_[n - 2];
    if (n < 3) return;
    for (std::size_t i = n - 2; i-- > 0;) at(i) = (at(i) - du_[i] * at(i + 1) - du2_[i] * at(i + 2)) / d_[i];
  }

 private:
  std::vector<double> dl_, d_, du_, du2_;
  std::vector<char> swap_;
};

/// Slope system of a not-a-knot cubic spline on n >= 4 uniform nodes.
inline TridiagonalLU not_a_knot_system(std::size_t n) {
  std::vector<double> dl(n - 1, 1.0), d(n, 4.0), du(n - 1, 1.0);
  d[0] = 1.0;
  du[0] = 2.0;
  dl[n - 2] = 2.0;
  d[n - 1] = 1.0;
  return TridiagonalLU(std::move(dl), std::move(d), std::move(du));
}

// Slopes s of the spline through f (stride-addressed) written to s.
inline void spline_slopes(const TridiagonalLU& lu, const double* f, std::size_t fstride, double h, double* s,
                          std::size_t sstride) {
  const std::size_t n = lu.size();
  auto df = [&](std::size_t i) { return (f[(i + 1) * fstride] - f[i * fstride]) / h; };
  s[0] = 0.5 * (5.0 * df(0) + df(1));
  for (std::size_t i = 1; i + 1 < n; ++i) s[i * sstride] = 3.0 * (df(i - 1) + df(i));
  s[(n - 1) * sstride] = 0.5 * (df(n - 3) + 5.0 * df(n - 2));
  lu.solve(s, sstride);
}

}  // namespace detail

/// Tensor-product cubic spline over a uniform node lattice, stored as
/// Hermite data (value, d/dx, d/dy, d2/dxdy) per node.
class ContinuousRiskField {
 public:
  struct Sample {
    double value{0.0};
    double dx{0.0};
    double dy{0.0};
  };

  ContinuousRiskField() = default;

  static ContinuousRiskField fit(const DiscreteRiskField& d) {
    const int nx = d.values.nx;
    const int ny = d.values.ny;
    if (nx < 4 || ny < 4) throw ContractViolation("fit_spline: need at least 4 nodes per dimension");
    ContinuousRiskField c;
    c.origin_ = d.spec.origin;
    c.h_ = d.spec.resolution;
    c.nx_ = nx;
    c.ny_ = ny;
    c.f_ = d.values;
    c.fx_ = Matrix(nx, ny);
    c.fy_ = Matrix(nx, ny);
    c.fxy_ = Matrix(nx, ny);
    const auto lux = detail::not_a_knot_system(static_cast<std::size_t>(nx));
    const auto luy = detail::not_a_knot_system(static_cast<std::size_t>(ny));
    const auto snx = static_cast<std::size_t>(nx);
    for (int j = 0; j < ny; ++j) {
      detail::spline_slopes(lux, &c.f_(0, j), 1, c.h_, &c.fx_(0, j), 1);
    }
    for (int i = 0; i < nx; ++i) {
      detail::spline_slopes(luy, &c.f_(i, 0), snx, c.h_, &c.fy_(i, 0), snx);
      detail::spline_slopes(luy, &c.fx_(i, 0), snx, c.h_, &c.fxy_(i, 0), snx);
    }
    return c;
  }

  Point2 origin() const { return origin_; }
  double spacing() const { return h_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  Box2 extent() const { return {origin_, origin_ + Point2{h_ * (nx_ - 1), h_ * (ny_ - 1)}}; }
  double node_value(int i, int j) const { return f_(i, j); }

  Sample eval(double x, double y) const {
    if (!std::isfinite(x) || !std::isfinite(y)) throw ContractViolation("eval: non-finite query");
    const double gx = (x - origin_.x) / h_;
    const double gy = (y - origin_.y) / h_;
    if (nx_ == 0 || gx < 0.0 || gy < 0.0 || gx > nx_ - 1 || gy > ny_ - 1) return {};
    const int i = std::min(static_cast<int>(gx), nx_ - 2);
    const int j = std::min(static_cast<int>(gy), ny_ - 2);
    const double t = gx - i;
    const double u = gy - j;
    const auto bx = basis(t);
    const auto by = basis(u);
    Sample s;
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        const double f = f_(i + a, j + b);
        const double fx = fx_(i + a, j + b) * h_;
        const double fy = fy_(i + a, j + b) * h_;
        const double fxy = fxy_(i + a, j + b) * h_ * h_;
        // index 0..1: value basis, 2..3: slope basis; +4 for derivatives.
        s.value += bx[a] * by[b] * f + bx[2 + a] * by[b] * fx + bx[a] * by[2 + b] * fy + bx[2 + a] * by[2 + b] * fxy;
        s.dx += bx[4 + a] * by[b] * f + bx[6 + a] * by[b] * fx + bx[4 + a] * by[2 + b] * fy +
                bx[6 + a] * by[2 + b] * fxy;
        s.dy += bx[a] * by[4 + b] * f + bx[2 + a] * by[4 + b] * fx + bx[a] * by[6 + b] * fy +
                bx[2 + a] * by[6 + b] * fxy;
      }
    }
    s.dx /= h_;
    s.dy /= h_;
    return s;
  }

 private:
  // Cubic Hermite basis on [0, 1] and its derivatives.
  static std::array<double, 8> basis(double t) {
    const double t2 = t * t;
    const double t3 = t2 * t;
    return {2 * t3 - 3 * t2 + 1, -2 * t3 + 3 * t2, t3 - 2 * t2 + t, t3 - t2,
            6 * t2 - 6 * t,      -6 * t2 + 6 * t,  3 * t2 - 4 * t + 1, 3 * t2 - 2 * t};
  }

  Point2 origin_{};
  double h_{1.0};
  int nx_{0};
  int ny_{0};
  Matrix f_, fx_, fy_, fxy_;
};

inline ContinuousRiskField fit_spline(const DiscreteRiskField& d) { return ContinuousRiskField::fit(d); }

using FieldPtr = std::shared_ptr<const ContinuousRiskField>;

/// Kernel, convolution and spline in one go. The DRF is padded with zero
/// nodes first so the surface decays to zero inside its own rectangle.
/// Returns null for an empty grid.
inline FieldPtr risk_field(const OccupancyGrid& g, const RiskKernelParams& p, int pad = 3) {
  if (g.empty()) return nullptr;
  const auto k = sample_kernel(p, g.spec().resolution);
  return std::make_shared<const ContinuousRiskField>(fit_spline(zero_pad(convolve(g, k), pad)));
}

inline FieldPtr risk_field(const Polygon2& shape, const GridSpec& lattice, const RiskKernelParams& p, int pad = 3) {
  return risk_field(rasterize(shape, covering_window(lattice, shape.bbox())), p, pad);
}

/// Fields the planner sees at one prediction step.
struct StepFields {
  std::vector<FieldPtr> infrastructure;
  std::vector<FieldPtr> objects;
  std::vector<FieldPtr> hidden;
};

/// Per-class settings for field construction.
struct FieldParams {
  RiskKernelParams object;
  RiskKernelParams infrastructure;
  RiskKernelParams hidden;
  GridSpec object_lattice;
  GridSpec hidden_lattice;
};

/// One field set per step n = 0..N. `objects[n]` lists predicted object
/// shapes at step n, `hidden[n]` one grid per hidden class. Hidden grids are
/// cropped to their occupied cells (and to `focus` when given) before
/// convolution.
inline std::vector<StepFields> build_entity_fields(const std::vector<FieldPtr>& infrastructure,
                                                   const std::vector<std::vector<Polygon2>>& objects,
                                                   const std::vector<std::vector<OccupancyGrid>>& hidden,
                                                   const FieldParams& params, int N,
                                                   std::optional<Box2> focus = std::nullopt) {
  if (N < 1) throw ContractViolation("build_entity_fields: N must be >= 1");
  if (objects.size() < static_cast<std::size_t>(N) + 1) {
    throw ContractViolation("build_entity_fields: missing object prediction step");
  }
  if (!hidden.empty() && hidden.size() < static_cast<std::size_t>(N) + 1) {
    throw ContractViolation("build_entity_fields: missing hidden prediction step");
  }
  std::vector<StepFields> out(static_cast<std::size_t>(N) + 1);
  for (std::size_t n = 0; n < out.size(); ++n) {
    out[n].infrastructure = infrastructure;
    for (const auto& shape : objects[n]) {
      if (auto f = risk_field(shape, params.object_lattice, params.object)) out[n].objects.push_back(std::move(f));
    }
    if (hidden.empty()) continue;
    for (const auto& g : hidden[n]) {
      OccupancyGrid src = g;
      if (focus) {
        const GridSpec w = covering_window(g.spec(), *focus);
        src = resample_window(g, w);
      }
      const auto b = occupied_bounds(src);
      if (!b) continue;
      const OccupancyGrid crop =
          resample_window(src, src.spec().window(b->i0, b->j0, b->i1 - b->i0 + 1, b->j1 - b->j0 + 1));
      if (auto f = risk_field(crop, params.hidden)) out[n].hidden.push_back(std::move(f));
    }
  }
  return out;
}

}  // namespace occrisk
