#pragma once

// Discrete kinematic bicycle model (explicit Euler) with analytic Jacobians.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "occrisk/errors.hpp"

namespace occrisk {

struct VehicleState {
  double x{0.0};
  double y{0.0};
  double theta{0.0};
  double v{0.0};
  double delta{0.0};

  std::array<double, 5> as_array() const { return {x, y, theta, v, delta}; }
  static VehicleState from_array(const std::array<double, 5>& a) { return {a[0], a[1], a[2], a[3], a[4]}; }
  friend bool operator==(const VehicleState&, const VehicleState&) = default;
};

struct ControlInput {
  double a{0.0};
  double omega{0.0};
  friend bool operator==(const ControlInput&, const ControlInput&) = default;
};

struct Interval {
  double lo{0.0};
  double hi{0.0};

  double clamp(double x) const { return std::min(hi, std::max(lo, x)); }
  bool contains(double x, double tol = 0.0) const { return x >= lo - tol && x <= hi + tol; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

struct VehicleParams {
  double wheelbase{2.7};
  double t_s{0.4};
  Interval v{0.0, 5.0};
  Interval delta{-1.5, 1.5};
  Interval a{-5.0, 2.0};
  Interval omega{-1.5, 1.5};

  void validate() const {
    if (!(wheelbase > 0.0)) throw ContractViolation("VehicleParams: wheelbase must be > 0");
    if (!(t_s > 0.0)) throw ContractViolation("VehicleParams: t_s must be > 0");
    for (const Interval* b : {&v, &delta, &a, &omega}) {
      if (!(b->lo <= b->hi)) throw ContractViolation("VehicleParams: bound with lower > upper");
    }
  }

  friend bool operator==(const VehicleParams&, const VehicleParams&) = default;
};

using Mat5 = std::array<std::array<double, 5>, 5>;
using Mat52 = std::array<std::array<double, 2>, 5>;

namespace detail {

inline void check_steering(const VehicleState& s) {
  if (s.v != 0.0 && std::abs(std::cos(s.delta)) < 1e-9) {
    throw ContractViolation("bicycle model: steering angle at tan singularity");
  }
}

}  // namespace detail

inline VehicleState step(const VehicleState& s, const ControlInput& u, const VehicleParams& p) {
  detail::check_steering(s);
  const double ts = p.t_s;
  return {s.x + ts * s.v * std::cos(s.theta), s.y + ts * s.v * std::sin(s.theta),
          s.theta + ts * (s.v / p.wheelbase) * std::tan(s.delta), s.v + ts * u.a, s.delta + ts * u.omega};
}

/// States x_0..x_N for inputs u_0..u_{N-1}.
inline std::vector<VehicleState> rollout(const VehicleState& s0, std::span<const ControlInput> u,
                                         const VehicleParams& p) {
  std::vector<VehicleState> xs;
  xs.reserve(u.size() + 1);
  xs.push_back(s0);
  for (const auto& ui : u) xs.push_back(step(xs.back(), ui, p));
  return xs;
}

struct Jacobians {
  Mat5 A{};   // d step / d state
  Mat52 B{};  // d step / d input
};

inline Jacobians jacobians(const VehicleState& s, const ControlInput&, const VehicleParams& p) {
  detail::check_steering(s);
  const double ts = p.t_s;
  const double c = std::cos(s.theta);
  const double sn = std::sin(s.theta);
  const double tn = std::tan(s.delta);
  const double sec2 = 1.0 + tn * tn;
  Jacobians j;
  for (int i = 0; i < 5; ++i) j.A[i][i] = 1.0;
  j.A[0][2] = -ts * s.v * sn;
  j.A[0][3] = ts * c;
  j.A[1][2] = ts * s.v * c;
  j.A[1][3] = ts * sn;
  j.A[2][3] = ts * tn / p.wheelbase;
  j.A[2][4] = ts * s.v * sec2 / p.wheelbase;
  j.B[3][0] = ts;
  j.B[4][1] = ts;
  return j;
}

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  return a <= -std::numbers::pi ? a + 2.0 * std::numbers::pi : a;
}

}  // namespace occrisk
