#pragma once

// Finite-horizon trajectory optimization over summed risk fields: quadratic
// tracking and input costs plus the risk of every entity field along the
// rolled-out path, solved by single shooting with projected L-BFGS.

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "occrisk/dynamics.hpp"
#include "occrisk/errors.hpp"
#include "occrisk/riskfield.hpp"

namespace occrisk {

struct SolverOptions {
  int max_iter{200};
  double stationarity_tol{1e-4};
  double step_tol{1e-8};
  int memory{8};
  double max_step{0.5};  // largest per-iteration change of any input
  // stationarity is |P(u - grad) - u|_inf, in input units

  friend bool operator==(const SolverOptions&, const SolverOptions&) = default;
};

struct PlannerConfig {
  int N{10};
  std::array<double, 5> stage_weights{0.0, 0.0, 0.0, 0.1, 0.1};
  std::array<double, 2> input_weights{0.5, 1000.0};
  std::array<double, 5> terminal_weights{20.0, 20.0, 1.0, 0.1, 0.1};
  VehicleParams vehicle;
  SolverOptions solver;

  void validate() const {
    if (N < 1) throw ContractViolation("PlannerConfig: N must be >= 1");
    for (double w : stage_weights) {
      if (!(w >= 0.0)) throw ContractViolation("PlannerConfig: negative stage weight");
    }
    for (double w : input_weights) {
      if (!(w >= 0.0)) throw ContractViolation("PlannerConfig: negative input weight");
    }
    for (double w : terminal_weights) {
      if (!(w >= 0.0)) throw ContractViolation("PlannerConfig: negative terminal weight");
    }
    vehicle.validate();
  }

  friend bool operator==(const PlannerConfig&, const PlannerConfig&) = default;
};

struct CostBreakdown {
  double tracking{0.0};
  double input{0.0};
  double infrastructure{0.0};
  double objects{0.0};
  double hidden{0.0};

  double total() const { return tracking + input + infrastructure + objects + hidden; }
};

struct CostEval {
  double J{0.0};
  CostBreakdown terms;
  std::vector<ControlInput> grad;  // empty unless requested
  std::vector<VehicleState> xs;
};

namespace detail {

// Sum of non-negative parts of the fields at (x, y), accumulating the
// gradient of the clamped values.
inline double field_sum(const std::vector<FieldPtr>& fields, double x, double y, double& gx, double& gy) {
  double total = 0.0;
  for (const auto& f : fields) {
    const auto s = f->eval(x, y);
    if (s.value > 0.0 || std::isnan(s.value)) {
      total += s.value;
      gx += s.dx;
      gy += s.dy;
    }
  }
  return total;
}

}  // namespace detail

/// `refs[n - 1]` is the reference for step n = 1..N, `fields[n]` the field
/// set at step n (index 0 is ignored).
inline CostEval total_cost(const VehicleState& x0, std::span<const ControlInput> u,
                           std::span<const VehicleState> refs, std::span<const StepFields> fields,
                           const PlannerConfig& cfg, bool with_gradient = true) {
  const auto N = static_cast<std::size_t>(cfg.N);
  if (u.size() != N) throw ContractViolation("total_cost: input sequence length differs from N");
  if (refs.size() < N) throw ContractViolation("total_cost: missing reference step");
  if (fields.size() < N + 1) throw ContractViolation("total_cost: missing field step");

  CostEval out;
  out.xs = rollout(x0, u, cfg.vehicle);
  std::vector<std::array<double, 5>> dphi(N + 1, std::array<double, 5>{});

  for (std::size_t n = 0; n < N; ++n) {
    for (int i = 0; i < 2; ++i) {
      const double ui = i == 0 ? u[n].a : u[n].omega;
      out.terms.input += cfg.input_weights[i] * ui * ui;
    }
  }
  for (std::size_t n = 1; n <= N; ++n) {
    const auto x = out.xs[n].as_array();
    const auto r = refs[n - 1].as_array();
    const auto& w = n == N ? cfg.terminal_weights : cfg.stage_weights;
    for (int i = 0; i < 5; ++i) {
      const double e = x[i] - r[i];
      out.terms.tracking += w[i] * e * e;
      dphi[n][i] += 2.0 * w[i] * e;
    }
    if (!std::isfinite(x[0]) || !std::isfinite(x[1])) {
      out.terms.tracking = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    double gx = 0.0;
    double gy = 0.0;
    out.terms.infrastructure += detail::field_sum(fields[n].infrastructure, x[0], x[1], gx, gy);
    out.terms.objects += detail::field_sum(fields[n].objects, x[0], x[1], gx, gy);
    out.terms.hidden += detail::field_sum(fields[n].hidden, x[0], x[1], gx, gy);
    dphi[n][0] += gx;
    dphi[n][1] += gy;
  }
  out.J = out.terms.total();
  if (!with_gradient) return out;

  out.grad.resize(N);
  std::array<double, 5> lambda = dphi[N];
  for (std::size_t n = N; n-- > 0;) {
    const auto jac = jacobians(out.xs[n], u[n], cfg.vehicle);
    double ga = 2.0 * cfg.input_weights[0] * u[n].a;
    double gw = 2.0 * cfg.input_weights[1] * u[n].omega;
    for (int i = 0; i < 5; ++i) {
      ga += jac.B[i][0] * lambda[i];
      gw += jac.B[i][1] * lambda[i];
    }
    out.grad[n] = {ga, gw};
    if (n == 0) break;
    std::array<double, 5> next = dphi[n];
    for (int j = 0; j < 5; ++j) {
      for (int i = 0; i < 5; ++i) next[j] += jac.A[i][j] * lambda[i];
    }
    lambda = next;
  }
  return out;
}

/// Forward clamp of an input sequence onto the set whose rollout keeps v and
/// delta within bounds. `lo`/`hi` receive the effective per-entry limits.
inline std::vector<ControlInput> project_inputs(const VehicleState& x0, std::span<const ControlInput> u,
                                                const VehicleParams& p, std::vector<ControlInput>* lo = nullptr,
                                                std::vector<ControlInput>* hi = nullptr) {
  std::vector<ControlInput> out(u.begin(), u.end());
  if (lo) lo->resize(u.size());
  if (hi) hi->resize(u.size());
  double v = x0.v;
  double d = x0.delta;
  const auto limits = [&p](double value, const Interval& rate, const Interval& state) {
    double l = std::max(rate.lo, (state.lo - value) / p.t_s);
    double h = std::min(rate.hi, (state.hi - value) / p.t_s);
    if (l > h) {
      l = rate.lo;
      h = rate.hi;
    }
    return Interval{l, h};
  };
  for (std::size_t n = 0; n < out.size(); ++n) {
    const Interval ia = limits(v, p.a, p.v);
    const Interval iw = limits(d, p.omega, p.delta);
    out[n].a = ia.clamp(out[n].a);
    out[n].omega = iw.clamp(out[n].omega);
    if (lo) (*lo)[n] = {ia.lo, iw.lo};
    if (hi) (*hi)[n] = {ia.hi, iw.hi};
    v += p.t_s * out[n].a;
    d += p.t_s * out[n].omega;
  }
  return out;
}

enum class SolveStatus { kConverged, kMaxIterations, kSmallStep, kFailed };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kConverged: return "converged";
    case SolveStatus::kMaxIterations: return "max_iter";
    case SolveStatus::kSmallStep: return "small_step";
    case SolveStatus::kFailed: return "failed";
  }
  return "unknown";
}

struct PlanResult {
  std::vector<ControlInput> u_seq;
  std::vector<VehicleState> x_seq;
  double cost{0.0};
  double initial_cost{0.0};
  CostBreakdown terms;
  int iterations{0};
  int evaluations{0};
  double stationarity{0.0};
  SolveStatus status{SolveStatus::kConverged};

  bool ok() const { return status != SolveStatus::kFailed; }
};

namespace detail {

inline std::vector<double> flatten(std::span<const ControlInput> u) {
  std::vector<double> v;
  v.reserve(2 * u.size());
  for (const auto& c : u) {
    v.push_back(c.a);
    v.push_back(c.omega);
  }
  return v;
}

inline std::vector<ControlInput> unflatten(const std::vector<double>& v) {
  std::vector<ControlInput> u(v.size() / 2);
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = {v[2 * i], v[2 * i + 1]};
  return u;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double inf_norm(const std::vector<double>& a) {
  double m = 0.0;
  for (const double x : a) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace detail

/// Local minimizer of total_cost from the projected warm start (zeros when
/// absent). The result never costs more than that starting point.
inline PlanResult solve(const VehicleState& x_s, std::span<const VehicleState> refs,
                        std::span<const StepFields> fields, const PlannerConfig& cfg,
                        std::optional<std::span<const ControlInput>> warm_start = std::nullopt) {
  cfg.validate();
  const auto N = static_cast<std::size_t>(cfg.N);
  const auto& vp = cfg.vehicle;
  VehicleState x0 = x_s;
  x0.v = vp.v.clamp(x0.v);
  x0.delta = vp.delta.clamp(x0.delta);

  std::vector<ControlInput> start(N);
  if (warm_start) {
    if (warm_start->size() != N) throw ContractViolation("solve: warm start length differs from N");
    std::copy(warm_start->begin(), warm_start->end(), start.begin());
  }

  PlanResult res;
  std::vector<ControlInput> lo_b, hi_b;
  auto project = [&](const std::vector<double>& v) {
    return detail::flatten(project_inputs(x0, detail::unflatten(v), vp));
  };
  auto evaluate = [&](const std::vector<double>& v, bool grad) {
    ++res.evaluations;
    return total_cost(x0, detail::unflatten(v), refs, fields, cfg, grad);
  };

  std::vector<double> u = project(detail::flatten(start));
  CostEval cur = evaluate(u, true);
  res.initial_cost = cur.J;
  auto finish = [&](SolveStatus st) {
    res.status = st;
    res.u_seq = detail::unflatten(u);
    res.x_seq = cur.xs;
    res.cost = cur.J;
    res.terms = cur.terms;
    return res;
  };
  if (!std::isfinite(cur.J)) return finish(SolveStatus::kFailed);

  std::vector<double> g = detail::flatten(cur.grad);
  std::deque<std::pair<std::vector<double>, std::vector<double>>> memory;
  const std::size_t dim = u.size();

  auto bound_of = [&](std::size_t i, bool upper) {
    const auto& b = upper ? hi_b[i / 2] : lo_b[i / 2];
    return i % 2 == 0 ? b.a : b.omega;
  };
  auto stationarity = [&]() {
    std::vector<double> t(dim);
    for (std::size_t i = 0; i < dim; ++i) t[i] = u[i] - g[i];
    t = project(t);
    double m = 0.0;
    for (std::size_t i = 0; i < dim; ++i) m = std::max(m, std::abs(t[i] - u[i]));
    return m;
  };

  for (res.iterations = 0; res.iterations < cfg.solver.max_iter; ++res.iterations) {
    res.stationarity = stationarity();
    if (res.stationarity <= cfg.solver.stationarity_tol) return finish(SolveStatus::kConverged);

    // Variables held at a limit by the gradient stay fixed this iteration.
    project_inputs(x0, detail::unflatten(u), vp, &lo_b, &hi_b);
    std::vector<char> active(dim, 0);
    for (std::size_t i = 0; i < dim; ++i) {
      const double eps = 1e-12;
      if ((u[i] <= bound_of(i, false) + eps && g[i] > 0.0) || (u[i] >= bound_of(i, true) - eps && g[i] < 0.0)) {
        active[i] = 1;
      }
    }
    auto masked = [&](std::vector<double> v) {
      for (std::size_t i = 0; i < dim; ++i) {
        if (active[i]) v[i] = 0.0;
      }
      return v;
    };

    bool accepted = false;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      std::vector<double> d = masked(g);
      if (attempt == 0 && !memory.empty()) {
        std::vector<double> alpha(memory.size());
        for (std::size_t k = memory.size(); k-- > 0;) {
          const auto& [s, y] = memory[k];
          alpha[k] = detail::dot(s, d) / detail::dot(y, s);
          for (std::size_t i = 0; i < dim; ++i) d[i] -= alpha[k] * y[i];
        }
        const auto& [s_last, y_last] = memory.back();
        const double gamma = detail::dot(s_last, y_last) / detail::dot(y_last, y_last);
        for (auto& x : d) x *= gamma;
        for (std::size_t k = 0; k < memory.size(); ++k) {
          const auto& [s, y] = memory[k];
          const double beta = detail::dot(y, d) / detail::dot(y, s);
          for (std::size_t i = 0; i < dim; ++i) d[i] += (alpha[k] - beta) * s[i];
        }
        d = masked(d);
      }
      for (auto& x : d) x = -x;
      double slope = detail::dot(g, d);
      if (!(slope < 0.0)) {
        if (attempt == 0) {
          memory.clear();
          continue;
        }
        break;
      }
      const double dn = detail::inf_norm(d);
      if (dn > cfg.solver.max_step) {
        for (auto& x : d) x *= cfg.solver.max_step / dn;
      } else if (attempt == 1 || memory.empty()) {
        // Unscaled gradient steps on tiny gradients would stall; start at the cap.
        for (auto& x : d) x *= cfg.solver.max_step / dn;
      }

      double step = 1.0;
      for (int bt = 0; bt < 40; ++bt, step *= 0.5) {
        std::vector<double> trial(dim);
        for (std::size_t i = 0; i < dim; ++i) trial[i] = u[i] + step * d[i];
        trial = project(trial);
        std::vector<double> delta(dim);
        for (std::size_t i = 0; i < dim; ++i) delta[i] = trial[i] - u[i];
        if (detail::inf_norm(delta) <= cfg.solver.step_tol) break;
        CostEval te = evaluate(trial, false);
        if (!std::isfinite(te.J)) return finish(SolveStatus::kFailed);
        if (te.J <= cur.J + 1e-4 * std::min(0.0, detail::dot(g, delta)) && te.J <= cur.J) {
          CostEval ne = evaluate(trial, true);
          std::vector<double> gn = detail::flatten(ne.grad);
          std::vector<double> y(dim);
          for (std::size_t i = 0; i < dim; ++i) y[i] = gn[i] - g[i];
          if (detail::dot(delta, y) > 1e-12 * detail::dot(delta, delta)) {
            memory.emplace_back(delta, y);
            if (static_cast<int>(memory.size()) > cfg.solver.memory) memory.pop_front();
          }
          u = std::move(trial);
          g = std::move(gn);
          cur = std::move(ne);
          accepted = true;
          break;
        }
      }
      if (!accepted) memory.clear();
    }
    if (!accepted) {
      res.stationarity = stationarity();
      return finish(SolveStatus::kSmallStep);
    }
  }
  res.stationarity = stationarity();
  return finish(res.stationarity <= cfg.solver.stationarity_tol ? SolveStatus::kConverged
                                                                 : SolveStatus::kMaxIterations);
}

/// Full braking with the steering angle returned to zero as fast as the
/// rate bound allows.
inline std::vector<ControlInput> braking_inputs(const VehicleState& x, const VehicleParams& p, int N) {
  std::vector<ControlInput> u(static_cast<std::size_t>(N));
  double d = x.delta;
  for (auto& c : u) {
    c = {p.a.lo, p.omega.clamp(-d / p.t_s)};
    d += p.t_s * c.omega;
  }
  return project_inputs(x, u, p);
}

/// Closed-loop wrapper. Each step is solved from the shifted previous plan,
/// from zero inputs and from full braking; the cheapest result is applied
/// and its shifted tail kept for the next step. When every start fails the
/// vehicle brakes as hard as the bounds allow with zero steering rate.
class RecedingHorizonPlanner {
 public:
  enum class Start { kWarm, kZero, kBrake };

  struct Outcome {
    ControlInput applied;
    PlanResult plan;
    bool fallback{false};
    bool warm_started{false};
    Start start{Start::kZero};
    double warm_cost{0.0};   // cost of the projected warm start (zero inputs without one)
    int max_iterations{0};   // over all starts
  };

  explicit RecedingHorizonPlanner(PlannerConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

  const PlannerConfig& config() const { return cfg_; }
  void reset() { warm_.reset(); }
  const std::optional<std::vector<ControlInput>>& warm_start() const { return warm_; }

  Outcome step(const VehicleState& x, std::span<const VehicleState> refs, std::span<const StepFields> fields) {
    Outcome out;
    out.warm_started = warm_.has_value();
    std::vector<std::pair<Start, std::vector<ControlInput>>> starts;
    if (warm_) starts.emplace_back(Start::kWarm, *warm_);
    starts.emplace_back(Start::kZero, std::vector<ControlInput>(static_cast<std::size_t>(cfg_.N)));
    starts.emplace_back(Start::kBrake, braking_inputs(x, cfg_.vehicle, cfg_.N));
    bool have = false;
    for (std::size_t i = 0; i < starts.size(); ++i) {
      PlanResult r = solve(x, refs, fields, cfg_, std::span<const ControlInput>(starts[i].second));
      if (i == 0) out.warm_cost = r.initial_cost;
      out.max_iterations = std::max(out.max_iterations, r.iterations);
      if (!r.ok()) {
        if (!have) out.plan = r;
        continue;
      }
      if (!have || r.cost < out.plan.cost) {
        out.plan = std::move(r);
        out.start = starts[i].first;
        have = true;
      }
    }
    if (!have) {
      out.fallback = true;
      const ControlInput brake{cfg_.vehicle.a.lo, 0.0};
      const std::vector<ControlInput> one{brake};
      out.applied = project_inputs(x, one, cfg_.vehicle).front();
      warm_.reset();
      return out;
    }
    out.applied = out.plan.u_seq.front();
    std::vector<ControlInput> next(out.plan.u_seq.begin() + 1, out.plan.u_seq.end());
    next.push_back(out.plan.u_seq.back());
    warm_ = std::move(next);
    return out;
  }

 private:
  PlannerConfig cfg_;
  std::optional<std::vector<ControlInput>> warm_;
};

inline const char* to_string(RecedingHorizonPlanner::Start s) {
  switch (s) {
    case RecedingHorizonPlanner::Start::kWarm: return "warm";
    case RecedingHorizonPlanner::Start::kZero: return "zero";
    case RecedingHorizonPlanner::Start::kBrake: return "brake";
  }
  return "unknown";
}

}  // namespace occrisk
