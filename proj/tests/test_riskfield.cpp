#include <gtest/gtest.h>

#include <random>

#include "occrisk/riskfield.hpp"
#include "oracles.hpp"

using namespace occrisk;

namespace {

const RiskKernelParams kObject{1300.0, 0.36, 3.0};
const RiskKernelParams kHidden{110.0, 0.2, 3.0};

DiscreteRiskField sampled(const GridSpec& s, auto&& f) {
  DiscreteRiskField d{s, Matrix(s.nx, s.ny)};
  for (int j = 0; j < s.ny; ++j) {
    for (int i = 0; i < s.nx; ++i) {
      const Point2 p = s.center(i, j);
      d.values(i, j) = f(p.x, p.y);
    }
  }
  return d;
}

}  // namespace

TEST(Kernel, ShapeAndValues) {
  const auto k = sample_kernel(kObject, 0.2);
  EXPECT_EQ(k.size(), 13);
  EXPECT_DOUBLE_EQ(k.values(6, 6), 1300.0);
  const auto h = sample_kernel(kHidden, 0.2);
  EXPECT_EQ(h.size(), 7);
  // sigma = one cell for the hidden class: the (sigma, 0) sample is exact.
  EXPECT_NEAR(h.values(4, 3) / h.values(3, 3), std::exp(-0.5), 1e-15);
  for (int j = 0; j < k.size(); ++j) {
    for (int i = 0; i < k.size(); ++i) {
      EXPECT_EQ(k.values(i, j), k.values(j, i));
      EXPECT_EQ(k.values(i, j), k.values(k.size() - 1 - i, j));
      EXPECT_EQ(k.values(i, j), k.values(i, k.size() - 1 - j));
    }
  }
  EXPECT_TRUE(sample_kernel({1.0, 0.05, 3.0}, 0.2).under_resolved);
  EXPECT_THROW(sample_kernel(kObject, 0.0), ContractViolation);
}

TEST(Convolve, ImpulseAndZero) {
  const GridSpec s{0.2, {1.0, 2.0}, 9, 7};
  OccupancyGrid g(s);
  const auto k = sample_kernel(kObject, 0.2);
  const auto zero = convolve(g, k);
  EXPECT_EQ(zero.values.nx, 9 + 12);
  EXPECT_EQ(zero.values.ny, 7 + 12);
  for (double v : zero.values.data) EXPECT_EQ(v, 0.0);

  g.set(0, 0);
  const auto d = convolve(g, k);
  for (int j = 0; j < 13; ++j) {
    for (int i = 0; i < 13; ++i) EXPECT_EQ(d.values(i, j), k.values(i, j));
  }
  // The peak sits over the occupied cell in world coordinates.
  const Point2 peak = d.spec.center(6, 6);
  EXPECT_NEAR(peak.x, 1.0, 1e-12);
  EXPECT_NEAR(peak.y, 2.0, 1e-12);
}

TEST(Convolve, MatchesGatherOracleAndLinearity) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> sig(0.05, 0.4);
  for (int t = 0; t < 20; ++t) {
    const auto g = oracle::random_grid(rng, 40, 0.1);
    const auto k = sample_kernel({100.0, sig(rng), 3.0}, 0.2);
    ASSERT_LE(k.size(), 13);
    const auto fast = convolve(g, k);
    const auto slow = oracle::convolve(g, k.values);
    ASSERT_EQ(fast.values.nx, slow.nx);
    for (std::size_t i = 0; i < slow.data.size(); ++i) ASSERT_NEAR(fast.values.data[i], slow.data[i], 1e-12);

    OccupancyGrid a(g.spec()), b(g.spec());
    for (const Cell c : g.cell_set()) ((c.x % 2) ? a : b).set(c.x, c.y);
    const auto da = convolve(a, k);
    const auto db = convolve(b, k);
    for (std::size_t i = 0; i < slow.data.size(); ++i) {
      ASSERT_NEAR(fast.values.data[i], da.values.data[i] + db.values.data[i], 1e-9);
      ASSERT_GE(fast.values.data[i], 0.0);
    }
  }
}

TEST(Convolve, TranslationEquivariance) {
  const GridSpec s{0.2, {0, 0}, 30, 30};
  OccupancyGrid g(s), h(s);
  g.set(5, 6);
  g.set(9, 7);
  h.set(8, 10);
  h.set(12, 11);
  const auto k = sample_kernel(kHidden, 0.2);
  const auto dg = convolve(g, k);
  const auto dh = convolve(h, k);
  for (int j = 0; j + 4 < dg.values.ny; ++j) {
    for (int i = 0; i + 3 < dg.values.nx; ++i) EXPECT_EQ(dg.values(i, j), dh.values(i + 3, j + 4));
  }
}

TEST(Spline, RequiresFourNodes) {
  const GridSpec s{0.2, {0, 0}, 3, 8};
  EXPECT_THROW(fit_spline(DiscreteRiskField{s, Matrix(3, 8)}), ContractViolation);
}

TEST(Spline, ConstantField) {
  const GridSpec s{0.2, {0, 0}, 6, 5};
  const auto f = fit_spline(DiscreteRiskField{s, Matrix(6, 5, 3.5)});
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> x(0.0, 1.0), y(0.0, 0.8);
  for (int k = 0; k < 200; ++k) {
    const auto e = f.eval(x(rng), y(rng));
    EXPECT_NEAR(e.value, 3.5, 1e-12);
    EXPECT_NEAR(e.dx, 0.0, 1e-10);
    EXPECT_NEAR(e.dy, 0.0, 1e-10);
  }
}

TEST(Spline, ReproducesBicubicPolynomials) {
  const auto poly = [](double x, double y) {
    return 1.0 + 0.5 * x - 2.0 * y + 0.3 * x * x * x - 0.7 * y * y * y + 0.2 * x * x * y * y * y - x * y;
  };
  for (int n : {4, 5, 9}) {
    const GridSpec s{0.25, {-0.3, 0.1}, n, n + 1};
    const auto f = fit_spline(sampled(s, poly));
    std::mt19937_64 rng(n);
    std::uniform_real_distribution<double> ux(-0.3, -0.3 + 0.25 * (n - 1)), uy(0.1, 0.1 + 0.25 * n);
    for (int k = 0; k < 500; ++k) {
      const double x = ux(rng), y = uy(rng);
      EXPECT_NEAR(f.eval(x, y).value, poly(x, y), 1e-8) << n;
    }
  }
}

TEST(Spline, InterpolatesNodesAndZeroOutside) {
  std::mt19937_64 rng(5);
  const auto g = oracle::random_grid(rng, 30, 0.1);
  const auto d = convolve(g, sample_kernel(kObject, 0.2));
  const auto f = fit_spline(d);
  double scale = 0.0;
  for (double v : d.values.data) scale = std::max(scale, v);
  for (int j = 0; j < d.values.ny; ++j) {
    for (int i = 0; i < d.values.nx; ++i) {
      const Point2 p = d.spec.center(i, j);
      EXPECT_NEAR(f.eval(p.x, p.y).value, d.values(i, j), 1e-9 * std::max(1.0, std::abs(d.values(i, j))));
    }
  }
  const auto far = f.eval(-100.0, 3.0);
  EXPECT_EQ(far.value, 0.0);
  EXPECT_EQ(far.dx, 0.0);
  EXPECT_EQ(far.dy, 0.0);
  EXPECT_THROW(f.eval(std::nan(""), 0.0), ContractViolation);
}

TEST(Spline, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(8);
  OccupancyGrid g({0.2, {0, 0}, 20, 16});
  for (int k = 0; k < 12; ++k) g.set(static_cast<int>(rng() % 20), static_cast<int>(rng() % 16));
  const auto f = fit_spline(convolve(g, sample_kernel(kObject, 0.2)));
  const auto ext = f.extent();
  std::uniform_real_distribution<double> ux(ext.min.x + 1e-3, ext.max.x - 1e-3), uy(ext.min.y + 1e-3, ext.max.y - 1e-3);
  const double h = 1e-4;
  int checked = 0;
  for (int k = 0; k < 1000; ++k) {
    const double x = ux(rng), y = uy(rng);
    const auto e = f.eval(x, y);
    const double fdx = (f.eval(x + h, y).value - f.eval(x - h, y).value) / (2 * h);
    const double fdy = (f.eval(x, y + h).value - f.eval(x, y - h).value) / (2 * h);
    const double scale = std::max({1.0, std::abs(e.dx), std::abs(e.dy)});
    EXPECT_NEAR(e.dx, fdx, 1e-4 * scale);
    EXPECT_NEAR(e.dy, fdy, 1e-4 * scale);
    ++checked;
  }
  EXPECT_EQ(checked, 1000);
}

TEST(Spline, FirstDerivativesContinuousAcrossKnots) {
  std::mt19937_64 rng(12);
  OccupancyGrid g({0.2, {0, 0}, 12, 12});
  for (int k = 0; k < 10; ++k) g.set(static_cast<int>(rng() % 12), static_cast<int>(rng() % 12));
  const auto d = convolve(g, sample_kernel(kHidden, 0.2));
  const auto f = fit_spline(d);
  double scale = 0.0;
  for (double v : d.values.data) scale = std::max(scale, v);
  const double eps = 1e-9;
  for (int i = 1; i + 1 < d.values.nx; ++i) {
    for (double fy : {0.13, 0.5, 0.77}) {
      const double x = d.spec.center(i, 0).x;
      const double y = d.spec.origin.y + fy * d.spec.resolution * (d.values.ny - 1);
      const auto l = f.eval(x - eps, y);
      const auto r = f.eval(x + eps, y);
      EXPECT_NEAR(l.dx, r.dx, 1e-6 * scale);
      EXPECT_NEAR(l.dy, r.dy, 1e-6 * scale);
    }
  }
}

TEST(Spline, UndershootIsSmall) {
  OccupancyGrid g({0.2, {0, 0}, 10, 10});
  g.set(4, 4);
  const auto f = fit_spline(zero_pad(convolve(g, sample_kernel(kObject, 0.2)), 3));
  const auto ext = f.extent();
  for (double x = ext.min.x; x <= ext.max.x; x += 0.037) {
    for (double y = ext.min.y; y <= ext.max.y; y += 0.041) EXPECT_GE(f.eval(x, y).value, -1e-3 * 1300.0);
  }
}

TEST(EntityFields, ComposesPerStep) {
  FieldParams fp{kObject, {200.0, 0.25, 3.0}, kHidden, {0.2, {0, 0}, 1, 1}, {0.2, {0, 0}, 1, 1}};
  const int N = 3;
  // No objects and no hidden cells: only infrastructure.
  const auto infra = risk_field(make_rectangle({0, 5}, 20, 0.2), fp.object_lattice, fp.infrastructure);
  std::vector<std::vector<Polygon2>> none(N + 1);
  const auto only_infra = build_entity_fields({infra}, none, {}, fp, N);
  ASSERT_EQ(only_infra.size(), 4u);
  for (const auto& s : only_infra) {
    EXPECT_EQ(s.infrastructure.size(), 1u);
    EXPECT_TRUE(s.objects.empty());
    EXPECT_TRUE(s.hidden.empty());
  }
  // A static object gives the same field at every step.
  std::vector<std::vector<Polygon2>> still(N + 1, {make_rectangle({3, 1}, 4.5, 1.8, 0.3)});
  const auto st = build_entity_fields({}, still, {}, fp, N);
  for (int n = 1; n <= N; ++n) {
    for (double x : {1.0, 2.5, 3.3}) EXPECT_EQ(st[n].objects[0]->eval(x, 1.2).value, st[0].objects[0]->eval(x, 1.2).value);
  }
  // Nested hidden sets give non-decreasing field mass.
  OccupancyGrid h({0.2, {0, 0}, 40, 40});
  h.set(20, 20);
  std::vector<std::vector<OccupancyGrid>> hidden;
  for (int n = 0; n <= N; ++n) {
    hidden.push_back({h});
    for (int k = -1; k <= 1; ++k) h.set(20 + n + 1, 20 + k);
  }
  const auto hs = build_entity_fields({}, none, hidden, fp, N);
  double prev = -1.0;
  for (const auto& s : hs) {
    ASSERT_EQ(s.hidden.size(), 1u);
    double mass = 0.0;
    const auto& f = *s.hidden[0];
    for (int j = 0; j < f.ny(); ++j) {
      for (int i = 0; i < f.nx(); ++i) mass += f.node_value(i, j);
    }
    EXPECT_GE(mass, prev);
    prev = mass;
  }
  std::vector<std::vector<Polygon2>> short_objects(N);
  EXPECT_THROW(build_entity_fields({}, short_objects, {}, fp, N), ContractViolation);
}
