#include <algorithm>

#include "doctest.h"
#include "helpers.hpp"

#include "cboed/error.hpp"

using namespace cboed;

namespace {

// Newton iteration on the original system, started on the positive branch.
std::array<double, 2> newton_2x2(double l1, double l2) {
  double x1 = 1.0, x2 = 0.5;
  for (int it = 0; it < 100; ++it) {
    const double f1 = l1 * x1 * x1 + x2 * x2 - 1.0;
    const double f2 = x1 * x1 - l2 * x2 * x2 - 1.0;
    const double a = 2 * l1 * x1, b = 2 * x2, c = 2 * x1, d = -2 * l2 * x2;
    const double det = a * d - b * c;
    const double dx1 = (f1 * d - b * f2) / det;
    const double dx2 = (a * f2 - c * f1) / det;
    x1 -= dx1;
    x2 -= dx2;
    if (std::abs(dx1) + std::abs(dx2) < 1e-15) break;
  }
  return {std::abs(x2), std::abs(x1)};
}

}  // namespace

TEST_CASE("2x2 closed form matches a root finder") {
  const Nonlinear2x2 model;
  CHECK(model.space().bounds()[1].lo == doctest::Approx(1 - 4.5 * std::sqrt(0.1)));
  const auto a = model.evaluate(std::vector<double>{0.99, 0.0});
  CHECK(a[0] == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(a[1] == doctest::Approx(1.0).epsilon(1e-14));
  const auto b = model.evaluate(std::vector<double>{0.9, 1.0});
  CHECK(b[0] == doctest::Approx(0.22942).epsilon(1e-5));
  CHECK(b[1] == doctest::Approx(1.02598).epsilon(1e-5));

  const SampleSet s = testing::draw(model, 2000, 1);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double l1 = s.params()(i, 0), l2 = s.params()(i, 1);
    const double x2 = s.qoi()(i, 0), x1 = s.qoi()(i, 1);
    CHECK(x1 >= 0.0);
    CHECK(x2 >= 0.0);
    CHECK(std::abs(l1 * x1 * x1 + x2 * x2 - 1.0) <= 1e-12);
    CHECK(std::abs(x1 * x1 - l2 * x2 * x2 - 1.0) <= 1e-12);
    if (i % 50 == 0) {
      const auto ref = newton_2x2(l1, l2);
      CHECK(x2 == doctest::Approx(ref[0]).epsilon(1e-10));
      CHECK(x1 == doctest::Approx(ref[1]).epsilon(1e-10));
    }
  }
}

TEST_CASE("2x2 domain checks") {
  const Nonlinear2x2 model;
  try {
    model.evaluate(std::vector<double>{1.2, 0.0});
    FAIL("expected OutOfDomain");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kOutOfDomain);
  }
  CHECK_THROWS_AS(model.evaluate(std::vector<double>{0.9}), Error);
}

TEST_CASE("2x2 QoI ranges cover the observed means") {
  const Nonlinear2x2 model;
  const SampleSet s = testing::draw(model, 100000, 2);
  const auto q1 = s.qoi().column(0);
  const auto q2 = s.qoi().column(1);
  const auto [lo1, hi1] = std::minmax_element(q1.begin(), q1.end());
  const auto [lo2, hi2] = std::minmax_element(q2.begin(), q2.end());
  CHECK(*lo1 < 0.3);
  CHECK(*hi1 > 0.3);
  CHECK(*lo2 < 1.015);
  CHECK(*hi2 > 1.015);
  CHECK(*lo2 < 0.982);
  CHECK(*hi2 > 0.982);
}

TEST_CASE("convection-diffusion boundary values and positivity") {
  for (std::size_t n : {8u, 25u, 40u}) {
    ConvDiffParams p;
    p.nx = p.ny = n;
    const ConvDiffField f = convdiff_unit_solve(p);
    CHECK(f.values.size() == (n + 1) * (n + 1));
    for (std::size_t k = 0; k <= n; ++k) {
      CHECK(f.at(0, k) == 0.0);
      CHECK(f.at(k, 0) == 0.0);
    }
    const double top = *std::max_element(f.values.begin(), f.values.end());
    CHECK(top > 0.0);
    CHECK(*std::min_element(f.values.begin(), f.values.end()) >= -1e-12 * top);
    // Zero-gradient outflow edges.
    for (std::size_t k = 1; k < n; ++k) {
      CHECK(f.at(n, k) == doctest::Approx(f.at(n - 1, k)).epsilon(1e-10));
      CHECK(f.at(k, n) == doctest::Approx(f.at(k, n - 1)).epsilon(1e-10));
    }
  }
}

TEST_CASE("convection-diffusion rejects coarse grids") {
  ConvDiffParams p;
  p.nx = 7;
  CHECK_THROWS_AS(convdiff_unit_solve(p), Error);
}

TEST_CASE("convection-diffusion measurements") {
  const ConvDiffAmplitude model(ConvDiffParams{}, {{0.55, 0.55}, {0.05, 0.95}, {0.0, 0.4}, {0.7, 0.0}});
  CHECK(model.qoi_count() == 4);
  CHECK(model.qoi_coords(1) == std::vector<double>{0.05, 0.95});
  for (double a : {50.0, 73.0, 150.0}) {
    CHECK(model.measure(a, {0.0, 0.4}) == 0.0);
    CHECK(model.measure(a, {0.7, 0.0}) == 0.0);
    if (a <= 75.0) {
      CHECK(model.measure(2 * a, {0.31, 0.62}) == doctest::Approx(2 * model.measure(a, {0.31, 0.62})).epsilon(1e-14));
    }
    CHECK(model.measure(a, {0.55, 0.55}) > model.measure(a, {0.05, 0.95}));
    const auto q = model.evaluate(std::vector<double>{a});
    CHECK(q[0] == doctest::Approx(model.measure(a, {0.55, 0.55})).epsilon(1e-15));
  }
  try {
    model.measure(100.0, {1.2, 0.5});
    FAIL("expected OutOfDomain");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kOutOfDomain);
  }
  CHECK_THROWS_AS(model.measure(10.0, {0.5, 0.5}), Error);
}

TEST_CASE("convection-diffusion: full QoI matrix takes one solve") {
  const auto before = ConvDiffAmplitude::solve_count();
  std::vector<std::array<double, 2>> sensors;
  for (int i = 0; i < 30; ++i) sensors.push_back({0.03 * i + 0.05, 0.5});
  const ConvDiffAmplitude model(ConvDiffParams{}, sensors);
  const SampleSet s = testing::draw(model, 5000, 3, Parallelism{4});
  CHECK(ConvDiffAmplitude::solve_count() - before == 1);
  CHECK(s.qoi().cols() == 30);
}

TEST_CASE("convection-diffusion solution peaks downstream of the source") {
  const ConvDiffField f = convdiff_unit_solve(ConvDiffParams{});
  std::size_t best = 0;
  for (std::size_t k = 1; k < f.values.size(); ++k) {
    if (f.values[k] > f.values[best]) best = k;
  }
  const double x = static_cast<double>(best % 26) / 25.0;
  const double y = static_cast<double>(best / 26) / 25.0;
  CHECK(x >= 0.5);
  CHECK(y >= 0.5);
  CHECK(std::hypot(x - 0.558, y - 0.571) < 0.15);
}

TEST_CASE("convection-diffusion sensor value converges under refinement") {
  // First-order upwinding: successive changes shrink roughly by half.
  auto value = [](std::size_t n) {
    ConvDiffParams p;
    p.nx = p.ny = n;
    return convdiff_unit_solve(p).interpolate(0.6, 0.6);
  };
  const double v25 = value(25), v50 = value(50), v100 = value(100);
  const double d1 = std::abs(v50 - v25), d2 = std::abs(v100 - v50);
  CHECK(d2 < 0.7 * d1);
  CHECK(std::abs(v100 - v50) / v100 < 0.10);
}

// The 25^2 grid is too coarse for first-order upwinding to hold the sensor
// value at (0.6, 0.6) within 10% of the 50^2 value (measured change ~13%).
TEST_CASE("convection-diffusion sensor value within 10% between 25^2 and 50^2" * doctest::should_fail()) {
  ConvDiffParams coarse, fine;
  fine.nx = fine.ny = 50;
  const double a = convdiff_unit_solve(coarse).interpolate(0.6, 0.6);
  const double b = convdiff_unit_solve(fine).interpolate(0.6, 0.6);
  CHECK(std::abs(a - b) / std::abs(b) < 0.10);
}

TEST_CASE("linear models") {
  SUBCASE("zero weights give the offset") {
    const LinearModel m(ParameterSpace({{-1.0, 1.0}, {-1.0, 1.0}}), Matrix(2, 2, 0.0), {1.5, -2.0});
    CHECK(m.evaluate(std::vector<double>{0.3, -0.7}) == std::vector<double>{1.5, -2.0});
  }
  SUBCASE("unit vector picks a column") {
    const LinearModel m = linear_highdim(100, 3, 5);
    std::vector<double> e1(100, 0.0);
    e1[0] = 1.0;
    const auto q = m.evaluate(e1);
    for (std::size_t k = 0; k < 3; ++k) CHECK(q[k] == m.weights()(k, 0));
  }
  SUBCASE("weights are seeded and bounded") {
    const LinearModel a = linear_highdim(100, 2, 5);
    const LinearModel b = linear_highdim(100, 2, 5);
    const LinearModel c = linear_highdim(100, 2, 6);
    CHECK(a.weights() == b.weights());
    CHECK_FALSE(a.weights() == c.weights());
    for (double w : a.weights().data()) {
      CHECK(w >= -1.0);
      CHECK(w <= 1.0);
    }
    CHECK(a.space().dims() == 100);
    CHECK(a.space().bounds()[7] == Interval{-1.0, 1.0});
  }
  SUBCASE("dimension checks") {
    const LinearModel m = linear_highdim(10, 1, 0);
    try {
      m.evaluate(std::vector<double>(9, 0.0));
      FAIL("expected DimensionMismatch");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kDimensionMismatch);
    }
    CHECK_THROWS_AS(LinearModel(ParameterSpace({{0.0, 1.0}}), Matrix(1, 2, 1.0), {}), Error);
    CHECK_THROWS_AS(LinearModel(ParameterSpace({{0.0, 1.0}}), Matrix(1, 1, 1.0), {1.0, 2.0}), Error);
  }
}
