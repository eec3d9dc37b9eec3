#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "cpf/integrate.hpp"
#include "generators.hpp"

using namespace cpf;
using namespace cpf::testing;

namespace {

IntegrationRegion box_region(const Box& box) {
  IntegrationRegion r;
  r.pieces.push_back({box, 1.0});
  r.bounding = box;
  return r;
}

IntegrationRegion disk_region() {
  Box b{{-1.0, -1.0}, {1.0, 1.0}};
  IntegrationRegion r = box_region(b);
  r.member = [](std::span<const double> x) { return x[0] * x[0] + x[1] * x[1] <= 1.0; };
  return r;
}

Integrand constant_one() {
  return [](std::span<const double>, std::span<double> out) { out[0] = 1.0; };
}

}  // namespace

TEST_CASE("unit square of ones integrates to one") {
  const auto r = integrate_over_region(constant_one(), 1, 1, box_region(Box{{0, 0}, {1, 1}}));
  CHECK(r.value(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.qmc_value(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("linear integrand on half interval") {
  Integrand f = [](std::span<const double> x, std::span<double> out) { out[0] = x[0]; };
  const auto r = integrate_over_region(f, 1, 1, box_region(Box{{0}, {0.5}}));
  CHECK(r.value(0, 0) == doctest::Approx(0.125).epsilon(1e-10));
}

TEST_CASE("unit disk area is pi within tolerance") {
  IntegrationOptions opt;
  opt.tol = 1e-4;
  const auto r = integrate_over_region(constant_one(), 1, 1, disk_region(), opt);
  CHECK(std::abs(r.value(0, 0) - std::numbers::pi) < 1e-4 + r.error);
  CHECK(r.error <= opt.tol);
  CHECK(std::abs(r.qmc_value(0, 0) - std::numbers::pi) < 5.0 * r.qmc_error + 1e-6);
}

TEST_CASE("matrix-valued integrands fill column-major") {
  Integrand f = [](std::span<const double> x, std::span<double> out) {
    out[0] = 1.0;   // (0,0)
    out[1] = x[0];  // (1,0)
    out[2] = x[1];  // (0,1)
    out[3] = x[0] * x[1];
  };
  const auto r = integrate_over_region(f, 2, 2, box_region(Box{{0, 0}, {1, 2}}));
  CHECK(r.value(0, 0) == doctest::Approx(2.0));
  CHECK(r.value(1, 0) == doctest::Approx(1.0));
  CHECK(r.value(0, 1) == doctest::Approx(2.0));
  CHECK(r.value(1, 1) == doctest::Approx(1.0));
}

TEST_CASE("graph regions use nested quadrature") {
  IntegrationRegion r = box_region(Box{{0, 0}, {1, 2}});
  r.ceiling = [](double x) { return 1.0 + x; };
  r.member = [](std::span<const double> x) { return x[1] <= 1.0 + x[0]; };
  Integrand f = [](std::span<const double> x, std::span<double> out) {
    out[0] = 1.0;
    out[1] = x[1];
  };
  const auto e = integrate_over_region(f, 2, 1, r);
  CHECK(e.levels == 0);
  CHECK(e.value(0, 0) == doctest::Approx(1.5).epsilon(1e-10));
  CHECK(e.value(1, 0) == doctest::Approx(7.0 / 6.0).epsilon(1e-10));
  CHECK(std::abs(e.qmc_value(0, 0) - 1.5) < 5.0 * e.qmc_error + 1e-6);
}

TEST_CASE("weighted pieces add up") {
  IntegrationRegion r;
  r.pieces.push_back({Box{{0}, {1}}, 2.0});
  r.pieces.push_back({Box{{1}, {3}}, 0.5});
  r.bounding = Box{{0}, {3}};
  r.qmc_weight = [](std::span<const double> x, std::span<const double>) { return x[0] <= 1.0 ? 2.0 : 0.5; };
  const auto e = integrate_over_region(constant_one(), 1, 1, r);
  CHECK(e.value(0, 0) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(std::abs(e.qmc_value(0, 0) - 3.0) < 5.0 * e.qmc_error + 1e-3);
}

TEST_CASE("non-convergence is reported") {
  IntegrationOptions opt;
  opt.tol = 1e-13;
  opt.max_refinements = 1;
  opt.cross_check = false;
  CHECK_THROWS_AS(integrate_over_region(constant_one(), 1, 1, disk_region(), opt), NumericalError);
}

TEST_CASE("invalid shapes are rejected") {
  CHECK_THROWS_AS(integrate_over_region(constant_one(), 0, 1, box_region(Box{{0}, {1}})), InvalidArgument);
}

TEST_CASE("halton points lie in the unit cube and start from the radical inverse") {
  std::vector<double> p(3);
  halton_point(1, p);
  CHECK(p[0] == doctest::Approx(0.5));
  CHECK(p[1] == doctest::Approx(1.0 / 3.0));
  CHECK(p[2] == doctest::Approx(0.2));
  for (std::uint64_t i = 0; i < 1000; ++i) {
    halton_point(i, p);
    for (double x : p) {
      REQUIRE(x >= 0.0);
      REQUIRE(x < 1.0);
    }
  }
}

TEST_CASE("property: affine integrands over random boxes match closed form") {
  Gen gen(202);
  for (int c = 0; c < 40; ++c) {
    const std::size_t dim = gen.index(1, 3);
    const Box b = gen.box(dim);
    std::vector<double> slope(dim);
    for (auto& s : slope) s = gen.uniform(-2.0, 2.0);
    const double intercept = gen.uniform(-1.0, 1.0);
    Integrand f = [&](std::span<const double> x, std::span<double> out) {
      double s = intercept;
      for (std::size_t k = 0; k < x.size(); ++k) s += slope[k] * x[k];
      out[0] = s;
    };
    double vol = 1.0;
    for (std::size_t k = 0; k < dim; ++k) vol *= b.upper[k] - b.lower[k];
    double exact = intercept * vol;
    for (std::size_t k = 0; k < dim; ++k) exact += slope[k] * vol * 0.5 * (b.lower[k] + b.upper[k]);
    IntegrationOptions opt;
    opt.cross_check = false;
    const auto r = integrate_over_region(f, 1, 1, box_region(b), opt);
    CAPTURE(c);
    CHECK(std::abs(r.value(0, 0) - exact) < 1e-9 * (1.0 + std::abs(exact)));
  }
}

TEST_CASE("property: half-plane cuts of the square match the polygon area") {
  Gen gen(203);
  for (int c = 0; c < 30; ++c) {
    // Region {x in [0,1]^2 : x2 <= a + b x1} with the line crossing the square.
    const double a = gen.uniform(0.1, 0.9);
    const double b = gen.uniform(-0.09, 0.09);
    IntegrationRegion r = box_region(Box{{0, 0}, {1, 1}});
    r.member = [a, b](std::span<const double> x) { return x[1] <= a + b * x[0]; };
    IntegrationOptions opt;
    opt.tol = 1e-4;
    const auto e = integrate_over_region(constant_one(), 1, 1, r, opt);
    CAPTURE(c);
    CHECK(std::abs(e.value(0, 0) - (a + 0.5 * b)) < 1e-4 + e.error);
  }
}
