#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "cpf/quadrature.hpp"
#include "cpf/types.hpp"
#include "generators.hpp"

using namespace cpf;
using namespace cpf::testing;

TEST_CASE("smooth integrands match closed forms") {
  CHECK(integrate_1d([](double x) { return x; }, 0.0, 0.5).value == doctest::Approx(0.125).epsilon(1e-14));
  CHECK(integrate_1d([](double x) { return std::exp(x); }, 0.0, 1.0).value ==
        doctest::Approx(std::numbers::e - 1.0).epsilon(1e-13));
  CHECK(integrate_1d([](double x) { return std::sin(x); }, 0.0, std::numbers::pi).value ==
        doctest::Approx(2.0).epsilon(1e-13));
}

TEST_CASE("declared breaks make step functions exact") {
  auto step = [](double x) { return x < 0.3 ? 2.0 : 5.0; };
  const std::vector<double> breaks{0.3};
  const auto r = integrate_1d(step, 0.0, 1.0, breaks);
  CHECK(r.value == doctest::Approx(0.6 + 3.5).epsilon(1e-14));
}

TEST_CASE("undeclared jumps still converge by bisection") {
  auto step = [](double x) { return x <= 1.0 / 3.0 ? 1.0 : 0.0; };
  const auto r = integrate_1d(step, 0.0, 1.0, {}, 1e-9);
  CHECK(std::abs(r.value - 1.0 / 3.0) < 1e-8);
}

TEST_CASE("vector form shares the subdivision across components") {
  VectorIntegrand f = [](double x, std::span<double> out) {
    out[0] = 1.0;
    out[1] = x * x;
    out[2] = x < 0.5 ? 0.0 : 1.0;
  };
  const std::vector<double> breaks{0.5};
  const auto r = integrate_1d(f, 3, 0.0, 1.0, breaks);
  REQUIRE(r.value.size() == 3);
  CHECK(r.value[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(r.value[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(r.value[2] == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("empty interval integrates to zero") {
  CHECK(integrate_1d([](double) { return 1.0; }, 0.4, 0.4).value == 0.0);
}

TEST_CASE("property: random polynomials integrate exactly") {
  Gen gen(101);
  for (int c = 0; c < kPropertyCases; ++c) {
    const std::size_t degree = gen.index(0, 8);
    std::vector<double> coeffs(degree + 1);
    for (auto& a : coeffs) a = gen.uniform(-3.0, 3.0);
    const double lo = gen.uniform(-2.0, 1.0);
    const double hi = lo + gen.uniform(0.01, 3.0);
    auto poly = [&](double x) {
      double s = 0.0;
      for (std::size_t k = coeffs.size(); k-- > 0;) s = s * x + coeffs[k];
      return s;
    };
    double exact = 0.0;
    for (std::size_t k = 0; k < coeffs.size(); ++k) {
      const double p = static_cast<double>(k + 1);
      exact += coeffs[k] * (std::pow(hi, p) - std::pow(lo, p)) / p;
    }
    const auto r = integrate_1d(poly, lo, hi);
    CAPTURE(c);
    CHECK(std::abs(r.value - exact) <= 1e-10 * (1.0 + std::abs(exact)));
  }
}
