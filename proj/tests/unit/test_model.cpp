#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "cpf/model.hpp"
#include "generators.hpp"

using namespace cpf;
using namespace cpf::testing;

namespace {

bool contains_v(const DomainRegion& d, std::vector<double> v) { return contains(d, v); }

}  // namespace

TEST_CASE("measures of the basic regions") {
  CHECK(measure(unit_box(2)) == 1.0);
  CHECK(measure(increasing_rate_region()) == doctest::Approx(1.5).epsilon(1e-12));
  const auto disk = DomainRegion::indicator(Box{{-1, -1}, {1, 1}}, Ball{{0, 0}, 1.0});
  CHECK(std::abs(disk.measure() - std::numbers::pi) <= 1e-4);
  CHECK(disk.measure_error() <= 1e-4);
}

TEST_CASE("contains honours the closed boundary") {
  CHECK(contains_v(unit_box(2), {0.5, 0.5}));
  CHECK(contains_v(unit_box(2), {1.0, 0.0}));
  CHECK_FALSE(contains_v(unit_box(2), {1.0 + 1e-12, 0.5}));
  const auto uc = increasing_rate_region();
  CHECK_FALSE(contains_v(uc, {0.5, 1.6}));
  CHECK(contains_v(uc, {0.5, 1.5}));
  CHECK_FALSE(contains_v(uc, {0.5, -0.01}));
  CHECK_THROWS_AS(contains_v(uc, {0.5}), InvalidArgument);
}

TEST_CASE("region construction rejects invalid input") {
  CHECK_THROWS_AS(DomainRegion::box({0, 0}, {1, 0}), InvalidArgument);
  CHECK_THROWS_AS(DomainRegion::box({0}, {1, 1}), InvalidArgument);
  CHECK_THROWS_AS(DomainRegion::under_curve(1.0, ScalarFunction(AffineFn{-1.0, 0.5})), InvalidArgument);
  CHECK_THROWS_AS(DomainRegion::under_curve(0.0, ScalarFunction(ConstantFn{1.0})), InvalidArgument);
  // Supplied bound below the true supremum of 2.
  CHECK_THROWS_AS(DomainRegion::under_curve(1.0, ScalarFunction(AffineFn{1.0, 1.0}), 1.5), InvalidArgument);
}

TEST_CASE("measure hints are cross-checked then used exactly") {
  const auto d = DomainRegion::box({0}, {2}, 2.0 * (1 + 1e-8));
  CHECK(d.measure() == 2.0 * (1 + 1e-8));
  CHECK_THROWS_AS(DomainRegion::box({0}, {2}, 2.1), InvalidArgument);
}

TEST_CASE("conditional moments") {
  Matrix s(2, 2);
  s << 4, 2, 2, 3;
  const MarkModel affine(MeanFunction(1, AffineMean{vec({0.0}), Matrix::Ones(1, 1)}),
                         CovarianceFunction(ConstantCov{Matrix::Identity(1, 1)}), NoiseFamily::gaussian);
  const std::vector<double> v{0.3};
  CHECK(cond_moments(affine, v).mean(0) == doctest::Approx(0.3));

  const MarkModel zero(MeanFunction(2, ZeroMean{}), CovarianceFunction(ConstantCov{s}), NoiseFamily::gaussian);
  const std::vector<double> w{0.1, 0.9};
  const auto m = cond_moments(zero, w);
  CHECK(m.mean.isZero());
  CHECK(m.covariance == s);
}

TEST_CASE("indefinite or asymmetric covariance families are rejected") {
  Matrix bad(2, 2);
  bad << 1, 2, 2, 1;
  CHECK_THROWS_AS(CovarianceFunction(ConstantCov{bad}), InvalidArgument);
  Matrix asym(2, 2);
  asym << 1, 0.5, 0.4, 1;
  CHECK_THROWS_AS(CovarianceFunction(ConstantCov{asym}), InvalidArgument);
}

TEST_CASE("factorize known cases") {
  CHECK(factorize(Matrix::Identity(3, 3)).isApprox(Matrix::Identity(3, 3)));
  Matrix s(2, 2);
  s << 4, 2, 2, 3;
  Matrix expected(2, 2);
  expected << 2, 0, 1, std::sqrt(2.0);
  const Matrix l = factorize(s);
  CHECK((l - expected).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((l * l.transpose() - s).cwiseAbs().maxCoeff() < 1e-12);
  Matrix bad(2, 2);
  bad << 1, 2, 2, 1;
  CHECK_THROWS_AS(factorize(bad), InvalidArgument);
  CHECK(factorize(Matrix::Zero(2, 2)).isZero());
}

TEST_CASE("property: factorize reproduces random PSD matrices, including singular ones") {
  Gen gen(301);
  for (int c = 0; c < kPropertyCases; ++c) {
    const std::size_t n = gen.index(1, 5);
    const std::size_t rank = gen.index(1, n);
    const Matrix cov = gen.psd_matrix(n, rank);
    const Matrix l = factorize(cov);
    CAPTURE(c);
    CHECK(l.isLowerTriangular());
    CHECK((l * l.transpose() - cov).cwiseAbs().maxCoeff() <= 1e-10 * (1.0 + cov.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("property: box measure is the exact side-length product") {
  Gen gen(302);
  for (int c = 0; c < kPropertyCases; ++c) {
    const Box b = gen.box(gen.index(1, 4));
    double vol = 1.0;
    for (std::size_t k = 0; k < b.dim(); ++k) vol *= b.upper[k] - b.lower[k];
    CHECK(measure(DomainRegion::box(b.lower, b.upper)) == vol);
  }
}

TEST_CASE("property: under-curve measure equals the integral of the rate") {
  Gen gen(303);
  for (int c = 0; c < 50; ++c) {
    const double T = gen.uniform(0.2, 3.0);
    const double a = gen.uniform(0.2, 2.0);
    const double b = gen.uniform(0.0, 1.0);
    const double q = gen.uniform(0.0, 1.0);
    const auto d = DomainRegion::under_curve(T, ScalarFunction(PolynomialFn{{a, b, q}}));
    const double exact = a * T + b * T * T / 2.0 + q * T * T * T / 3.0;
    CAPTURE(c);
    CHECK(std::abs(d.measure() - exact) <= d.measure_error() + 1e-12 * exact);
  }
}

TEST_CASE("property: members of a region have valid conditional moments") {
  Gen gen(304);
  const auto disk = DomainRegion::indicator(Box{{0, 0}, {1, 1}}, Ball{{0.5, 0.5}, 0.5});
  const MarkModel marks(MeanFunction(1, PolynomialMean{0, {vec({0.1}), vec({1.0}), vec({-2.0})}}),
                        CovarianceFunction(ScaledCov{1, ScalarFunction(AffineFn{1.0, 1.0}), Matrix::Ones(1, 1)}),
                        NoiseFamily::uniform);
  for (int c = 0; c < kPropertyCases; ++c) {
    const auto v = gen.point_in(disk.bounding_box());
    if (!disk.contains(v)) continue;
    const auto m = cond_moments(marks, v);
    CHECK(m.covariance(0, 0) >= 0.0);
    CHECK(m.mean(0) == doctest::Approx(0.1 + v[0] - 2.0 * v[0] * v[0]));
  }
}

TEST_CASE("scalar function families") {
  const ScalarFunction pw(PiecewiseConstantFn{{0.5}, {2.0, 1.0}});
  CHECK(pw(0.49) == 2.0);
  CHECK(pw(0.5) == 1.0);
  CHECK(pw(1.0) == 1.0);
  CHECK(pw.has_flat_pieces(0.0, 1.0));
  CHECK(pw.upper_bound(0.0, 1.0) >= 2.0);
  const ScalarFunction lin(AffineFn{1.0, 1.0});
  CHECK_FALSE(lin.has_flat_pieces(0.0, 1.0));
  CHECK(lin.upper_bound(0.0, 1.0) >= 2.0);
  CHECK(lin.lower_bound(0.0, 1.0) <= 1.0);
  const ScalarFunction poly(PolynomialFn{{0.0, 0.0, 1.0}});
  CHECK(poly(3.0) == 9.0);
  CHECK(poly.upper_bound(-1.0, 2.0) >= 4.0);
  CHECK(poly.lower_bound(-1.0, 2.0) <= 0.0);
}

TEST_CASE("dual-ordering models need a mark mean constant in the height coordinate") {
  const MarkModel height_mean(MeanFunction(1, AffineMean{vec({0.0}), Matrix{{0.0, 1.0}}}),
                              CovarianceFunction(ConstantCov{Matrix::Ones(1, 1)}), NoiseFamily::gaussian);
  const ModelSpec s(increasing_rate_region(), height_mean, 100.0);
  CHECK_FALSE(s.supports_time_intensity());
  const ModelSpec t(increasing_rate_region(), zero_mean_marks(), 100.0);
  CHECK(t.supports_time_intensity());
}

TEST_CASE("model spec validation") {
  CHECK_THROWS_AS(ModelSpec(unit_box(1), zero_mean_marks(), 0.0), InvalidArgument);
  // Mean reads coordinate 2 of a one-dimensional domain.
  const MarkModel reads_y(MeanFunction(1, PolynomialMean{1, {vec({1.0})}}),
                          CovarianceFunction(ConstantCov{Matrix::Ones(1, 1)}), NoiseFamily::gaussian);
  CHECK_THROWS_AS(ModelSpec(unit_box(1), reads_y, 10.0), InvalidArgument);
  const ModelSpec ok(unit_box(1), zero_mean_marks(), 10.0);
  CHECK(ok.with_intensity(20.0).intensity == 20.0);
}
