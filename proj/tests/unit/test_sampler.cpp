#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "cpf/sampler.hpp"
#include "generators.hpp"
#include "stats.hpp"

using namespace cpf;
using namespace cpf::testing;

TEST_CASE("poisson counts have equal mean and variance") {
  RngStream rng(1, 0, Purpose::count);
  std::vector<double> k;
  for (int i = 0; i < 10000; ++i) k.push_back(static_cast<double>(sample_count(1000.0, 1.0, rng)));
  const double m = mean_of(k);
  CHECK(m >= 998.7);
  CHECK(m <= 1001.3);
  CHECK(std::abs(variance_of(k) / 1000.0 - 1.0) < 0.05);
}

TEST_CASE("sample_count preconditions and determinism") {
  RngStream rng(1, 0, Purpose::count);
  CHECK_THROWS_AS(sample_count(0.0, 1.0, rng), InvalidArgument);
  CHECK_THROWS_AS(sample_count(1.0, 0.0, rng), InvalidArgument);
  RngStream a(5, 9, Purpose::count);
  RngStream b(5, 9, Purpose::count);
  CHECK(sample_count(300.0, 2.0, a) == sample_count(300.0, 2.0, b));
}

TEST_CASE("uniform points in the unit cube") {
  RngStream rng(2, 0, Purpose::points);
  const auto pts = sample_points(unit_box(3), 100000, rng);
  REQUIRE(pts.rows() == 100000);
  for (Eigen::Index k = 0; k < 3; ++k) {
    std::vector<double> col(static_cast<std::size_t>(pts.rows()));
    for (Eigen::Index i = 0; i < pts.rows(); ++i) col[static_cast<std::size_t>(i)] = pts(i, k);
    CAPTURE(k);
    CHECK(std::abs(mean_of(col) - 0.5) < 0.004);
    CHECK(ks_statistic(col, [](double x) { return x; }) < ks_critical_001(col.size()));
  }
}

TEST_CASE("rejection acceptance rate under the increasing rate") {
  RngStream rng(3, 0, Purpose::points);
  RejectionStats stats;
  const auto region = increasing_rate_region();
  const auto pts = sample_points(region, 50000, rng, &stats);
  CHECK(std::abs(stats.acceptance_rate() - 0.75) < 0.01);
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    const std::vector<double> v{pts(i, 0), pts(i, 1)};
    REQUIRE(region.contains(v));
  }
}

TEST_CASE("empty requests and degenerate regions") {
  RngStream rng(4, 0, Purpose::points);
  CHECK(sample_points(unit_box(2), 0, rng).rows() == 0);
  const auto thin = DomainRegion::under_curve(1.0, ScalarFunction(ConstantFn{1.0}), 1e7);
  CHECK_THROWS_AS(sample_points(thin, 1, rng), InvalidArgument);
}

TEST_CASE("zero noise gives the mean exactly") {
  const MarkModel marks(MeanFunction(1, AffineMean{vec({0.25}), Matrix{{2.0, -1.0}}}),
                        CovarianceFunction(ConstantCov{Matrix::Zero(1, 1)}), NoiseFamily::gaussian);
  RngStream prng(5, 0, Purpose::points);
  RngStream mrng(5, 0, Purpose::marks);
  const auto pts = sample_points(unit_box(2), 100, prng);
  const auto y = sample_marks(marks, pts, mrng);
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    CHECK(y(i, 0) == 0.25 + 2.0 * pts(i, 0) - pts(i, 1));
  }
}

TEST_CASE("mark covariance matches sigma squared") {
  Matrix s(2, 2);
  s << 4, 2, 2, 3;
  for (auto noise : {NoiseFamily::gaussian, NoiseFamily::rademacher, NoiseFamily::uniform}) {
    const MarkModel marks(MeanFunction(2, ZeroMean{}), CovarianceFunction(ConstantCov{s}), noise);
    RngStream prng(6, 0, Purpose::points);
    RngStream mrng(6, static_cast<std::uint64_t>(noise), Purpose::marks);
    const auto pts = sample_points(unit_box(1), 100000, prng);
    const auto y = sample_marks(marks, pts, mrng);
    const Matrix ym = y;
    const Eigen::RowVectorXd mean = ym.colwise().mean();
    const Matrix centered = ym.rowwise() - mean;
    const Matrix cov = centered.transpose() * centered / static_cast<double>(ym.rows() - 1);
    CAPTURE(to_string(noise));
    CHECK((cov - s).norm() / s.norm() < 0.02);
  }
}

TEST_CASE("rademacher marks are plus or minus one") {
  const MarkModel marks = zero_mean_marks(1.0, NoiseFamily::rademacher);
  RngStream prng(7, 0, Purpose::points);
  RngStream mrng(7, 0, Purpose::marks);
  const auto y = sample_marks(marks, sample_points(unit_box(1), 10000, prng), mrng);
  int plus = 0;
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    REQUIRE(std::abs(y(i, 0)) == 1.0);
    plus += y(i, 0) > 0 ? 1 : 0;
  }
  CHECK(std::abs(plus - 5000) < 4 * 50);
}

TEST_CASE("sample_field: membership, count law and determinism") {
  const ModelSpec spec(increasing_rate_region(), zero_mean_marks(), 500.0 / 1.5);
  std::vector<double> counts;
  for (std::uint64_t r = 0; r < 1000; ++r) {
    const auto s = sample_field(spec, 8, r);
    counts.push_back(static_cast<double>(s.count()));
    REQUIRE(s.marks.rows() == s.points.rows());
    for (Eigen::Index i = 0; i < s.points.rows(); ++i) {
      const std::vector<double> v{s.points(i, 0), s.points(i, 1)};
      REQUIRE(spec.domain.contains(v));
    }
  }
  CHECK(std::abs(mean_of(counts) - 500.0) < 3.0);
  CHECK(sample_field(spec, 8, 17) == sample_field(spec, 8, 17));
  CHECK_FALSE(sample_field(spec, 8, 17) == sample_field(spec, 8, 18));
}

TEST_CASE("thinning route stays inside the region and needs an under-curve domain") {
  const ModelSpec spec(increasing_rate_region(), zero_mean_marks(), 300.0);
  const auto s = sample_field(spec, 9, 0, FieldRoute::thinning);
  for (Eigen::Index i = 0; i < s.points.rows(); ++i) {
    const std::vector<double> v{s.points(i, 0), s.points(i, 1)};
    REQUIRE(spec.domain.contains(v));
  }
  const ModelSpec box(unit_box(2), zero_mean_marks(), 10.0);
  CHECK_THROWS_AS(sample_field(box, 9, 0, FieldRoute::thinning), InvalidArgument);
}

TEST_CASE("constant-rate arrivals are exponential") {
  RngStream rng(10, 0, Purpose::times);
  const ScalarFunction c(ConstantFn{2.0});
  const auto times = sample_inhomogeneous_times(c, 5.0, 2.0, 1000.0, rng);
  REQUIRE(times.size() > 9000);
  std::vector<double> gaps;
  double prev = 0.0;
  for (double t : times) {
    gaps.push_back(t - prev);
    prev = t;
  }
  CHECK(ks_statistic(gaps, [](double x) { return 1.0 - std::exp(-2000.0 * x); }) < ks_critical_001(gaps.size()));
}

TEST_CASE("thinning at the bound accepts every candidate") {
  const ScalarFunction c(ConstantFn{1.5});
  RngStream rng(11, 0, Purpose::times);
  const auto times = sample_inhomogeneous_times(c, 2.0, 1.5, 100.0, rng);
  // Replaying the candidate stream (one exponential gap and one acceptance
  // uniform per candidate) recovers every candidate time.
  RngStream replay(11, 0, Purpose::times);
  std::vector<double> candidates;
  for (double t = replay.exponential(150.0); t <= 2.0; t += replay.exponential(150.0)) {
    candidates.push_back(t);
    replay.uniform();
  }
  CHECK(times == candidates);
}

TEST_CASE("increasing-rate counts have mean nu Lambda(T)") {
  const ScalarFunction rate(AffineFn{1.0, 1.0});
  std::vector<double> counts;
  for (std::uint64_t r = 0; r < 200; ++r) {
    RngStream rng(12, r, Purpose::times);
    const auto t = sample_inhomogeneous_times(rate, 1.0, 2.0, 1000.0, rng);
    REQUIRE(std::is_sorted(t.begin(), t.end()));
    counts.push_back(static_cast<double>(t.size()));
  }
  CHECK(std::abs(mean_of(counts) - 1500.0) < 4.0 * std::sqrt(1500.0 / 200.0));
}

TEST_CASE("an understated rate bound is detected") {
  RngStream rng(13, 0, Purpose::times);
  CHECK_THROWS_AS(sample_inhomogeneous_times(ScalarFunction(AffineFn{1.0, 1.0}), 1.0, 1.2, 500.0, rng),
                  InvalidArgument);
}

TEST_CASE("lifted points sit under the curve and project back exactly") {
  const ScalarFunction rate(AffineFn{1.0, 1.0});
  RngStream trng(14, 0, Purpose::times);
  RngStream lrng(14, 0, Purpose::lift);
  const auto times = sample_inhomogeneous_times(rate, 1.0, 2.0, 2000.0, trng);
  const auto pts = lift_times_to_field(times, rate, lrng);
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    REQUIRE(pts(i, 1) >= 0.0);
    REQUIRE(pts(i, 1) <= rate(pts(i, 0)));
  }
  CHECK(project_field_to_times(pts) == times);
}

TEST_CASE("project_field_to_times sorts first coordinates") {
  CHECK(project_field_to_times(RowMatrix(0, 2)).empty());
  RowMatrix p(3, 2);
  p << 0.7, 0.0, 0.1, 0.5, 0.4, 0.2;
  CHECK(project_field_to_times(p) == std::vector<double>{0.1, 0.4, 0.7});
}

TEST_CASE("lifted field counts in sub-boxes have mean nu times area") {
  const ScalarFunction rate(AffineFn{1.0, 1.0});
  std::vector<double> left;
  std::vector<double> right;
  for (std::uint64_t r = 0; r < 200; ++r) {
    RngStream trng(15, r, Purpose::times);
    RngStream lrng(15, r, Purpose::lift);
    const auto pts = lift_times_to_field(sample_inhomogeneous_times(rate, 1.0, 2.0, 2000.0, trng), rate, lrng);
    double a = 0.0;
    double b = 0.0;
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
      if (pts(i, 1) <= 1.0) (pts(i, 0) <= 0.5 ? a : b) += 1.0;
    }
    left.push_back(a);
    right.push_back(b);
  }
  // Both boxes lie entirely under the curve, so each has area 0.5.
  for (const auto* c : {&left, &right}) {
    CHECK(std::abs(mean_of(*c) - 1000.0) < 4.0 * std::sqrt(variance_of(*c) / 200.0));
  }
}

TEST_CASE("projected counts on disjoint intervals are Poisson") {
  const ModelSpec spec(increasing_rate_region(), zero_mean_marks(), 400.0);
  std::vector<double> first;
  std::vector<double> second;
  for (std::uint64_t r = 0; r < 500; ++r) {
    const auto times = project_field_to_times(sample_field(spec, 16, r).points);
    double a = 0.0;
    double b = 0.0;
    for (double t : times) (t <= 0.3 ? a : b) += 1.0;
    first.push_back(a);
    second.push_back(b);
  }
  const double m1 = 400.0 * (0.3 + 0.045);  // nu * int_0^0.3 (1 + s) ds
  const double m2 = 400.0 * 1.5 - m1;
  CHECK(std::abs(mean_of(first) - m1) < 4.0 * std::sqrt(m1 / 500.0));
  CHECK(std::abs(mean_of(second) - m2) < 4.0 * std::sqrt(m2 / 500.0));
  // Var of the sample variance is about (mu + 2 mu^2) / n.
  CHECK(std::abs(variance_of(first) - m1) < 4.0 * std::sqrt((m1 + 2 * m1 * m1) / 500.0));
  CHECK(std::abs(variance_of(second) - m2) < 4.0 * std::sqrt((m2 + 2 * m2 * m2) / 500.0));
}
