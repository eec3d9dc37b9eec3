#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <vector>

#include "cpf/ordering.hpp"
#include "generators.hpp"

using namespace cpf;
using namespace cpf::testing;

namespace {

MarkedSample make_sample(const RowMatrix& points, const RowMatrix& marks) {
  MarkedSample s;
  s.points = points;
  s.marks = marks;
  return s;
}

MarkedSample line_sample(std::initializer_list<double> xs, std::initializer_list<double> ys) {
  RowMatrix p(static_cast<Eigen::Index>(xs.size()), 1);
  RowMatrix m(static_cast<Eigen::Index>(ys.size()), 1);
  Eigen::Index i = 0;
  for (double x : xs) p(i++, 0) = x;
  i = 0;
  for (double y : ys) m(i++, 0) = y;
  return make_sample(p, m);
}

MarkedSample random_sample(Gen& gen, std::size_t n, std::size_t d1, std::size_t d2) {
  RowMatrix p(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d1));
  RowMatrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d2));
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (Eigen::Index k = 0; k < p.cols(); ++k) p(i, k) = gen.uniform();
    for (Eigen::Index k = 0; k < m.cols(); ++k) m(i, k) = gen.normal();
  }
  return make_sample(p, m);
}

ModelSpec line_spec() { return ModelSpec(unit_box(1), zero_mean_marks(), 3.0); }

}  // namespace

TEST_CASE("coordinate ordering sorts the column") {
  const auto s = line_sample({0.7, 0.1, 0.4}, {0, 0, 0});
  const std::vector<double> ties{0.5, 0.5, 0.5};
  const auto perm = order_by_key(s, OrderingKey::coordinate(0), unit_box(1), ties);
  CHECK(perm == std::vector<std::size_t>{1, 2, 0});
  CHECK_THROWS_AS(order_by_key(s, OrderingKey::coordinate(1), unit_box(1), ties), InvalidArgument);
  CHECK_THROWS_AS(order_by_key(s, OrderingKey::intensity(), unit_box(1), ties), InvalidArgument);
}

TEST_CASE("ties are broken uniformly at random") {
  const auto s = line_sample({0.3, 0.3}, {0, 0});
  int first = 0;
  const int n = 10000;
  for (int seed = 0; seed < n; ++seed) {
    RngStream rng(static_cast<std::uint64_t>(seed), 0, Purpose::ties);
    first += order_by_key(s, OrderingKey::coordinate(0), unit_box(1), rng)[0] == 0 ? 1 : 0;
  }
  CHECK(std::abs(static_cast<double>(first) / n - 0.5) < 0.02);
}

TEST_CASE("intensity order equals time order for a strictly increasing rate") {
  Gen gen(401);
  const auto region = increasing_rate_region();
  for (int c = 0; c < 50; ++c) {
    auto s = random_sample(gen, gen.index(0, 40), 2, 1);
    RngStream rng(c, 0, Purpose::ties);
    const auto ties = draw_tie_keys(s.count(), rng);
    CHECK(order_by_key(s, OrderingKey::intensity(), region, ties) ==
          order_by_key(s, OrderingKey::time(), region, ties));
  }
}

TEST_CASE("constant rate makes the intensity permutation uniform") {
  const auto region = DomainRegion::under_curve(1.0, ScalarFunction(ConstantFn{1.0}));
  RowMatrix p(4, 2);
  p << 0.1, 0.5, 0.2, 0.5, 0.3, 0.5, 0.4, 0.5;
  const auto s = make_sample(p, RowMatrix::Zero(4, 1));
  std::map<std::vector<std::size_t>, int> freq;
  const int n = 100000;
  for (int seed = 0; seed < n; ++seed) {
    RngStream rng(static_cast<std::uint64_t>(seed), 1, Purpose::ties);
    ++freq[order_by_key(s, OrderingKey::intensity(), region, rng)];
  }
  REQUIRE(freq.size() == 24);
  const double expected = n / 24.0;
  double chi2 = 0.0;
  for (const auto& [perm, count] : freq) chi2 += (count - expected) * (count - expected) / expected;
  // Upper 1% point of chi-square with 23 degrees of freedom.
  CHECK(chi2 < 41.638);
}

TEST_CASE("prefix lengths use the floor") {
  CHECK(prefix_length(3, 2.0 / 3.0) == 2);
  CHECK(prefix_length(3, 0.0) == 0);
  CHECK(prefix_length(3, 1.0) == 3);
  CHECK(prefix_length(10, 0.25) == 2);
  CHECK(prefix_length(0, 0.5) == 0);
  CHECK_THROWS_AS(prefix_length(3, 1.5), InvalidArgument);
  CHECK_THROWS_AS(prefix_length(3, -0.1), InvalidArgument);
}

TEST_CASE("hand-computed partial sums") {
  const auto s = line_sample({0.1, 0.4, 0.7}, {1, 2, 3});
  const OrderingKey keys[] = {OrderingKey::coordinate(0)};
  const std::vector<double> grid{0.0, 2.0 / 3.0, 1.0};
  RngStream rng(1, 0, Purpose::ties);
  const auto path = concomitant_partial_sums(s, line_spec(), keys, grid, Centering::none, rng);
  CHECK(path.values[0](0, 0) == 0.0);
  CHECK(path.values[1](0, 0) == doctest::Approx(std::sqrt(3.0)));
  CHECK(path.values[2](0, 0) == doctest::Approx(6.0 / std::sqrt(3.0)));
  CHECK_FALSE(path.degenerate);
}

TEST_CASE("empty samples give a degenerate zero path") {
  const auto s = make_sample(RowMatrix(0, 1), RowMatrix(0, 1));
  const OrderingKey keys[] = {OrderingKey::coordinate(0)};
  const std::vector<double> grid{0.5, 1.0};
  RngStream rng(1, 0, Purpose::ties);
  const auto path = concomitant_partial_sums(s, line_spec(), keys, grid, Centering::none, rng);
  CHECK(path.degenerate);
  CHECK(path.values[1].isZero());
}

TEST_CASE("q field hand computations") {
  const auto s = line_sample({0.1, 0.4, 0.7}, {1, 2, 3});
  const std::vector<std::vector<double>> corners{{0.5}, {1.0}, {-0.1}};
  const std::vector<Vector> zero(3, Vector::Zero(1));
  const auto f = evaluate_q_field(s, corners, zero);
  CHECK(f.values[0](0) == doctest::Approx(3.0 / std::sqrt(3.0)));
  CHECK(f.values[1](0) == doctest::Approx(6.0 / std::sqrt(3.0)));
  CHECK(f.values[2](0) == 0.0);
  const std::vector<Vector> c{vec({0.5}), vec({1.0}), vec({0.0})};
  const auto g = evaluate_q_field(s, corners, c);
  CHECK(g.values[0](0) == doctest::Approx((3.0 - 1.5) / std::sqrt(3.0)));
}

TEST_CASE("theorem3 process special cases") {
  const MarkModel zero_noise = zero_mean_marks(0.0);
  const ModelSpec deterministic(increasing_rate_region(), zero_noise, 200.0);
  const std::vector<double> grid{0.1, 0.5, 1.0};
  for (std::uint64_t r = 0; r < 5; ++r) {
    const auto s = sample_field(deterministic, 3, r);
    RngStream rng(3, r, Purpose::ties);
    const auto path = theorem3_process(s, deterministic, grid, rng);
    for (const auto& v : path.values) CHECK(v.isZero());
  }
  const ModelSpec noisy(increasing_rate_region(), zero_mean_marks(1.0), 200.0);
  for (std::uint64_t r = 0; r < 5; ++r) {
    const auto s = sample_field(noisy, 4, r);
    RngStream rng(4, r, Purpose::ties);
    const auto path = theorem3_process(s, noisy, grid, rng);
    for (const auto& v : path.values) CHECK(v.row(0) == v.row(1));
  }
  const ModelSpec box(unit_box(2), zero_mean_marks(), 10.0);
  RngStream rng(5, 0, Purpose::ties);
  CHECK_THROWS_AS(theorem3_process(sample_field(box, 5, 0), box, grid, rng), InvalidArgument);
}

TEST_CASE("property: paths start at zero, end at the common total, and follow the prefix") {
  Gen gen(402);
  const ModelSpec spec(unit_box(3), MarkModel(MeanFunction(2, ZeroMean{}),
                                              CovarianceFunction(ConstantCov{Matrix::Identity(2, 2)}),
                                              NoiseFamily::gaussian),
                       10.0);
  const OrderingKey keys[] = {OrderingKey::coordinate(0), OrderingKey::coordinate(1), OrderingKey::coordinate(2)};
  for (int c = 0; c < kPropertyCases; ++c) {
    const std::size_t n = gen.index(1, 30);
    const auto s = random_sample(gen, n, 3, 2);
    std::vector<double> grid{0.0};
    for (int g = 0; g < 6; ++g) grid.push_back(gen.uniform());
    grid.push_back(1.0);
    std::sort(grid.begin(), grid.end());
    RngStream rng(static_cast<std::uint64_t>(c), 0, Purpose::ties);
    const auto path = concomitant_partial_sums(s, spec, keys, grid, Centering::none, rng);
    const Eigen::RowVectorXd total = Matrix(s.marks).colwise().sum() / std::sqrt(static_cast<double>(n));
    CAPTURE(c);
    CHECK(path.values.front().isZero());
    for (Eigen::Index k = 0; k < 3; ++k) {
      CHECK((path.values.back().row(k) - total).cwiseAbs().maxCoeff() < 1e-12);
    }
    // Reference: sort each column directly and sum the first floor(n t) marks.
    for (std::size_t k = 0; k < 3; ++k) {
      std::vector<std::size_t> idx(n);
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return s.points(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(k)) <
               s.points(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(k));
      });
      for (std::size_t g = 0; g < grid.size(); ++g) {
        const auto len = static_cast<std::size_t>(std::floor(static_cast<double>(n) * grid[g] + 1e-9));
        Eigen::RowVectorXd ref = Eigen::RowVectorXd::Zero(2);
        for (std::size_t j = 0; j < std::min(len, n); ++j) ref += s.marks.row(static_cast<Eigen::Index>(idx[j]));
        ref /= std::sqrt(static_cast<double>(n));
        CHECK((path.values[g].row(static_cast<Eigen::Index>(k)) - ref).cwiseAbs().maxCoeff() < 1e-12);
      }
    }
    // Equal prefixes give identical values.
    for (std::size_t g = 1; g < grid.size(); ++g) {
      if (prefix_length(n, grid[g]) == prefix_length(n, grid[g - 1])) {
        CHECK(path.values[g] == path.values[g - 1]);
      }
    }
  }
}

TEST_CASE("property: every ordering is a permutation") {
  Gen gen(403);
  for (int c = 0; c < kPropertyCases; ++c) {
    const auto s = random_sample(gen, gen.index(0, 50), 2, 1);
    RngStream rng(static_cast<std::uint64_t>(c), 0, Purpose::ties);
    auto perm = order_by_key(s, OrderingKey::coordinate(gen.index(0, 1)), unit_box(2), rng);
    std::sort(perm.begin(), perm.end());
    std::vector<std::size_t> id(s.count());
    std::iota(id.begin(), id.end(), std::size_t{0});
    CHECK(perm == id);
  }
}

TEST_CASE("property: q field is monotone for nonnegative marks and matches the ordered prefix") {
  Gen gen(404);
  for (int c = 0; c < kPropertyCases; ++c) {
    const std::size_t n = gen.index(1, 40);
    auto s = random_sample(gen, n, 1, 1);
    s.marks = s.marks.cwiseAbs();
    std::vector<std::vector<double>> corners;
    for (int k = 0; k <= 10; ++k) corners.push_back({k / 10.0});
    const std::vector<Vector> zero(corners.size(), Vector::Zero(1));
    const auto f = evaluate_q_field(s, corners, zero);
    for (std::size_t k = 1; k < corners.size(); ++k) CHECK(f.values[k](0) >= f.values[k - 1](0));

    // Q at the floor(n t)-th order statistic equals Z at t.
    std::vector<double> xs(s.points.data(), s.points.data() + n);
    std::sort(xs.begin(), xs.end());
    const double t = gen.uniform(0.05, 1.0);
    const std::size_t len = prefix_length(n, t);
    if (len == 0) continue;
    const std::vector<std::vector<double>> at{{xs[len - 1]}};
    const std::vector<Vector> z1{Vector::Zero(1)};
    const OrderingKey keys[] = {OrderingKey::coordinate(0)};
    const std::vector<double> grid{t};
    RngStream rng(static_cast<std::uint64_t>(c), 0, Purpose::ties);
    const auto path = concomitant_partial_sums(s, line_spec(), keys, grid, Centering::none, rng);
    CHECK(evaluate_q_field(s, at, z1).values[0](0) == doctest::Approx(path.values[0](0, 0)).epsilon(1e-12));
  }
}
