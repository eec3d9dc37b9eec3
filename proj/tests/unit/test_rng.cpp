#include <doctest.h>

#include <set>
#include <vector>

#include "cpf/rng.hpp"
#include "cpf/types.hpp"
#include "stats.hpp"

using namespace cpf;
using namespace cpf::testing;

TEST_CASE("philox matches the published known-answer vectors") {
  using A4 = std::array<std::uint32_t, 4>;
  CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32_10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("identical paths reproduce and distinct paths diverge") {
  auto draw = [](std::uint64_t seed, std::uint64_t rep, Purpose p) {
    RngStream s(seed, rep, p);
    std::vector<std::uint64_t> out;
    for (int i = 0; i < 16; ++i) out.push_back(s.next_u64());
    return out;
  };
  CHECK(draw(7, 3, Purpose::marks) == draw(7, 3, Purpose::marks));
  CHECK(draw(7, 3, Purpose::marks) != draw(7, 3, Purpose::points));
  CHECK(draw(7, 3, Purpose::marks) != draw(7, 4, Purpose::marks));
  CHECK(draw(7, 3, Purpose::marks) != draw(8, 3, Purpose::marks));
}

TEST_CASE("replication index is bounded") {
  CHECK_NOTHROW(RngStream(1, RngStream::kMaxReplication, Purpose::count));
  CHECK_THROWS_AS(RngStream(1, RngStream::kMaxReplication + 1, Purpose::count), InvalidArgument);
}

TEST_CASE("uniform variates are in range and pass KS") {
  RngStream s(11, 0, Purpose::synthetic);
  std::vector<double> u;
  for (int i = 0; i < 100000; ++i) {
    const double x = s.uniform();
    REQUIRE(x >= 0.0);
    REQUIRE(x < 1.0);
    const double y = s.uniform_open();
    REQUIRE(y > 0.0);
    REQUIRE(y < 1.0);
    u.push_back(x);
  }
  CHECK(ks_statistic(u, [](double x) { return x; }) < ks_critical_001(u.size()));
}

TEST_CASE("normal variates pass KS") {
  RngStream s(12, 0, Purpose::synthetic);
  std::vector<double> z;
  for (int i = 0; i < 100000; ++i) z.push_back(s.normal());
  CHECK(ks_statistic(z, standard_normal_cdf) < ks_critical_001(z.size()));
}

TEST_CASE("exponential variates pass KS") {
  RngStream s(13, 0, Purpose::synthetic);
  std::vector<double> e;
  for (int i = 0; i < 50000; ++i) e.push_back(s.exponential(2.5));
  CHECK(ks_statistic(e, [](double x) { return 1.0 - std::exp(-2.5 * x); }) < ks_critical_001(e.size()));
  CHECK_THROWS_AS(s.exponential(0.0), InvalidArgument);
}

TEST_CASE("poisson variates match mean and variance") {
  for (double mean : {0.5, 4.0, 30.0, 1000.0}) {
    RngStream s(14, static_cast<std::uint64_t>(mean * 10), Purpose::count);
    std::vector<double> k;
    const int n = 20000;
    for (int i = 0; i < n; ++i) k.push_back(static_cast<double>(s.poisson(mean)));
    CAPTURE(mean);
    CHECK(std::abs(mean_of(k) - mean) < 4.0 * std::sqrt(mean / n));
    // Var of the sample variance is about (mu + 2 mu^2) / n for a Poisson law.
    CHECK(std::abs(variance_of(k) - mean) < 5.0 * std::sqrt((mean + 2.0 * mean * mean) / n));
  }
  RngStream s(15, 0, Purpose::count);
  CHECK(s.poisson(0.0) == 0);
  CHECK_THROWS_AS(s.poisson(-1.0), InvalidArgument);
}

TEST_CASE("outputs of one stream do not repeat over a long run") {
  RngStream s(16, 0, Purpose::synthetic);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 100000; ++i) seen.insert(s.next_u64());
  CHECK(seen.size() == 100000);
}
