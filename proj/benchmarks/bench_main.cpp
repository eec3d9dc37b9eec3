#include <benchmark/benchmark.h>

#include <vector>

#include "cpf/oracle.hpp"
#include "cpf/ordering.hpp"
#include "cpf/sampler.hpp"

namespace {

cpf::MarkModel unit_marks() {
  return cpf::MarkModel(cpf::MeanFunction(1, cpf::ZeroMean{}),
                        cpf::CovarianceFunction(cpf::ConstantCov{cpf::Matrix::Ones(1, 1)}),
                        cpf::NoiseFamily::gaussian);
}

void BM_SampleField(benchmark::State& state) {
  const cpf::ModelSpec spec(cpf::DomainRegion::under_curve(1.0, cpf::ScalarFunction(cpf::AffineFn{1.0, 1.0})),
                            unit_marks(), static_cast<double>(state.range(0)));
  std::uint64_t rep = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(cpf::sample_field(spec, 1, rep++));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(1.5 * static_cast<double>(state.range(0))));
}
BENCHMARK(BM_SampleField)->Arg(1000)->Arg(10000);

void BM_QField(benchmark::State& state) {
  const cpf::ModelSpec spec(cpf::DomainRegion::box({0, 0}, {1, 1}), unit_marks(), static_cast<double>(state.range(0)));
  const auto sample = cpf::sample_field(spec, 2, 0);
  const std::vector<double> values{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  const auto corners = cpf::product_corners(values, 2);
  const std::vector<cpf::Vector> zero(corners.size(), cpf::Vector::Zero(1));
  for (auto _ : state) {
    benchmark::DoNotOptimize(cpf::evaluate_q_field(sample, corners, zero));
  }
}
BENCHMARK(BM_QField)->Arg(2000)->Arg(20000);

void BM_PartialSums(benchmark::State& state) {
  const cpf::ModelSpec spec(cpf::DomainRegion::box({0, 0}, {1, 1}), unit_marks(), static_cast<double>(state.range(0)));
  const auto sample = cpf::sample_field(spec, 3, 0);
  const cpf::OrderingKey keys[] = {cpf::OrderingKey::coordinate(0), cpf::OrderingKey::coordinate(1)};
  std::vector<double> grid;
  for (int k = 0; k <= 100; ++k) grid.push_back(k / 100.0);
  for (auto _ : state) {
    cpf::RngStream ties(3, 0, cpf::Purpose::ties);
    benchmark::DoNotOptimize(
        cpf::concomitant_partial_sums(sample, spec, keys, grid, cpf::Centering::none, ties));
  }
}
BENCHMARK(BM_PartialSums)->Arg(2000)->Arg(20000);

void BM_IntegrateDisk(benchmark::State& state) {
  cpf::IntegrationRegion region;
  const cpf::Box box{{-1.0, -1.0}, {1.0, 1.0}};
  region.pieces.push_back({box, 1.0});
  region.bounding = box;
  region.member = [](std::span<const double> x) { return x[0] * x[0] + x[1] * x[1] <= 1.0; };
  cpf::IntegrationOptions options;
  options.tol = 1e-4;
  options.cross_check = state.range(0) != 0;
  const cpf::Integrand one = [](std::span<const double>, std::span<double> out) { out[0] = 1.0; };
  for (auto _ : state) {
    benchmark::DoNotOptimize(cpf::integrate_over_region(one, 1, 1, region, options));
  }
}
BENCHMARK(BM_IntegrateDisk)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_OracleDualOrdering(benchmark::State& state) {
  const cpf::ModelSpec spec(
      cpf::DomainRegion::under_curve(1.0, cpf::ScalarFunction(cpf::PiecewiseConstantFn{{0.5}, {2.0, 1.0}})),
      unit_marks(), 1000.0);
  const std::vector<double> ts{0.25, 0.5, 0.75};
  const auto grid = cpf::theorem3_grid(ts);
  for (auto _ : state) {
    benchmark::DoNotOptimize(cpf::oracle_block(spec, cpf::Target::theorem3, grid));
  }
}
BENCHMARK(BM_OracleDualOrdering)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
