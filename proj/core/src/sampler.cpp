#include "cpf/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cpf {
namespace {

constexpr double kMinAcceptance = 1e-6;

double noise_draw(NoiseFamily family, RngStream& rng) {
  switch (family) {
    case NoiseFamily::gaussian:
      return rng.normal();
    case NoiseFamily::rademacher:
      return (rng.next_u64() >> 63) != 0 ? 1.0 : -1.0;
    case NoiseFamily::uniform:
      return std::numbers::sqrt3 * (2.0 * rng.uniform() - 1.0);
  }
  return 0.0;
}

}  // namespace

std::uint64_t sample_count(double intensity, double volume, RngStream& rng) {
  if (!(intensity > 0.0) || !(volume > 0.0)) {
    throw InvalidArgument("sample_count: intensity and volume must be positive");
  }
  return rng.poisson(intensity * volume);
}

RowMatrix sample_points(const DomainRegion& domain, std::size_t n, RngStream& rng,
                        RejectionStats* stats) {
  const std::size_t dim = domain.dim();
  const Box& box = domain.bounding_box();
  RowMatrix out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  if (n == 0) {
    return out;
  }
  const bool direct = domain.kind() == DomainKind::box;
  if (!direct && domain.measure() / box.volume() < kMinAcceptance) {
    throw InvalidArgument("sample_points: rejection acceptance probability " +
                          std::to_string(domain.measure() / box.volume()) +
                          " is below 1e-6; region is degenerate");
  }
  std::vector<double> candidate(dim);
  RejectionStats local;
  for (std::size_t i = 0; i < n; ++i) {
    for (;;) {
      for (std::size_t k = 0; k < dim; ++k) {
        candidate[k] = box.lower[k] + (box.upper[k] - box.lower[k]) * rng.uniform();
      }
      ++local.proposed;
      if (direct || domain.contains_unchecked(candidate)) {
        break;
      }
    }
    ++local.accepted;
    for (std::size_t k = 0; k < dim; ++k) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = candidate[k];
    }
  }
  if (stats) {
    stats->proposed += local.proposed;
    stats->accepted += local.accepted;
  }
  return out;
}

RowMatrix sample_marks(const MarkModel& marks, const RowMatrix& points, RngStream& rng) {
  const std::size_t d2 = marks.dim();
  const Eigen::Index n = points.rows();
  RowMatrix out(n, static_cast<Eigen::Index>(d2));
  Vector mean(static_cast<Eigen::Index>(d2));
  Vector noise(static_cast<Eigen::Index>(d2));
  Matrix cov(static_cast<Eigen::Index>(d2), static_cast<Eigen::Index>(d2));
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::span<const double> x(points.row(i).data(), static_cast<std::size_t>(points.cols()));
    marks.mean().evaluate(x, std::span<double>(mean.data(), d2));
    marks.cov().evaluate(x, std::span<double>(cov.data(), d2 * d2));
    const Matrix factor = factorize(cov);
    for (std::size_t r = 0; r < d2; ++r) {
      noise[static_cast<Eigen::Index>(r)] = noise_draw(marks.noise(), rng);
    }
    out.row(i) = (mean + factor * noise).transpose();
  }
  return out;
}

MarkedSample sample_field(const ModelSpec& spec, std::uint64_t seed, std::uint64_t replication,
                          FieldRoute route) {
  MarkedSample sample;
  sample.seed = seed;
  sample.replication = replication;
  if (route == FieldRoute::thinning) {
    const UnderCurve* uc = spec.domain.under_curve();
    if (!uc) {
      throw InvalidArgument("sample_field: the thinning route needs an under_curve domain");
    }
    RngStream time_rng(seed, replication, Purpose::times);
    RngStream lift_rng(seed, replication, Purpose::lift);
    const auto times =
        sample_inhomogeneous_times(uc->rate, uc->horizon, uc->rate_max, spec.intensity, time_rng);
    sample.points = lift_times_to_field(times, uc->rate, lift_rng);
  } else {
    RngStream count_rng(seed, replication, Purpose::count);
    RngStream point_rng(seed, replication, Purpose::points);
    const auto n = sample_count(spec.intensity, spec.domain.measure(), count_rng);
    sample.points = sample_points(spec.domain, static_cast<std::size_t>(n), point_rng);
  }
  RngStream mark_rng(seed, replication, Purpose::marks);
  sample.marks = sample_marks(spec.marks, sample.points, mark_rng);
  return sample;
}

std::vector<double> sample_inhomogeneous_times(const ScalarFunction& rate, double horizon,
                                               double rate_max, double intensity, RngStream& rng) {
  if (!(horizon > 0.0) || !(rate_max > 0.0) || !(intensity > 0.0)) {
    throw InvalidArgument("sample_inhomogeneous_times: horizon, rate bound and intensity must be positive");
  }
  std::vector<double> times;
  const double envelope = intensity * rate_max;
  double t = 0.0;
  for (;;) {
    t += rng.exponential(envelope);
    if (t > horizon) {
      break;
    }
    const double value = rate(t);
    if (value > rate_max) {
      throw InvalidArgument("sample_inhomogeneous_times: rate " + std::to_string(value) + " at t=" +
                            std::to_string(t) + " exceeds the supplied bound " +
                            std::to_string(rate_max));
    }
    // Always consume the acceptance draw so that streams stay aligned.
    const double u = rng.uniform();
    if (u * rate_max < value) {
      times.push_back(t);
    }
  }
  return times;
}

RowMatrix lift_times_to_field(std::span<const double> times, const ScalarFunction& rate,
                              RngStream& rng) {
  RowMatrix out(static_cast<Eigen::Index>(times.size()), 2);
  for (std::size_t i = 0; i < times.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    out(row, 0) = times[i];
    out(row, 1) = rng.uniform() * rate(times[i]);
  }
  return out;
}

std::vector<double> project_field_to_times(const RowMatrix& points) {
  if (points.rows() > 0 && points.cols() != 2) {
    throw InvalidArgument("project_field_to_times: points must be two-dimensional");
  }
  std::vector<double> times(static_cast<std::size_t>(points.rows()));
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    times[static_cast<std::size_t>(i)] = points(i, 0);
  }
  std::sort(times.begin(), times.end());
  return times;
}

}  // namespace cpf
