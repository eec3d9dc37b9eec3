#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cpf/model.hpp"
#include "cpf/rng.hpp"
#include "cpf/types.hpp"

namespace cpf {

// One realization of the compound Poisson field: rows of `points` are the
// locations X_i, rows of `marks` the marks Y_i.
struct MarkedSample {
  std::uint64_t seed = 0;
  std::uint64_t replication = 0;
  RowMatrix points;
  RowMatrix marks;

  std::size_t count() const { return static_cast<std::size_t>(points.rows()); }
  bool operator==(const MarkedSample&) const = default;
};

struct RejectionStats {
  std::uint64_t proposed = 0;
  std::uint64_t accepted = 0;
  double acceptance_rate() const {
    return proposed == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposed);
  }
};

// How an under-curve field is generated.
enum class FieldRoute {
  rejection,  // Poisson count, then uniform points by rejection from the bounding box
  thinning,   // thinned inhomogeneous arrival times lifted to the region
};

// One Poisson(intensity * volume) draw.
std::uint64_t sample_count(double intensity, double volume, RngStream& rng);

/// n independent uniform points in the domain.
///
/// Boxes are sampled directly; other regions by rejection from the bounding
/// box. Throws InvalidArgument when the acceptance probability
/// measure / bounding volume is below 1e-6.
RowMatrix sample_points(const DomainRegion& domain, std::size_t n, RngStream& rng,
                        RejectionStats* stats = nullptr);

// Y_i = m(X_i) + sigma(X_i) xi_i with xi_i drawn from the configured noise family.
RowMatrix sample_marks(const MarkModel& marks, const RowMatrix& points, RngStream& rng);

// Full realization keyed by (seed, replication); each stage uses its own stream.
MarkedSample sample_field(const ModelSpec& spec, std::uint64_t seed, std::uint64_t replication,
                          FieldRoute route = FieldRoute::rejection);

/// Arrival times of an inhomogeneous Poisson process with rate
/// intensity * rate(t) on [0, horizon], by thinning a homogeneous process of
/// rate intensity * rate_max. Throws InvalidArgument if the rate is ever
/// observed above rate_max.
std::vector<double> sample_inhomogeneous_times(const ScalarFunction& rate, double horizon,
                                               double rate_max, double intensity, RngStream& rng);

// Lifts each time s to the point (s, U * rate(s)), U uniform on [0, 1].
RowMatrix lift_times_to_field(std::span<const double> times, const ScalarFunction& rate,
                              RngStream& rng);

// Sorted first coordinates of a two-dimensional point set.
std::vector<double> project_field_to_times(const RowMatrix& points);

}  // namespace cpf
