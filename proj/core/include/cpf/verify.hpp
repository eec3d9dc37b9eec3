#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cpf/model.hpp"
#include "cpf/oracle.hpp"
#include "cpf/sampler.hpp"

namespace cpf {

struct ReplicationOptions {
  std::size_t threads = 0;  // 0: hardware concurrency
  FieldRoute route = FieldRoute::rejection;
  IntegrationOptions integration;  // used for the corner-field centering
};

/// Stacked statistics of R independent replications on one grid.
///
/// stats[r] has length points.size() * mark_dim: block a holds the d2-vector
/// evaluated at points[a]. Degenerate replications (no points) keep a zero
/// vector and are excluded from every estimate.
struct ReplicationBatch {
  Target target = Target::theorem2;
  std::vector<GridPoint> points;
  std::size_t mark_dim = 0;
  std::uint64_t seed = 0;
  double intensity = 0.0;
  std::vector<Vector> stats;
  std::vector<char> degenerate;

  std::size_t replications() const { return stats.size(); }
  std::size_t degenerate_count() const;
  std::size_t used() const { return replications() - degenerate_count(); }
};

// Statistic of replication `rep` on the grid; `centerings` are c(u) per point
// for the corner field and ignored otherwise.
Vector replicate_statistic(const ModelSpec& spec, Target target, std::span<const GridPoint> points,
                           std::span<const Vector> centerings, std::uint64_t seed, std::uint64_t rep,
                           FieldRoute route, bool* degenerate);

// Replications run on up to options.threads threads; the result does not
// depend on the thread count.
ReplicationBatch run_replications(const ModelSpec& spec, Target target,
                                  std::span<const GridPoint> points, std::size_t replications,
                                  std::uint64_t seed, const ReplicationOptions& options = {});

// Unbiased cross-covariance of blocks a and b (d2 x d2).
Matrix empirical_covariance(const ReplicationBatch& batch, std::size_t a, std::size_t b);

struct EmpiricalCovariance {
  Matrix covariance;      // (N d2) x (N d2)
  Matrix standard_error;  // per entry: sd of centered products / sqrt(R)
  std::size_t used = 0;
};

EmpiricalCovariance estimate_covariance(const ReplicationBatch& batch);

struct Tolerance {
  double absolute = 0.05;
  double relative = 0.0;
  double bound(double oracle_value, double se) const {
    return absolute + relative * std::abs(oracle_value) + 4.0 * se;
  }
};

struct KsResult {
  std::size_t point = 0;
  Vector direction;
  std::size_t n = 0;
  double distance = 0.0;
  double critical = 0.0;
  double alpha = 0.01;
  bool reject = false;
};

struct ComparisonReport {
  Target target = Target::theorem2;
  OracleMode mode = OracleMode::quantile_normalized;
  std::vector<GridPoint> points;
  std::size_t mark_dim = 0;
  std::size_t replications = 0;
  std::size_t degenerate = 0;
  double intensity = 0.0;
  std::uint64_t seed = 0;
  Tolerance tolerance;
  Matrix empirical;
  Matrix oracle;
  Matrix standard_error;
  Matrix deviation;  // empirical - oracle
  double max_abs_deviation = 0.0;
  double se_at_max = 0.0;
  double max_rel_deviation = 0.0;
  std::size_t worst_row = 0;
  std::size_t worst_col = 0;
  std::size_t failing_entries = 0;
  bool pass = false;
  std::vector<KsResult> ks;
};

// Pass iff every entry satisfies |empirical - oracle| <= tolerance.bound(oracle, se).
ComparisonReport compare_to_oracle(const ReplicationBatch& batch, const CovarianceBlock& oracle,
                                   const Tolerance& tolerance);

// sup |F_n - Phi| of the sample.
double ks_distance_normal(std::span<const double> values);
// c(alpha) / sqrt(n).
double ks_critical_value(double alpha, std::size_t n);

// KS test of values / oracle_sd against the standard normal.
KsResult ks_normality(std::span<const double> values, double oracle_sd, double alpha = 0.01);
// Projection d^T (block `point`) standardized by sqrt(d^T Sigma_aa d) from the oracle.
KsResult ks_normality(const ReplicationBatch& batch, const CovarianceBlock& oracle, std::size_t point,
                      std::span<const double> direction, double alpha = 0.01);

struct SweepRow {
  double intensity = 0.0;
  double max_abs_deviation = 0.0;
  double se_at_max = 0.0;
  double max_rel_deviation = 0.0;
  bool pass = false;
};

// One comparison per intensity against a single oracle block; intensities
// ascending, at least two.
std::vector<SweepRow> convergence_sweep(const ModelSpec& spec, const CovarianceBlock& oracle,
                                        std::span<const double> intensities, std::size_t replications,
                                        std::uint64_t seed, const Tolerance& tolerance,
                                        const ReplicationOptions& options = {});

// rows[k+1].max_abs_deviation <= rows[k].max_abs_deviation + factor * max(se_k, se_{k+1}).
bool sweep_non_increasing(std::span<const SweepRow> rows, double factor = 2.0);

}  // namespace cpf
