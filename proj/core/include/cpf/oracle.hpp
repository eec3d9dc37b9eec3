#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cpf/integrate.hpp"
#include "cpf/model.hpp"

namespace cpf {

enum class Target { theorem1, theorem2, theorem3 };

/// How grid arguments map onto integration regions.
///
/// quantile_normalized (default): the index t of an ordered process is the
/// fraction of ordered points, so thresholds are marginal quantiles and
/// intensity ranks use the randomized probability-integral transform. For
/// the corner field the product-of-means term is c(u1) c(u2)^T.
///
/// paper_literal: thresholds are the raw arguments and the regions are the
/// textbook B/G sets; for the corner field the product-of-means term is taken
/// over the intersection region. Agrees with quantile_normalized on the unit
/// cube and, after mapping arguments through time_quantile, for strictly
/// increasing continuous rates.
enum class OracleMode { paper_literal, quantile_normalized };

std::string to_string(Target target);
std::string to_string(OracleMode mode);
Target parse_target(const std::string& name);
OracleMode parse_mode(const std::string& name);

// A grid argument: `series` is the ordering index (coordinate for the
// per-coordinate process, 0 = time / 1 = intensity for the dual process, 0 for
// the corner field) and `coords` is {t} or the corner u.
struct GridPoint {
  std::size_t series = 0;
  std::vector<double> coords;
  bool operator==(const GridPoint&) const = default;
};

std::vector<GridPoint> theorem1_grid(std::span<const std::vector<double>> corners);
std::vector<GridPoint> theorem2_grid(std::span<const std::size_t> coords, std::span<const double> ts);
std::vector<GridPoint> theorem3_grid(std::span<const double> ts);
// Cartesian product values^dim, last coordinate fastest.
std::vector<std::vector<double>> product_corners(std::span<const double> values, std::size_t dim);

struct OracleValue {
  Matrix value;
  double error = 0.0;
  Matrix cross_check;  // quasi-random estimate of the same quantity
  double cross_check_error = 0.0;
};

// ---------------------------------------------------------------------------
// Rate-function quantities for under-curve regions.

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

// Lambda(s) = int_0^s rate.
double cumulative_rate(const UnderCurve& uc, double s);
// inf{s : Lambda(s) / Lambda(T) >= t}.
double time_quantile(const UnderCurve& uc, double t);
// Maximal intervals of [0, T] on which rate <= level (rate < level when strict).
std::vector<Interval> sublevel_set(const UnderCurve& uc, double level, bool strict);
// P(rate(X1) <= level) (or < level) where X1 has density rate / Lambda(T).
double intensity_cdf(const UnderCurve& uc, double level, bool strict = false);

struct IntensityLevel {
  double level = 0.0;  // inf{l : P(rate(X1) <= l) >= t}
  double below = 0.0;  // P(rate(X1) < level)
  double atom = 0.0;   // P(rate(X1) == level)
};

IntensityLevel intensity_level(const UnderCurve& uc, double t);
double intensity_threshold(const UnderCurve& uc, double t);

// Fraction of points of rank (by randomized intensity) at most t that sit at
// a location with this rate value: 1 below the level, the tie share at the
// level, 0 above.
double intensity_rank_weight(const IntensityLevel& level, double t, double rate_value);

// t-quantile of coordinate `coord` of a uniform point in the domain.
double marginal_quantile(const DomainRegion& domain, std::size_t coord, double t,
                         const IntegrationOptions& options = {});

// ---------------------------------------------------------------------------
// Covariance oracles. All carry explicit 1/mu(A) density factors.

// c(u) = E[Y 1(X <= u)] = (1/mu(A)) int_{A, v <= u} m(v) dv.
Vector centering(const ModelSpec& spec, std::span<const double> u,
                 const IntegrationOptions& options = {});

OracleValue cov_theorem1(const ModelSpec& spec, std::span<const double> u1,
                         std::span<const double> u2,
                         OracleMode mode = OracleMode::quantile_normalized,
                         const IntegrationOptions& options = {});

// i, j are 0-based coordinates. Requires a zero mark mean.
OracleValue cov_theorem2(const ModelSpec& spec, std::size_t i, double t1, std::size_t j, double t2,
                         OracleMode mode = OracleMode::quantile_normalized,
                         const IntegrationOptions& options = {});

// E V_a(t1)^T V_b(t2) for a, b in {1, 2} (1 = time ordering, 2 = intensity ordering).
OracleValue cov_theorem3(const ModelSpec& spec, int a, int b, double t1, double t2,
                         OracleMode mode = OracleMode::quantile_normalized,
                         const IntegrationOptions& options = {});

// True when rate(X1) has atoms (flat pieces of the rate).
bool rate_has_atoms(const UnderCurve& uc);

struct CovarianceBlock {
  Target target = Target::theorem2;
  OracleMode mode = OracleMode::quantile_normalized;
  std::size_t mark_dim = 0;
  std::vector<GridPoint> points;
  std::vector<OracleValue> entries;  // row-major, points.size()^2
  std::vector<std::string> warnings;
  IntegrationOptions options;

  std::size_t size() const { return points.size(); }
  const OracleValue& at(std::size_t a, std::size_t b) const { return entries[a * size() + b]; }
  OracleValue& at(std::size_t a, std::size_t b) { return entries[a * size() + b]; }
  // Assembled (N d2) x (N d2) covariance of the stacked statistic.
  Matrix gram() const;
  double min_eigenvalue() const;
  // max over entries of |value - cross_check| / (error + cross_check_error).
  double max_cross_check_ratio() const;
};

CovarianceBlock oracle_block(const ModelSpec& spec, Target target, std::span<const GridPoint> points,
                             OracleMode mode = OracleMode::quantile_normalized,
                             const IntegrationOptions& options = {});

}  // namespace cpf
