#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cpf/box.hpp"
#include "cpf/types.hpp"

namespace cpf {

// ---------------------------------------------------------------------------
// Scalar parametric families of one variable. Used for the rate function of
// under-curve regions and for the scale of covariance families.
//
// Piecewise-constant convention: values[k] applies on [breaks[k-1], breaks[k]),
// so values.size() == breaks.size() + 1 and the last piece is closed on the
// right.
// ---------------------------------------------------------------------------

struct ConstantFn {
  double value = 0.0;
};
struct AffineFn {
  double intercept = 0.0;
  double slope = 0.0;
};
struct PiecewiseConstantFn {
  std::vector<double> breaks;
  std::vector<double> values;
};
struct PolynomialFn {
  std::vector<double> coeffs;  // coeffs[k] multiplies x^k
};

class ScalarFunction {
 public:
  using Family = std::variant<ConstantFn, AffineFn, PiecewiseConstantFn, PolynomialFn>;

  ScalarFunction() : family_(ConstantFn{}) {}
  explicit ScalarFunction(Family family);

  double operator()(double x) const;
  const Family& family() const { return family_; }
  std::string family_name() const;

  // Points where the function may jump (piecewise breaks).
  std::vector<double> breakpoints() const;
  // Certified bounds of the function over [a, b].
  double upper_bound(double a, double b) const;
  double lower_bound(double a, double b) const;
  // True when the function is constant on some interval of positive length
  // inside [a, b], i.e. a uniform argument produces atoms in its image.
  bool has_flat_pieces(double a, double b) const;

 private:
  Family family_;
};

// ---------------------------------------------------------------------------
// Domain regions
// ---------------------------------------------------------------------------

struct Ball {
  std::vector<double> center;
  double radius = 1.0;
};

// Intersection of half-spaces normals[k] . v <= offsets[k].
struct Halfspaces {
  std::vector<std::vector<double>> normals;
  std::vector<double> offsets;
};

using Predicate = std::variant<Ball, Halfspaces>;

struct UnderCurve {
  double horizon = 1.0;
  ScalarFunction rate;
  double rate_max = 1.0;  // certified sup of the rate on [0, horizon]
  double rate_min = 1.0;  // certified inf, > 0
};

enum class DomainKind { box, under_curve, indicator };

std::string to_string(DomainKind kind);

/// Compact region A in R^d1 with positive Lebesgue measure.
///
/// Immutable after construction. The measure is computed once at construction
/// (closed form for boxes, adaptive quadrature of the rate for under-curve
/// regions, masked grid integration for indicator regions).
class DomainRegion {
 public:
  static DomainRegion box(std::vector<double> lower, std::vector<double> upper,
                          std::optional<double> measure_hint = std::nullopt);
  static DomainRegion under_curve(double horizon, ScalarFunction rate,
                                  std::optional<double> rate_max = std::nullopt,
                                  std::optional<double> measure_hint = std::nullopt);
  static DomainRegion indicator(Box bounding, Predicate predicate,
                                std::optional<double> measure_hint = std::nullopt);

  DomainKind kind() const { return kind_; }
  std::size_t dim() const { return bounding_.dim(); }
  const Box& bounding_box() const { return bounding_; }
  double measure() const { return measure_; }
  double measure_error() const { return measure_error_; }

  // Closed-set membership; throws InvalidArgument on dimension mismatch.
  bool contains(std::span<const double> v) const;
  // Membership without the dimension check.
  bool contains_unchecked(std::span<const double> v) const;

  // Non-null only for under-curve regions.
  const UnderCurve* under_curve() const { return std::get_if<UnderCurve>(&shape_); }
  const Predicate* predicate() const { return std::get_if<Predicate>(&shape_); }

 private:
  DomainRegion() = default;
  void finish(std::optional<double> measure_hint);

  DomainKind kind_ = DomainKind::box;
  Box bounding_;
  std::variant<std::monostate, UnderCurve, Predicate> shape_;
  double measure_ = 0.0;
  double measure_error_ = 0.0;
};

struct MeasureResult {
  double value = 0.0;
  double error = 0.0;
};

// Lebesgue measure of the region, computed from scratch.
MeasureResult compute_measure(const DomainRegion& domain);
double measure(const DomainRegion& domain);
bool contains(const DomainRegion& domain, std::span<const double> v);

// ---------------------------------------------------------------------------
// Mark model
// ---------------------------------------------------------------------------

struct ZeroMean {};
struct ConstantMean {
  Vector value;
};
// offset + matrix * v, matrix is d2 x d1.
struct AffineMean {
  Vector offset;
  Matrix matrix;
};
struct PiecewiseConstantMean {
  std::size_t coord = 0;
  std::vector<double> breaks;
  std::vector<Vector> values;
};
// sum_k coeffs[k] * v[coord]^k.
struct PolynomialMean {
  std::size_t coord = 0;
  std::vector<Vector> coeffs;
};

class MeanFunction {
 public:
  using Family =
      std::variant<ZeroMean, ConstantMean, AffineMean, PiecewiseConstantMean, PolynomialMean>;

  MeanFunction(std::size_t mark_dim, Family family);

  std::size_t mark_dim() const { return mark_dim_; }
  const Family& family() const { return family_; }
  std::string family_name() const;
  bool is_zero() const;
  // True when the function does not depend on coordinate `coord`.
  bool independent_of(std::size_t coord) const;
  // Largest coordinate index the function reads, or nullopt.
  std::optional<std::size_t> max_coord() const;
  std::vector<double> breakpoints(std::size_t coord) const;

  void evaluate(std::span<const double> v, std::span<double> out) const;
  Vector operator()(std::span<const double> v) const;

 private:
  std::size_t mark_dim_;
  Family family_;
};

struct ConstantCov {
  Matrix matrix;
};
struct PiecewiseConstantCov {
  std::size_t coord = 0;
  std::vector<double> breaks;
  std::vector<Matrix> matrices;
};
// scale(v[coord]) * matrix with a nonnegative scalar scale.
struct ScaledCov {
  std::size_t coord = 0;
  ScalarFunction scale;
  Matrix matrix;
};

class CovarianceFunction {
 public:
  using Family = std::variant<ConstantCov, PiecewiseConstantCov, ScaledCov>;

  explicit CovarianceFunction(Family family);

  std::size_t mark_dim() const { return mark_dim_; }
  const Family& family() const { return family_; }
  std::string family_name() const;
  std::optional<std::size_t> max_coord() const;
  std::vector<double> breakpoints(std::size_t coord) const;

  // Writes the d2 x d2 matrix column-major into out.
  void evaluate(std::span<const double> v, std::span<double> out) const;
  Matrix operator()(std::span<const double> v) const;

 private:
  std::size_t mark_dim_;
  Family family_;
};

enum class NoiseFamily { gaussian, rademacher, uniform };

std::string to_string(NoiseFamily noise);

/// Conditional law of a mark given its location: Y = m(v) + sigma(v) xi with
/// xi zero-mean, identity-covariance noise.
class MarkModel {
 public:
  MarkModel(MeanFunction mean, CovarianceFunction cov, NoiseFamily noise);

  std::size_t dim() const { return mean_.mark_dim(); }
  const MeanFunction& mean() const { return mean_; }
  const CovarianceFunction& cov() const { return cov_; }
  NoiseFamily noise() const { return noise_; }

 private:
  MeanFunction mean_;
  CovarianceFunction cov_;
  NoiseFamily noise_;
};

struct ModelSpec {
  DomainRegion domain;
  MarkModel marks;
  double intensity;

  // Validates cross-component invariants; throws InvalidArgument.
  ModelSpec(DomainRegion domain, MarkModel marks, double intensity);

  ModelSpec with_intensity(double nu) const;
  // Dual-ordering models: under-curve domain with the mark mean constant in x2.
  bool supports_time_intensity() const;
};

struct ConditionalMoments {
  Vector mean;
  Matrix covariance;
};

// (m(v), sigma^2(v)); throws InvalidArgument when sigma^2(v) is not symmetric
// to 1e-12 or has an eigenvalue below -1e-10.
ConditionalMoments cond_moments(const MarkModel& marks, std::span<const double> v);

/// Lower-triangular L with L L^T = cov for symmetric positive semidefinite cov.
///
/// Columns whose Schur-complement pivot vanishes are set to zero, so singular
/// covariances (including the zero matrix) are accepted. Throws
/// InvalidArgument when cov has an eigenvalue below -1e-10.
Matrix factorize(const Matrix& cov);

}  // namespace cpf
