#include "cpf/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cpf/integrate.hpp"
#include "cpf/quadrature.hpp"

namespace cpf {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require(bool condition, const std::string& message) {
  if (!condition) {
    throw InvalidArgument(message);
  }
}

bool all_finite(std::span<const double> xs) {
  return std::all_of(xs.begin(), xs.end(), [](double x) { return std::isfinite(x); });
}

void check_breaks(const std::vector<double>& breaks, std::size_t pieces, const char* what) {
  require(all_finite(breaks), std::string(what) + ": breaks must be finite");
  require(std::is_sorted(breaks.begin(), breaks.end()) &&
              std::adjacent_find(breaks.begin(), breaks.end()) == breaks.end(),
          std::string(what) + ": breaks must be strictly increasing");
  require(pieces == breaks.size() + 1,
          std::string(what) + ": need exactly one more value than breaks");
}

std::size_t piece_index(const std::vector<double>& breaks, double x) {
  return static_cast<std::size_t>(std::upper_bound(breaks.begin(), breaks.end(), x) -
                                  breaks.begin());
}

double horner(const std::vector<double>& coeffs, double x) {
  double acc = 0.0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) {
    acc = acc * x + *it;
  }
  return acc;
}

// Bound on |p'| over [a, b] from the coefficient magnitudes.
double derivative_bound(const std::vector<double>& coeffs, double a, double b) {
  const double reach = std::max(std::fabs(a), std::fabs(b));
  double bound = 0.0;
  for (std::size_t k = 1; k < coeffs.size(); ++k) {
    bound += static_cast<double>(k) * std::fabs(coeffs[k]) * std::pow(reach, static_cast<double>(k - 1));
  }
  return bound;
}

constexpr int kBoundGrid = 4096;

double symmetric_scale(const Matrix& m) { return 1.0 + m.cwiseAbs().maxCoeff(); }

bool is_symmetric(const Matrix& m, double tol) {
  return m.rows() == m.cols() && (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * symmetric_scale(m);
}

double min_eigenvalue(const Matrix& m) {
  if (m.rows() == 0) {
    return 0.0;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

void check_psd(const Matrix& m, const std::string& what) {
  require(m.rows() > 0 && m.rows() == m.cols(), what + ": covariance must be square and non-empty");
  require(m.allFinite(), what + ": covariance must be finite");
  require(is_symmetric(m, 1e-12), what + ": covariance must be symmetric");
  require(min_eigenvalue(m) >= -1e-10, what + ": covariance must be positive semidefinite");
}

}  // namespace

// ---------------------------------------------------------------------------
// ScalarFunction

ScalarFunction::ScalarFunction(Family family) : family_(std::move(family)) {
  std::visit(Overloaded{
                 [](const ConstantFn& f) { require(std::isfinite(f.value), "constant: value must be finite"); },
                 [](const AffineFn& f) {
                   require(std::isfinite(f.intercept) && std::isfinite(f.slope),
                           "affine: parameters must be finite");
                 },
                 [](const PiecewiseConstantFn& f) {
                   check_breaks(f.breaks, f.values.size(), "piecewise_constant");
                   require(all_finite(f.values), "piecewise_constant: values must be finite");
                 },
                 [](const PolynomialFn& f) {
                   require(!f.coeffs.empty(), "polynomial: need at least one coefficient");
                   require(all_finite(f.coeffs), "polynomial: coefficients must be finite");
                 },
             },
             family_);
}

double ScalarFunction::operator()(double x) const {
  return std::visit(Overloaded{
                        [](const ConstantFn& f) { return f.value; },
                        [x](const AffineFn& f) { return f.intercept + f.slope * x; },
                        [x](const PiecewiseConstantFn& f) { return f.values[piece_index(f.breaks, x)]; },
                        [x](const PolynomialFn& f) { return horner(f.coeffs, x); },
                    },
                    family_);
}

std::string ScalarFunction::family_name() const {
  return std::visit(Overloaded{
                        [](const ConstantFn&) { return std::string("constant"); },
                        [](const AffineFn&) { return std::string("affine"); },
                        [](const PiecewiseConstantFn&) { return std::string("piecewise_constant"); },
                        [](const PolynomialFn&) { return std::string("polynomial"); },
                    },
                    family_);
}

std::vector<double> ScalarFunction::breakpoints() const {
  if (const auto* f = std::get_if<PiecewiseConstantFn>(&family_)) {
    return f->breaks;
  }
  return {};
}

double ScalarFunction::upper_bound(double a, double b) const {
  return std::visit(
      Overloaded{
          [](const ConstantFn& f) { return f.value; },
          [a, b](const AffineFn& f) { return std::max(f.intercept + f.slope * a, f.intercept + f.slope * b); },
          [a, b](const PiecewiseConstantFn& f) {
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t k = piece_index(f.breaks, a); k <= piece_index(f.breaks, b); ++k) {
              best = std::max(best, f.values[k]);
            }
            return best;
          },
          [a, b](const PolynomialFn& f) {
            const double h = (b - a) / kBoundGrid;
            double best = -std::numeric_limits<double>::infinity();
            for (int i = 0; i <= kBoundGrid; ++i) {
              best = std::max(best, horner(f.coeffs, a + h * i));
            }
            return best + 0.5 * h * derivative_bound(f.coeffs, a, b);
          },
      },
      family_);
}

double ScalarFunction::lower_bound(double a, double b) const {
  return std::visit(
      Overloaded{
          [](const ConstantFn& f) { return f.value; },
          [a, b](const AffineFn& f) { return std::min(f.intercept + f.slope * a, f.intercept + f.slope * b); },
          [a, b](const PiecewiseConstantFn& f) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t k = piece_index(f.breaks, a); k <= piece_index(f.breaks, b); ++k) {
              best = std::min(best, f.values[k]);
            }
            return best;
          },
          [a, b](const PolynomialFn& f) {
            const double h = (b - a) / kBoundGrid;
            double best = std::numeric_limits<double>::infinity();
            for (int i = 0; i <= kBoundGrid; ++i) {
              best = std::min(best, horner(f.coeffs, a + h * i));
            }
            return best - 0.5 * h * derivative_bound(f.coeffs, a, b);
          },
      },
      family_);
}

bool ScalarFunction::has_flat_pieces(double a, double b) const {
  if (!(b > a)) {
    return true;
  }
  return std::visit(Overloaded{
                        [](const ConstantFn&) { return true; },
                        [](const AffineFn& f) { return f.slope == 0.0; },
                        [](const PiecewiseConstantFn&) { return true; },
                        [](const PolynomialFn& f) {
                          return std::all_of(f.coeffs.begin() + 1, f.coeffs.end(),
                                             [](double c) { return c == 0.0; });
                        },
                    },
                    family_);
}

// ---------------------------------------------------------------------------
// DomainRegion

std::string to_string(DomainKind kind) {
  switch (kind) {
    case DomainKind::box:
      return "box";
    case DomainKind::under_curve:
      return "under_curve";
    case DomainKind::indicator:
      return "indicator";
  }
  return "unknown";
}

namespace {

void check_box(const Box& box) {
  require(box.dim() > 0, "domain: dimension must be positive");
  require(box.upper.size() == box.dim(), "domain: lower and upper must have equal length");
  require(all_finite(box.lower) && all_finite(box.upper), "domain: bounds must be finite");
  for (std::size_t k = 0; k < box.dim(); ++k) {
    require(box.lower[k] < box.upper[k], "domain: lower must be strictly below upper");
  }
}

bool predicate_holds(const Predicate& predicate, std::span<const double> v) {
  return std::visit(Overloaded{
                        [v](const Ball& b) {
                          double r2 = 0.0;
                          for (std::size_t k = 0; k < v.size(); ++k) {
                            const double d = v[k] - b.center[k];
                            r2 += d * d;
                          }
                          return r2 <= b.radius * b.radius;
                        },
                        [v](const Halfspaces& h) {
                          for (std::size_t r = 0; r < h.normals.size(); ++r) {
                            double dot = 0.0;
                            for (std::size_t k = 0; k < v.size(); ++k) {
                              dot += h.normals[r][k] * v[k];
                            }
                            if (dot > h.offsets[r]) {
                              return false;
                            }
                          }
                          return true;
                        },
                    },
                    predicate);
}

}  // namespace

DomainRegion DomainRegion::box(std::vector<double> lower, std::vector<double> upper,
                               std::optional<double> measure_hint) {
  DomainRegion d;
  d.kind_ = DomainKind::box;
  d.bounding_ = Box{std::move(lower), std::move(upper)};
  check_box(d.bounding_);
  d.finish(measure_hint);
  return d;
}

DomainRegion DomainRegion::under_curve(double horizon, ScalarFunction rate,
                                       std::optional<double> rate_max,
                                       std::optional<double> measure_hint) {
  require(std::isfinite(horizon) && horizon > 0.0, "under_curve: horizon T must be positive");
  UnderCurve shape{horizon, std::move(rate), 0.0, 0.0};
  shape.rate_min = shape.rate.lower_bound(0.0, horizon);
  require(shape.rate_min > 0.0, "under_curve: rate must be bounded below by a positive constant");
  const double certified = shape.rate.upper_bound(0.0, horizon);
  if (rate_max) {
    require(std::isfinite(*rate_max), "under_curve: lambda_max must be finite");
    // A supplied bound may be looser than the certified one but never below
    // an observed value of the rate.
    const double observed = std::max({shape.rate(0.0), shape.rate(horizon),
                                      shape.rate.lower_bound(0.0, horizon)});
    double sampled = observed;
    for (int i = 0; i <= kBoundGrid; ++i) {
      sampled = std::max(sampled, shape.rate(horizon * i / kBoundGrid));
    }
    for (double b : shape.rate.breakpoints()) {
      if (b >= 0.0 && b <= horizon) {
        sampled = std::max(sampled, shape.rate(b));
      }
    }
    require(*rate_max >= sampled, "under_curve: lambda_max is below the rate function");
    shape.rate_max = *rate_max;
  } else {
    shape.rate_max = certified;
  }
  DomainRegion d;
  d.kind_ = DomainKind::under_curve;
  d.bounding_ = Box{{0.0, 0.0}, {horizon, shape.rate_max}};
  d.shape_ = std::move(shape);
  d.finish(measure_hint);
  return d;
}

DomainRegion DomainRegion::indicator(Box bounding, Predicate predicate,
                                     std::optional<double> measure_hint) {
  check_box(bounding);
  const std::size_t dim = bounding.dim();
  std::visit(Overloaded{
                 [dim](const Ball& b) {
                   require(b.center.size() == dim, "ball: center dimension mismatch");
                   require(all_finite(b.center) && std::isfinite(b.radius) && b.radius > 0.0,
                           "ball: radius must be positive");
                 },
                 [dim](const Halfspaces& h) {
                   require(!h.normals.empty(), "halfspaces: need at least one constraint");
                   require(h.normals.size() == h.offsets.size(),
                           "halfspaces: normals and offsets must have equal length");
                   for (const auto& n : h.normals) {
                     require(n.size() == dim && all_finite(n), "halfspaces: normal dimension mismatch");
                   }
                   require(all_finite(h.offsets), "halfspaces: offsets must be finite");
                 },
             },
             predicate);
  DomainRegion d;
  d.kind_ = DomainKind::indicator;
  d.bounding_ = std::move(bounding);
  d.shape_ = std::move(predicate);
  d.finish(measure_hint);
  return d;
}

void DomainRegion::finish(std::optional<double> measure_hint) {
  const MeasureResult computed = compute_measure(*this);
  require(computed.value > 0.0, "domain: region has zero measure");
  measure_ = computed.value;
  measure_error_ = computed.error;
  if (measure_hint) {
    require(std::fabs(*measure_hint - computed.value) <= 1e-6 * computed.value + computed.error,
            "domain: measure_hint disagrees with the computed measure");
    measure_ = *measure_hint;
  }
}

bool DomainRegion::contains(std::span<const double> v) const {
  require(v.size() == dim(), "contains: point dimension does not match the domain");
  return contains_unchecked(v);
}

bool DomainRegion::contains_unchecked(std::span<const double> v) const {
  switch (kind_) {
    case DomainKind::box:
      return bounding_.contains(v);
    case DomainKind::under_curve: {
      const auto& uc = std::get<UnderCurve>(shape_);
      return v[0] >= 0.0 && v[0] <= uc.horizon && v[1] >= 0.0 && v[1] <= uc.rate(v[0]);
    }
    case DomainKind::indicator:
      return bounding_.contains(v) && predicate_holds(std::get<Predicate>(shape_), v);
  }
  return false;
}

MeasureResult compute_measure(const DomainRegion& domain) {
  switch (domain.kind()) {
    case DomainKind::box:
      return {domain.bounding_box().volume(), 0.0};
    case DomainKind::under_curve: {
      const auto& uc = *domain.under_curve();
      const auto breaks = uc.rate.breakpoints();
      const auto r = integrate_1d([&uc](double s) { return uc.rate(s); }, 0.0, uc.horizon, breaks,
                                  1e-12 * (1.0 + uc.rate_max * uc.horizon));
      return {r.value, r.error};
    }
    case DomainKind::indicator: {
      IntegrationRegion region;
      region.bounding = domain.bounding_box();
      region.pieces = {WeightedBox{region.bounding, 1.0}};
      region.member = [&domain](std::span<const double> v) { return domain.contains_unchecked(v); };
      IntegrationOptions options;
      options.tol = 1e-6 * region.bounding.volume();
      options.base_level = domain.dim() <= 2 ? 4 : 3;
      options.max_refinements = domain.dim() <= 2 ? 12 : 7;
      options.cross_check = false;
      const auto r = integrate_over_region(
          [](std::span<const double>, std::span<double> out) { out[0] = 1.0; }, 1, 1, region,
          options);
      return {r.value(0, 0), r.error};
    }
  }
  return {};
}

double measure(const DomainRegion& domain) { return compute_measure(domain).value; }

bool contains(const DomainRegion& domain, std::span<const double> v) { return domain.contains(v); }

// ---------------------------------------------------------------------------
// Mean and covariance families

MeanFunction::MeanFunction(std::size_t mark_dim, Family family)
    : mark_dim_(mark_dim), family_(std::move(family)) {
  require(mark_dim_ > 0, "mean: mark dimension must be positive");
  auto check_vec = [this](const Vector& v, const char* what) {
    require(static_cast<std::size_t>(v.size()) == mark_dim_,
            std::string(what) + ": vector length must equal d2");
    require(v.allFinite(), std::string(what) + ": values must be finite");
  };
  std::visit(Overloaded{
                 [](const ZeroMean&) {},
                 [&](const ConstantMean& f) { check_vec(f.value, "mean constant"); },
                 [&](const AffineMean& f) {
                   check_vec(f.offset, "mean affine offset");
                   require(static_cast<std::size_t>(f.matrix.rows()) == mark_dim_ && f.matrix.cols() > 0,
                           "mean affine: matrix must be d2 x d1");
                   require(f.matrix.allFinite(), "mean affine: matrix must be finite");
                 },
                 [&](const PiecewiseConstantMean& f) {
                   check_breaks(f.breaks, f.values.size(), "mean piecewise_constant");
                   for (const auto& v : f.values) {
                     check_vec(v, "mean piecewise_constant");
                   }
                 },
                 [&](const PolynomialMean& f) {
                   require(!f.coeffs.empty(), "mean polynomial: need at least one coefficient");
                   for (const auto& v : f.coeffs) {
                     check_vec(v, "mean polynomial");
                   }
                 },
             },
             family_);
}

std::string MeanFunction::family_name() const {
  return std::visit(Overloaded{
                        [](const ZeroMean&) { return std::string("zero"); },
                        [](const ConstantMean&) { return std::string("constant"); },
                        [](const AffineMean&) { return std::string("affine"); },
                        [](const PiecewiseConstantMean&) { return std::string("piecewise_constant"); },
                        [](const PolynomialMean&) { return std::string("polynomial"); },
                    },
                    family_);
}

bool MeanFunction::is_zero() const {
  return std::visit(Overloaded{
                        [](const ZeroMean&) { return true; },
                        [](const ConstantMean& f) { return f.value.isZero(0.0); },
                        [](const AffineMean& f) { return f.offset.isZero(0.0) && f.matrix.isZero(0.0); },
                        [](const PiecewiseConstantMean& f) {
                          return std::all_of(f.values.begin(), f.values.end(),
                                             [](const Vector& v) { return v.isZero(0.0); });
                        },
                        [](const PolynomialMean& f) {
                          return std::all_of(f.coeffs.begin(), f.coeffs.end(),
                                             [](const Vector& v) { return v.isZero(0.0); });
                        },
                    },
                    family_);
}

bool MeanFunction::independent_of(std::size_t coord) const {
  return std::visit(Overloaded{
                        [](const ZeroMean&) { return true; },
                        [](const ConstantMean&) { return true; },
                        [coord](const AffineMean& f) {
                          return coord >= static_cast<std::size_t>(f.matrix.cols()) ||
                                 f.matrix.col(static_cast<Eigen::Index>(coord)).isZero(0.0);
                        },
                        [coord](const PiecewiseConstantMean& f) { return f.coord != coord; },
                        [coord](const PolynomialMean& f) { return f.coord != coord || f.coeffs.size() == 1; },
                    },
                    family_);
}

std::optional<std::size_t> MeanFunction::max_coord() const {
  return std::visit(Overloaded{
                        [](const ZeroMean&) -> std::optional<std::size_t> { return std::nullopt; },
                        [](const ConstantMean&) -> std::optional<std::size_t> { return std::nullopt; },
                        [](const AffineMean& f) -> std::optional<std::size_t> {
                          return static_cast<std::size_t>(f.matrix.cols()) - 1;
                        },
                        [](const PiecewiseConstantMean& f) -> std::optional<std::size_t> { return f.coord; },
                        [](const PolynomialMean& f) -> std::optional<std::size_t> { return f.coord; },
                    },
                    family_);
}

std::vector<double> MeanFunction::breakpoints(std::size_t coord) const {
  if (const auto* f = std::get_if<PiecewiseConstantMean>(&family_); f && f->coord == coord) {
    return f->breaks;
  }
  return {};
}

void MeanFunction::evaluate(std::span<const double> v, std::span<double> out) const {
  std::visit(Overloaded{
                 [&](const ZeroMean&) { std::fill(out.begin(), out.end(), 0.0); },
                 [&](const ConstantMean& f) {
                   for (std::size_t r = 0; r < mark_dim_; ++r) {
                     out[r] = f.value[static_cast<Eigen::Index>(r)];
                   }
                 },
                 [&](const AffineMean& f) {
                   for (std::size_t r = 0; r < mark_dim_; ++r) {
                     const auto row = static_cast<Eigen::Index>(r);
                     double acc = f.offset[row];
                     for (Eigen::Index c = 0; c < f.matrix.cols(); ++c) {
                       acc += f.matrix(row, c) * v[static_cast<std::size_t>(c)];
                     }
                     out[r] = acc;
                   }
                 },
                 [&](const PiecewiseConstantMean& f) {
                   const Vector& value = f.values[piece_index(f.breaks, v[f.coord])];
                   for (std::size_t r = 0; r < mark_dim_; ++r) {
                     out[r] = value[static_cast<Eigen::Index>(r)];
                   }
                 },
                 [&](const PolynomialMean& f) {
                   const double x = v[f.coord];
                   std::fill(out.begin(), out.end(), 0.0);
                   for (auto it = f.coeffs.rbegin(); it != f.coeffs.rend(); ++it) {
                     for (std::size_t r = 0; r < mark_dim_; ++r) {
                       out[r] = out[r] * x + (*it)[static_cast<Eigen::Index>(r)];
                     }
                   }
                 },
             },
             family_);
}

Vector MeanFunction::operator()(std::span<const double> v) const {
  Vector out(static_cast<Eigen::Index>(mark_dim_));
  evaluate(v, std::span<double>(out.data(), mark_dim_));
  return out;
}

CovarianceFunction::CovarianceFunction(Family family) : mark_dim_(0), family_(std::move(family)) {
  std::visit(Overloaded{
                 [this](const ConstantCov& f) {
                   check_psd(f.matrix, "cov constant");
                   mark_dim_ = static_cast<std::size_t>(f.matrix.rows());
                 },
                 [this](const PiecewiseConstantCov& f) {
                   check_breaks(f.breaks, f.matrices.size(), "cov piecewise_constant");
                   for (const auto& m : f.matrices) {
                     check_psd(m, "cov piecewise_constant");
                     require(m.rows() == f.matrices.front().rows(),
                             "cov piecewise_constant: matrices must share one dimension");
                   }
                   mark_dim_ = static_cast<std::size_t>(f.matrices.front().rows());
                 },
                 [this](const ScaledCov& f) {
                   check_psd(f.matrix, "cov scaled");
                   mark_dim_ = static_cast<std::size_t>(f.matrix.rows());
                 },
             },
             family_);
}

std::string CovarianceFunction::family_name() const {
  return std::visit(Overloaded{
                        [](const ConstantCov&) { return std::string("constant"); },
                        [](const PiecewiseConstantCov&) { return std::string("piecewise_constant"); },
                        [](const ScaledCov& f) { return f.scale.family_name(); },
                    },
                    family_);
}

std::optional<std::size_t> CovarianceFunction::max_coord() const {
  return std::visit(Overloaded{
                        [](const ConstantCov&) -> std::optional<std::size_t> { return std::nullopt; },
                        [](const PiecewiseConstantCov& f) -> std::optional<std::size_t> { return f.coord; },
                        [](const ScaledCov& f) -> std::optional<std::size_t> { return f.coord; },
                    },
                    family_);
}

std::vector<double> CovarianceFunction::breakpoints(std::size_t coord) const {
  if (const auto* f = std::get_if<PiecewiseConstantCov>(&family_); f && f->coord == coord) {
    return f->breaks;
  }
  if (const auto* f = std::get_if<ScaledCov>(&family_); f && f->coord == coord) {
    return f->scale.breakpoints();
  }
  return {};
}

void CovarianceFunction::evaluate(std::span<const double> v, std::span<double> out) const {
  const std::size_t n = mark_dim_ * mark_dim_;
  std::visit(Overloaded{
                 [&](const ConstantCov& f) { std::copy_n(f.matrix.data(), n, out.begin()); },
                 [&](const PiecewiseConstantCov& f) {
                   std::copy_n(f.matrices[piece_index(f.breaks, v[f.coord])].data(), n, out.begin());
                 },
                 [&](const ScaledCov& f) {
                   const double s = f.scale(v[f.coord]);
                   for (std::size_t e = 0; e < n; ++e) {
                     out[e] = s * f.matrix.data()[e];
                   }
                 },
             },
             family_);
}

Matrix CovarianceFunction::operator()(std::span<const double> v) const {
  const auto d = static_cast<Eigen::Index>(mark_dim_);
  Matrix out(d, d);
  evaluate(v, std::span<double>(out.data(), mark_dim_ * mark_dim_));
  return out;
}

std::string to_string(NoiseFamily noise) {
  switch (noise) {
    case NoiseFamily::gaussian:
      return "gaussian";
    case NoiseFamily::rademacher:
      return "rademacher";
    case NoiseFamily::uniform:
      return "uniform";
  }
  return "unknown";
}

MarkModel::MarkModel(MeanFunction mean, CovarianceFunction cov, NoiseFamily noise)
    : mean_(std::move(mean)), cov_(std::move(cov)), noise_(noise) {
  require(mean_.mark_dim() == cov_.mark_dim(), "marks: mean and covariance dimensions differ");
}

ModelSpec::ModelSpec(DomainRegion domain_in, MarkModel marks_in, double intensity_in)
    : domain(std::move(domain_in)), marks(std::move(marks_in)), intensity(intensity_in) {
  require(std::isfinite(intensity) && intensity > 0.0, "model: intensity nu must be positive");
  const std::size_t d1 = domain.dim();
  if (auto c = marks.mean().max_coord()) {
    require(*c < d1, "marks: mean refers to a coordinate outside the domain dimension");
  }
  if (const auto* affine = std::get_if<AffineMean>(&marks.mean().family())) {
    require(static_cast<std::size_t>(affine->matrix.cols()) == d1,
            "marks: affine mean matrix must have d1 columns");
  }
  if (auto c = marks.cov().max_coord()) {
    require(*c < d1, "marks: covariance refers to a coordinate outside the domain dimension");
  }
  if (const auto* scaled = std::get_if<ScaledCov>(&marks.cov().family())) {
    const Box& box = domain.bounding_box();
    require(scaled->scale.lower_bound(box.lower[scaled->coord], box.upper[scaled->coord]) >= 0.0,
            "marks: covariance scale must be nonnegative on the domain");
  }
}

ModelSpec ModelSpec::with_intensity(double nu) const { return ModelSpec(domain, marks, nu); }

bool ModelSpec::supports_time_intensity() const {
  return domain.kind() == DomainKind::under_curve && marks.mean().independent_of(1);
}

ConditionalMoments cond_moments(const MarkModel& marks, std::span<const double> v) {
  ConditionalMoments out{marks.mean()(v), marks.cov()(v)};
  require(is_symmetric(out.covariance, 1e-12), "cond_moments: covariance is not symmetric");
  require(min_eigenvalue(out.covariance) >= -1e-10,
          "cond_moments: covariance is not positive semidefinite");
  return out;
}

Matrix factorize(const Matrix& cov) {
  require(cov.rows() == cov.cols() && cov.rows() > 0, "factorize: matrix must be square");
  require(cov.allFinite(), "factorize: matrix must be finite");
  require(is_symmetric(cov, 1e-12), "factorize: matrix must be symmetric");
  const Eigen::Index n = cov.rows();
  const double pivot_floor = 64.0 * std::numeric_limits<double>::epsilon() *
                             std::max(1.0, cov.diagonal().cwiseAbs().maxCoeff());
  Matrix lower = Matrix::Zero(n, n);
  bool degenerate = false;
  for (Eigen::Index j = 0; j < n; ++j) {
    double pivot = cov(j, j) - lower.row(j).head(j).squaredNorm();
    if (pivot <= pivot_floor) {
      degenerate = true;
      continue;
    }
    const double root = std::sqrt(pivot);
    lower(j, j) = root;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      lower(i, j) = (cov(i, j) - lower.row(i).head(j).dot(lower.row(j).head(j))) / root;
    }
  }
  if (degenerate) {
    require(min_eigenvalue(cov) >= -1e-10, "factorize: matrix is indefinite");
  }
  return lower;
}

}  // namespace cpf
